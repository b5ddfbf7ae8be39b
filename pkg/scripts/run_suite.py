#!/usr/bin/env python3
"""Run the certificate pipeline over every bundled problem.

Writes one certificate JSON per problem into --outdir and prints a slack
table.  Exits nonzero if any certificate fails its independent recheck.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from mdmvi import ProblemSpec, run, verify_certificate
from mdmvi.cli import bundled_problems


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="certificates")
    parser.add_argument("problems", nargs="*", help="spec files (default: bundled)")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = args.problems or bundled_problems()

    header = f"{'problem':30s} {'time':>6s} {'value':>9s} {'norm':>9s} {'increment':>9s}  ok"
    print(header)
    print("-" * len(header))
    failures = 0
    for path in paths:
        ps = ProblemSpec.from_json_file(path)
        t0 = time.monotonic()
        cert = run(ps)
        elapsed = time.monotonic() - t0
        valid, _ = verify_certificate(cert, ps)
        failures += 0 if valid else 1
        name = Path(path).stem
        out = outdir / f"{name}.certificate.json"
        out.write_text(json.dumps(cert.to_json_dict(), indent=2, sort_keys=True) + "\n")
        chk = cert.checks
        print(
            f"{name:30s} {elapsed:5.1f}s "
            f"{chk['value_localization'].slack:9.4f} "
            f"{chk['subgradient_norm'].slack:9.4f} "
            f"{chk['mean_value_increment'].slack:9.4f}  {'yes' if valid else 'NO'}"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

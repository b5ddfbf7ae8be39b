#!/usr/bin/env python3
"""Dump tent and smoothing profiles for a problem to CSV for plotting.

Produces <stem>.psi.csv (hull grid) and <stem>.phi.csv (inflated grid)
next to --outdir, using the pipeline-chosen tent parameters.
"""

import argparse
import sys
from pathlib import Path

from mdmvi.cli import run_command


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("spec")
    parser.add_argument("--grid", type=int, default=201)
    parser.add_argument("--outdir", default=".")
    args = parser.parse_args()

    stem = Path(args.spec).stem
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rc = run_command(
        ["eval-psi", args.spec, "--grid", str(args.grid), "--out", str(outdir / f"{stem}.psi.csv")]
    )
    if rc:
        return rc
    return run_command(
        ["eval-phi", args.spec, "--grid", str(args.grid), "--out", str(outdir / f"{stem}.phi.csv")]
    )


if __name__ == "__main__":
    sys.exit(main())

from pathlib import Path

import numpy as np
import pytest

from mdmvi import Polytope, ProblemSpec, SupConvSpec, TentSpec


@pytest.fixture(scope="session")
def seg_a():
    return Polytope([[0.0]])


@pytest.fixture(scope="session")
def seg_b():
    return Polytope([[1.0]])


@pytest.fixture(scope="session")
def unit_tent(seg_a, seg_b):
    """The segment tent used across examples: A={0}, B={1}, r=0, s=1."""
    return TentSpec(seg_a, seg_b, 0.0, 1.0)


@pytest.fixture(scope="session")
def unit_smoothing(unit_tent):
    return SupConvSpec(unit_tent, 2.0)


@pytest.fixture(scope="session")
def problems_dir():
    import mdmvi

    return Path(mdmvi.__file__).parent / "problems"


@pytest.fixture(scope="session")
def canonical_spec(problems_dir):
    return ProblemSpec.from_json_file(problems_dir / "canonical_1d.json")


@pytest.fixture(scope="session")
def suite_results(problems_dir):
    """Certificates for every bundled problem, shared across test modules."""
    import time

    from mdmvi import run, verify_certificate

    out = {}
    for path in sorted(problems_dir.glob("*.json")):
        ps = ProblemSpec.from_json_file(path)
        t0 = time.monotonic()
        cert = run(ps)
        elapsed = time.monotonic() - t0
        valid, report = verify_certificate(cert, ps)
        out[path.stem] = {
            "spec": ps,
            "cert": cert,
            "elapsed": elapsed,
            "valid": valid,
            "report": report,
        }
    return out


def grid_1d(lo, hi, n):
    return np.linspace(lo, hi, n)[:, None]

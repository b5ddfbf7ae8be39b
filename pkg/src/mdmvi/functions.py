"""Catalog of lower semicontinuous test functions with exact value and
subgradient-representative oracles.

Subdifferentials are exposed as finite representative sets: extreme points
for the convex members (active-piece gradients of a max-affine, the unit
sphere representatives of the norm at its center), the gradient for smooth
members, and the empty set outside the effective domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    Polytope,
    _direction_net,
    as_point,
    dist_to_hull,
)

DEFAULT_CHECK_TOL = 1e-7
_ACTIVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Domain:
    """Effective-domain descriptor: everything, a polytope, or a halfspace."""

    kind: str = "all"  # "all" | "polytope" | "halfspace" | "hull_inflation"
    polytope: Polytope | None = None
    normal: np.ndarray | None = None
    offset: float = 0.0
    region: object | None = None  # HullInflation for restricted pipelines

    def classify(self, x, tol: float = 1e-9) -> str:
        if self.kind == "all":
            return INTERIOR
        if self.kind == "halfspace":
            slack = self.offset - float(self.normal @ x)
            if slack > tol:
                return INTERIOR
            return BOUNDARY if slack >= -tol else EXTERIOR
        if self.kind == "hull_inflation":
            return self.region.classify(x, tol=max(tol, 1e-9))
        P = self.polytope
        d = dist_to_hull(x, P, P).d
        if d > tol:
            return EXTERIOR
        dirs = _direction_net(P.dim)
        margin = float(np.min(np.max(P.vertices @ dirs.T, axis=0) - dirs @ x))
        return INTERIOR if margin > max(tol, 1e-9) else BOUNDARY

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.classify(x, tol) != EXTERIOR


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Lsc function with exact value and subgradient-representative oracles."""

    __test__ = False  # keep pytest from collecting this as a test class

    fid: str
    params: dict
    dim: int
    value: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], list[np.ndarray]]
    domain: Domain = field(default_factory=Domain)


def f_eval(f: TestFunction, x) -> float:
    return float(f.value(as_point(x, f.dim)))


def f_subgrad(f: TestFunction, x) -> list[np.ndarray]:
    return f.subgrad(as_point(x, f.dim))


def eps_subdiff_check(
    f: TestFunction, x, p, eps: float, grid, tol_check: float = DEFAULT_CHECK_TOL
) -> bool:
    """True iff <p, z - x> <= f(z) - f(x) + eps + tol_check on the grid
    (points outside dom f impose no constraint)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = as_point(x, f.dim)
    p = as_point(p, f.dim)
    fx = f_eval(f, x)
    if not np.isfinite(fx):
        raise ValueError("f(x) must be finite")
    for z in np.asarray(grid, dtype=float):
        fz = f_eval(f, z)
        if not np.isfinite(fz):
            continue
        if float(p @ (z - x)) > fz - fx + eps + tol_check:
            return False
    return True


def linear(a, b: float = 0.0) -> TestFunction:
    a = as_point(a)

    return TestFunction(
        fid="linear",
        params={"a": a.tolist(), "b": float(b)},
        dim=a.size,
        value=lambda x: float(a @ x) + b,
        subgrad=lambda x: [a.copy()],
    )


def quadratic(Q, a) -> TestFunction:
    a = as_point(a)
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    if Q.shape != (a.size, a.size):
        raise ValueError("Q must be square and match a")
    if np.min(np.linalg.eigvalsh(Q)) < -1e-9:
        raise ValueError("quadratic catalog member must be convex")

    return TestFunction(
        fid="quadratic",
        params={"Q": Q.tolist(), "a": a.tolist()},
        dim=a.size,
        value=lambda x: 0.5 * float(x @ Q @ x) + float(a @ x),
        subgrad=lambda x: [Q @ x + a],
    )


def l2_norm(x0) -> TestFunction:
    x0 = as_point(x0)
    n = x0.size

    def subgrad(x):
        d = x - x0
        nrm = np.linalg.norm(d)
        if nrm > 1e-12:
            return [d / nrm]
        reps = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            reps.extend([e, -e])
        return reps

    return TestFunction(
        fid="l2_norm",
        params={"x0": x0.tolist()},
        dim=n,
        value=lambda x: float(np.linalg.norm(x - x0)),
        subgrad=subgrad,
    )


def max_affine(slopes, offsets) -> TestFunction:
    S = np.atleast_2d(np.asarray(slopes, dtype=float))
    b = np.atleast_1d(np.asarray(offsets, dtype=float))
    if S.shape[0] != b.size:
        raise ValueError("one offset per affine piece")

    def value(x):
        return float(np.max(S @ x + b))

    def subgrad(x):
        vals = S @ x + b
        top = float(np.max(vals))
        active = np.nonzero(vals >= top - _ACTIVE_TOL * (1.0 + abs(top)))[0]
        return [S[i].copy() for i in active]

    return TestFunction(
        fid="max_affine",
        params={"slopes": S.tolist(), "offsets": b.tolist()},
        dim=S.shape[1],
        value=value,
        subgrad=subgrad,
    )


def sin_quadratic(c: float, w, Q, a) -> TestFunction:
    """Smooth nonconvex member c * sin(<w, x>) plus a convex quadratic."""
    w = as_point(w)
    a = as_point(a, w.size)
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)

    return TestFunction(
        fid="sin_quadratic",
        params={"c": float(c), "w": w.tolist(), "Q": Q.tolist(), "a": a.tolist()},
        dim=w.size,
        value=lambda x: c * float(np.sin(w @ x)) + 0.5 * float(x @ Q @ x) + float(a @ x),
        subgrad=lambda x: [c * np.cos(w @ x) * w + Q @ x + a],
    )


def restricted(base: TestFunction, domain: Polytope) -> TestFunction:
    """base plus the indicator of a polytope; boundary points keep the value
    but expose no subgradients (conservative under locality)."""
    if domain.dim != base.dim:
        raise ValueError("domain dimension must match the base function")
    dom = Domain(kind="polytope", polytope=domain)

    def value(x):
        return base.value(x) if dom.contains(x) else np.inf

    def subgrad(x):
        return base.subgrad(x) if dom.classify(x) == INTERIOR else []

    return TestFunction(
        fid="restricted",
        params={
            "base": {"id": base.fid, "params": base.params},
            "domain": domain.to_json(),
        },
        dim=base.dim,
        value=value,
        subgrad=subgrad,
        domain=dom,
    )


def make_function(fid: str, params: dict, dim: int | None = None) -> TestFunction:
    """Build a catalog member from its JSON id and parameters."""
    try:
        if fid == "linear":
            return linear(params["a"], params.get("b", 0.0))
        if fid == "quadratic":
            return quadratic(params["Q"], params["a"])
        if fid == "l2_norm":
            return l2_norm(params["x0"])
        if fid == "max_affine":
            return max_affine(params["slopes"], params["offsets"])
        if fid == "sin_quadratic":
            return sin_quadratic(params["c"], params["w"], params["Q"], params["a"])
        if fid == "restricted":
            base = make_function(params["base"]["id"], params["base"]["params"])
            return restricted(base, Polytope.from_json(params["domain"]))
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc} for function id {fid!r}") from exc
    raise ValueError(f"unknown function id {fid!r}")

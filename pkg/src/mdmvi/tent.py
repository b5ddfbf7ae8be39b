"""The concave tent over a pair of polytopes: the function whose hypograph
is the convex hull of A x (-inf, r] and B x (-inf, s].

On the joint hull [A,B] the tent is evaluated exactly by a small LP; it is
minus infinity outside.  The LP dual yields an exact supergradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import HullCoords, Polytope, as_point, inf_linear
from .simplex_optim import LPProblem, solve_lp

DEFAULT_CHECK_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class TentSpec:
    """Anchor sets A, B with levels r over A and s over B; r != s."""

    A: Polytope
    B: Polytope
    r: float
    s: float

    def __post_init__(self):
        if self.A.dim != self.B.dim:
            raise ValueError("A and B must share a dimension")
        for v in (self.r, self.s):
            if not np.isfinite(v):
                raise ValueError("levels must be finite")
        if self.r == self.s:
            raise ValueError("tent levels r and s must differ")
        V = np.vstack([self.A.vertices, self.B.vertices])
        levels = np.concatenate(
            [np.full(self.A.num_vertices, float(self.r)),
             np.full(self.B.num_vertices, float(self.s))]
        )
        object.__setattr__(self, "_V", V)
        object.__setattr__(self, "_levels", levels)
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return self.A.dim

    def vertex_matrix(self) -> np.ndarray:
        return self._V

    def vertex_levels(self) -> np.ndarray:
        return self._levels


@dataclass(frozen=True, eq=False)
class PsiValue:
    """Tent value at a point; -inf with no coordinates outside the hull.

    ``slope`` is an exact supergradient extracted from the LP dual (None
    outside the hull).
    """

    value: float
    coords: HullCoords | None
    slope: np.ndarray | None = None

    @property
    def lam(self) -> float | None:
        return None if self.coords is None else self.coords.lam


class SuperdiffCheck(NamedTuple):
    ok: bool
    worst_violation: float


class IncrementBound(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


def psi_eval(x, t: TentSpec) -> PsiValue:
    """Exact tent value via the hull-decomposition LP.

    Maximizes r * sum(gamma) + s * sum(eta) over decompositions of x as a
    convex combination of the vertices; infeasibility means x is outside
    [A,B] and the value is -inf.
    """
    x = as_point(x, t.dim)
    key = x.tobytes()
    cached = t._cache.get(key)
    if cached is not None:
        return cached
    V = t.vertex_matrix()
    m = V.shape[0]
    lp = LPProblem(
        objective=t.vertex_levels(),
        eq_matrix=np.vstack([V.T, np.ones((1, m))]),
        eq_rhs=np.concatenate([x, [1.0]]),
    )
    res = solve_lp(lp)
    if res.status != "optimal":
        out = PsiValue(-np.inf, None, None)
    else:
        mA = t.A.num_vertices
        coords = HullCoords(res.x[:mA], res.x[mA:]).validate(1e-9)
        out = PsiValue(float(res.value), coords, res.dual[: t.dim].copy())
    t._cache[key] = out
    return out


def psi_value(x, t: TentSpec) -> float:
    return psi_eval(x, t).value


def psi_on_grid(t: TentSpec, pts: np.ndarray) -> np.ndarray:
    return np.array([psi_eval(z, t).value for z in np.asarray(pts, dtype=float)])


def psi_supergradient(x, t: TentSpec) -> np.ndarray:
    """Exact supergradient of the tent at a hull point, from the LP dual.

    Valid globally: dual feasibility gives <p, z - x> >= psi(z) - psi(x)
    for every z in the hull.
    """
    v = psi_eval(x, t)
    if v.slope is None:
        raise ValueError("tent is -inf at x; no supergradient exists")
    return v.slope


def eps_superdiff_check_psi(
    p, x, eps: float, t: TentSpec, grid, tol_check: float = DEFAULT_CHECK_TOL
) -> SuperdiffCheck:
    """Grid check of p being an eps-supergradient of the tent at x.

    worst_violation is max over finite-tent grid points z of
    (psi(z) - psi(x) - <p, z - x>) - eps; ok means it stays below
    tol_check.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = as_point(x, t.dim)
    p = as_point(p, t.dim)
    vx = psi_eval(x, t).value
    if not np.isfinite(vx):
        raise ValueError("tent is -inf at x")
    pts = np.asarray(grid, dtype=float)
    vals = psi_on_grid(t, pts)
    finite = np.isfinite(vals)
    if not finite.any():
        return SuperdiffCheck(True, float("-inf"))
    gains = vals[finite] - vx - (pts[finite] - x) @ p
    worst = float(np.max(gains) - eps)
    return SuperdiffCheck(worst <= tol_check, worst)


def tent_increment_bound_check(
    p, x0, eps: float, t: TentSpec, tol_check: float = DEFAULT_CHECK_TOL
) -> IncrementBound:
    """Check the increment bound satisfied by eps-supergradients of the tent:

        inf_A p - inf_B p  <=  (r - s) + (r - s) / (psi(x0) - s) * eps.

    Only meaningful for p known to be an eps-supergradient at x0; the
    formula is evaluated verbatim in both orderings of r and s.
    """
    x0 = as_point(x0, t.dim)
    p = as_point(p, t.dim)
    v0 = psi_eval(x0, t).value
    if not np.isfinite(v0):
        raise ValueError("tent is -inf at x0")
    if abs(v0 - t.s) < 1e-10:
        raise ValueError("psi(x0) equals the level s; bound undefined")
    lhs = inf_linear(p, t.A) - inf_linear(p, t.B)
    rhs = (t.r - t.s) + (t.r - t.s) / (v0 - t.s) * eps
    return IncrementBound(lhs <= rhs + tol_check, float(lhs), float(rhs))

"""Approximate minimization of g = f1 - phi_K with a verified domination
certificate, plus extraction of nearly-cancelling subgradient pairs.

The existential minimization step is realized constructively: multistart
local descent seeded from a grid, followed by an a-posteriori grid check
of the domination inequality g(z) + eps ||z - u|| >= g(u).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .functions import TestFunction, f_eval, f_subgrad
from .geometry import HullInflation, as_point, sample_set
from .simplex_optim import golden_max
from .supconv import SupConvSpec, SupergradientError, phi_eval, phi_on_grid

DEFAULT_EVP_TOL = 1e-6
DEFAULT_RESIDUAL_FACTOR = 10.0


class DescentError(RuntimeError):
    """The restricted objective has an empty domain or the search stalled."""


class FuzzyPairError(RuntimeError):
    """No subgradient pair met the residual threshold near this point."""


@dataclass(frozen=True, eq=False)
class EkelandPoint:
    u: np.ndarray
    eps: float
    value: float  # f1(u) - phi_K(u)


@dataclass(frozen=True, eq=False)
class FuzzyPair:
    x: np.ndarray
    p: np.ndarray
    y: np.ndarray
    q: np.ndarray
    residual: float  # ||p + q||
    separation: float  # ||x - y||


def _g_eval(z: np.ndarray, f1: TestFunction, sc: SupConvSpec, tol: float = 1e-8) -> float:
    fv = f_eval(f1, z)
    if not np.isfinite(fv):
        return np.inf
    return fv - phi_eval(z, sc, tol=tol).value


def default_schedule() -> list[float]:
    return [10.0 ** (-1.0 - n / 2.0) for n in range(9)]


def minimize_g(
    f1: TestFunction,
    sc: SupConvSpec,
    region: HullInflation,
    schedule,
    resolution: int,
    seed: int = 0,
    phi_tol: float = 1e-8,
) -> list[EkelandPoint]:
    """Near-minimizers of g = f1 - phi_K on C, one per schedule entry.

    Multistart coordinate-and-random-direction descent with exact line
    searches, seeded from the best grid points.  Deterministic given the
    seed; ties break by lexicographic point order.
    """
    schedule = [float(e) for e in schedule]
    if not schedule or any(e <= 0 for e in schedule):
        raise ValueError("schedule entries must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly decreasing")

    grid = sample_set(region.A, region.B, region.delta, resolution)
    fvals = np.array([f_eval(f1, z) for z in grid])
    finite = np.isfinite(fvals)
    if not finite.any():
        raise DescentError("f1 is identically +inf on C")
    gvals = np.full(len(grid), np.inf)
    gvals[finite] = fvals[finite] - phi_on_grid(sc, grid[finite], tol=phi_tol)

    order = sorted(np.nonzero(finite)[0], key=lambda i: (gvals[i], tuple(grid[i])))
    seeds = [grid[i] for i in order[:3]]

    rng = np.random.default_rng(seed)
    dirs = [np.eye(region.A.dim)[i] for i in range(region.A.dim)]
    for _ in range(2):
        d = rng.standard_normal(region.A.dim)
        nrm = np.linalg.norm(d)
        if nrm > 1e-12:
            dirs.append(d / nrm)
    span = float(np.linalg.norm(grid.max(axis=0) - grid.min(axis=0))) + region.delta

    def descend(x0: np.ndarray) -> tuple[np.ndarray, float]:
        x = x0.copy()
        fx = _g_eval(x, f1, sc, tol=phi_tol)
        for _ in range(30):
            improved = False
            for d in dirs:
                t, neg = golden_max(
                    lambda s: -min(_g_eval(x + s * d, f1, sc, tol=phi_tol), 1e30),
                    -span,
                    span,
                    xtol=1e-10 * max(span, 1.0),
                )
                if -neg < fx - 1e-13:
                    x = x + t * d
                    fx = -neg
                    improved = True
            if not improved:
                break
        return x, fx

    best_x, best_f = None, np.inf
    for s in seeds:
        x, fx = descend(s)
        key = (fx, tuple(x))
        if best_x is None or key < (best_f, tuple(best_x)):
            best_x, best_f = x, fx

    return [EkelandPoint(u=best_x.copy(), eps=e, value=float(best_f)) for e in schedule]


class EvpReport(NamedTuple):
    ok: bool
    worst: float


def evp_verify(
    u,
    eps: float,
    f1: TestFunction,
    sc: SupConvSpec,
    grid,
    tol_evp: float = DEFAULT_EVP_TOL,
) -> EvpReport:
    """Grid check of the domination inequality around u:

        g(z) + eps ||z - u|| >= g(u) - tol_evp  for all grid z.

    worst is the smallest left-minus-right margin over the grid.
    """
    u = as_point(u)
    gu = _g_eval(u, f1, sc)
    if not np.isfinite(gu):
        raise ValueError("g(u) must be finite")
    worst = np.inf
    for z in np.asarray(grid, dtype=float):
        gz = _g_eval(z, f1, sc)
        if not np.isfinite(gz):
            continue
        worst = min(worst, gz + eps * float(np.linalg.norm(z - u)) - gu)
    return EvpReport(worst >= -tol_evp, float(worst))


def _perturbation_offsets(n: int, radius: float) -> list[np.ndarray]:
    offsets = [np.zeros(n)]
    signs = [
        np.array(c, dtype=float) - 1.0
        for c in itertools.product(range(3), repeat=n)
        if any(v != 1 for v in c)
    ]
    for rho in (radius / 8, radius / 4, radius / 2, radius):
        for s in signs:
            offsets.append(rho * s / np.linalg.norm(s))
    return offsets


def fuzzy_pair(
    u: EkelandPoint,
    f: TestFunction,
    sc: SupConvSpec,
    search_radius: float,
    grid: np.ndarray | None = None,
    k_residual: float = DEFAULT_RESIDUAL_FACTOR,
) -> FuzzyPair:
    """Nearly-cancelling pair: p from f's representatives at x, q from the
    negated smoothing supergradient at y, with x, y within search_radius
    of u.

    Minimizes residual plus separation over a deterministic perturbation
    pattern; fails loudly when the residual exceeds k_residual times the
    schedule entry of u (a kink coincidence the caller must refine past).
    """
    if search_radius <= 0:
        raise ValueError("search_radius must be positive")
    base = as_point(u.u, f.dim)
    best: FuzzyPair | None = None
    best_score = np.inf
    for off in _perturbation_offsets(f.dim, search_radius):
        y = base + off
        try:
            sg = phi_supergradient_cached(y, sc, grid)
        except SupergradientError:
            continue
        q = -sg.p
        x_cands = [y] if not off.any() else [y, base]
        for x in x_cands:
            if not np.isfinite(f_eval(f, x)):
                continue
            for p in f_subgrad(f, x):
                residual = float(np.linalg.norm(p + q))
                separation = float(np.linalg.norm(x - y))
                score = residual + separation
                if score < best_score - 1e-15:
                    best_score = score
                    best = FuzzyPair(
                        x=np.asarray(x, dtype=float).copy(),
                        p=np.asarray(p, dtype=float).copy(),
                        y=y.copy(),
                        q=q.copy(),
                        residual=residual,
                        separation=separation,
                    )
        if best is not None and best.residual <= 1e-12:
            break
    if best is None or best.residual > k_residual * u.eps:
        got = "none" if best is None else f"{best.residual:.3e}"
        raise FuzzyPairError(
            f"no pair with residual <= {k_residual * u.eps:.3e} near "
            f"{base.tolist()} (best {got}); refine the schedule"
        )
    return best


def phi_supergradient_cached(y: np.ndarray, sc: SupConvSpec, grid) -> "Supergradient":
    from .supconv import Supergradient, phi_supergradient

    key = ("fuzzy_sg", y.tobytes(), None if grid is None else id(grid))
    hit = sc._cache.get(key)
    if hit is not None:
        if isinstance(hit, SupergradientError):
            raise hit
        return hit
    try:
        sg = phi_supergradient(y, sc, grid=grid)
    except SupergradientError as exc:
        sc._cache[key] = exc
        raise
    sc._cache[key] = sg
    return sg

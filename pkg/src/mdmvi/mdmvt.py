"""End-to-end pipeline for the multidirectional mean value inequality.

Given a function f and polytopes A, B with level parameters, the pipeline
picks the tent and smoothing parameters, restricts f to the inflated hull
C, minimizes g = f1 - phi_K, extracts a nearly-cancelling pair, and
assembles a certificate (xi, p) for the three conclusion inequalities:

    value_localization:   f(xi) < inf over [A,B] of f + |r - s| + eps
    subgradient_norm:     ||p|| < (max(r, s) - mu) / delta + eps
    mean_value_increment: inf_B p - inf_A p > s - r

Certificates are recheckable by ``verify_certificate`` using only the
brute-force oracles and polytope geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import __version__ as _version
from .ekeland import (
    FuzzyPairError,
    HullInflation,
    default_schedule,
    evp_verify,
    fuzzy_pair,
    minimize_g,
)
from .functions import Domain, TestFunction, f_eval, f_subgrad, make_function
from .geometry import (
    INTERIOR,
    Polytope,
    as_point,
    classify_point,
    dist_to_hull,
    inf_linear,
    sample_set,
    _direction_net,
)
from .simplex_optim import golden_max
from .supconv import SupConvSpec, phi_eval, phi_on_grid, uv_disjoint
from .tent import TentSpec

_DEF_TOL = 1e-9


class SpecFormatError(ValueError):
    """The problem description is malformed (missing or ill-typed fields)."""


class SpecInvariantError(ValueError):
    """The problem violates a hypothesis needed by the construction."""


class CertificateSearchError(RuntimeError):
    """The schedule was exhausted without a valid certificate."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A concrete certificate problem: function, sets, and parameters."""

    f: TestFunction
    A: Polytope
    B: Polytope
    delta: float
    mu: float
    s: float
    epsilon: float
    resolution: int = 201
    seed: int = 0

    def __post_init__(self):
        if self.A.dim != self.B.dim or self.A.dim != self.f.dim:
            raise SpecFormatError("dimensions of f, A and B must agree")
        if not self.delta > 0:
            raise SpecInvariantError("delta must be positive")
        if not self.epsilon > 0:
            raise SpecInvariantError("epsilon must be positive")
        if self.resolution < 2:
            raise SpecFormatError("resolution must be at least 2")

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProblemSpec":
        try:
            fun = make_function(data["function"]["id"], data["function"]["params"])
            return cls(
                f=fun,
                A=Polytope.from_json(data["A"]),
                B=Polytope.from_json(data["B"]),
                delta=float(data["delta"]),
                mu=float(data["mu"]),
                s=float(data["s"]),
                epsilon=float(data["epsilon"]),
                resolution=int(data.get("resolution", 201)),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecInvariantError):
                raise
            raise SpecFormatError(f"malformed problem spec: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "ProblemSpec":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(data)

    def to_json_dict(self) -> dict:
        return {
            "function": {"id": self.f.fid, "params": self.f.params},
            "A": self.A.to_json(),
            "B": self.B.to_json(),
            "delta": self.delta,
            "mu": self.mu,
            "s": self.s,
            "epsilon": self.epsilon,
            "resolution": self.resolution,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class PipelineParams:
    r: float
    s1: float
    delta1: float
    K: float


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    slack: float  # positive means the strict inequality holds

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


@dataclass(frozen=True, eq=False)
class Certificate:
    xi: np.ndarray
    p: np.ndarray
    checks: dict  # name -> InequalityCheck
    params: PipelineParams
    diagnostics: dict
    tolerances: dict

    def to_json_dict(self) -> dict:
        return {
            "version": _version,
            "xi": [float(v) for v in self.xi],
            "p": [float(v) for v in self.p],
            "params": {
                "r": self.params.r,
                "s1": self.params.s1,
                "delta1": self.params.delta1,
                "K": self.params.K,
            },
            "checks": {k: v.to_json() for k, v in sorted(self.checks.items())},
            "diagnostics": self.diagnostics,
            "tolerances": self.tolerances,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Certificate":
        try:
            checks = {
                k: InequalityCheck(v["lhs"], v["rhs"], v["slack"])
                for k, v in data["checks"].items()
            }
            pp = data["params"]
            return cls(
                xi=np.asarray(data["xi"], dtype=float),
                p=np.asarray(data["p"], dtype=float),
                checks=checks,
                params=PipelineParams(pp["r"], pp["s1"], pp["delta1"], pp["K"]),
                diagnostics=data.get("diagnostics", {}),
                tolerances=data.get("tolerances", {}),
            )
        except (KeyError, TypeError) as exc:
            raise SpecFormatError(f"malformed certificate: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "Certificate":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(data)


class _InfEstimate(NamedTuple):
    value: float
    argmin: np.ndarray
    step: float


def _project_region(x: np.ndarray, A: Polytope, B: Polytope, delta: float) -> np.ndarray:
    d, y, _ = dist_to_hull(x, A, B)
    if d <= delta or d < 1e-15:
        return x
    return y + (delta / d) * (x - y)


def _estimate_inf(
    f: TestFunction, A: Polytope, B: Polytope, delta: float, resolution: int
) -> _InfEstimate:
    """Grid minimum of f over the inflated hull, refined by projected
    line searches from the best grid point.  Exact for singleton regions."""
    V = np.vstack([A.vertices, B.vertices])
    if len(V) == 1 and delta == 0.0:
        v = V[0]
        return _InfEstimate(f_eval(f, v), v.copy(), 0.0)
    pts = sample_set(A, B, delta, resolution)
    vals = np.array([f_eval(f, z) for z in pts])
    finite = np.isfinite(vals)
    if not finite.any():
        raise SpecInvariantError("f is +inf on the whole sampled region")
    idx = sorted(np.nonzero(finite)[0], key=lambda i: (vals[i], tuple(pts[i])))[0]
    x = pts[idx].copy()
    fx = float(vals[idx])
    spans = pts.max(axis=0) - pts.min(axis=0)
    step = float(spans.max() / (resolution - 1)) if np.any(spans > 1e-12) else 0.0
    span = float(np.linalg.norm(spans)) + delta

    dirs = np.eye(A.dim)
    for _ in range(12):
        improved = False
        for d in dirs:
            def along(t: float) -> float:
                z = _project_region(x + t * d, A, B, delta)
                v = f_eval(f, z)
                return -v if np.isfinite(v) else -1e30

            t, neg = golden_max(along, -span, span, xtol=1e-11 * max(span, 1.0))
            if -neg < fx - 1e-14:
                x = _project_region(x + t * d, A, B, delta)
                fx = -neg
                improved = True
        if not improved:
            break
    return _InfEstimate(fx, x, step)


def choose_params(ps: ProblemSpec) -> PipelineParams:
    """Deterministic parameter rule.

    s1 sits halfway into the admissible open interval above s, nudged by a
    further quarter on collision with r.  delta1 walks the dyadic family
    delta * (1 - 2^-j) upward until the Lipschitz constant
    K = (max(r, s1) - mu) / delta1 clears its strict bound with margin.
    """
    inf_a = _estimate_inf(ps.f, ps.A, ps.A, 0.0, ps.resolution)
    inf_bd = _estimate_inf(ps.f, ps.B, ps.B, ps.delta, ps.resolution)
    r = inf_a.value
    room = min(ps.epsilon, ps.epsilon * ps.delta, inf_bd.value - ps.s)
    if room <= 0:
        raise SpecInvariantError(
            "s must lie strictly below the infimum of f over the inflated B"
        )
    s1 = ps.s + 0.5 * room
    if abs(s1 - r) <= 1e-12 * (1.0 + abs(r)):
        s1 = ps.s + 0.75 * room
        if abs(s1 - r) <= 1e-12 * (1.0 + abs(r)):
            raise SpecInvariantError("could not separate s1 from r")

    target = (max(r, ps.s) - ps.mu) / ps.delta + ps.epsilon
    for j in range(1, 61):
        delta1 = ps.delta * (1.0 - 2.0 ** (-j))
        K = (max(r, s1) - ps.mu) / delta1
        if K < target - 1e-9:
            return PipelineParams(r=float(r), s1=float(s1), delta1=float(delta1), K=float(K))
    raise SpecInvariantError("no admissible inflation split for the Lipschitz bound")


def restrict_f(f: TestFunction, A: Polytope, B: Polytope, delta: float) -> TestFunction:
    """f made +inf outside C (boundary kept inside); subgradients delegate
    to f at interior points only, so boundary use fails loudly."""
    region = HullInflation(A, B, delta)

    def value(x):
        if classify_point(x, A, B, delta, tol=_DEF_TOL) == "exterior":
            return np.inf
        return f.value(x)

    def subgrad(x):
        if classify_point(x, A, B, delta, tol=_DEF_TOL) == INTERIOR:
            return f.subgrad(x)
        return []

    return TestFunction(
        fid=f"{f.fid}|restricted_to_inflated_hull",
        params={"base": {"id": f.fid, "params": f.params}, "delta": delta},
        dim=f.dim,
        value=value,
        subgrad=subgrad,
        domain=Domain(kind="hull_inflation", region=region),
    )


def boundary_samples(
    A: Polytope, B: Polytope, delta: float, resolution: int, cap: int = 400
) -> np.ndarray:
    """Deterministic points on the boundary of C, built by pushing hull
    samples outward by delta and keeping those at distance exactly delta.

    Candidates are screened by a vectorized support-function lower bound
    and exact distances are only computed in descending-bound order, so
    genuine boundary points surface first.
    """
    hull_pts = sample_set(A, B, 0.0, min(resolution, 41))
    stride = max(1, len(hull_pts) // 50)
    seeds = hull_pts[::stride]
    dirs = _direction_net(A.dim)
    cands = (seeds[:, None, :] + delta * dirs[None, :, :]).reshape(-1, A.dim)

    V = np.vstack([A.vertices, B.vertices])
    support = np.max(V @ dirs.T, axis=0)
    lower = np.max(cands @ dirs.T - support[None, :], axis=1)
    order = sorted(range(len(cands)), key=lambda i: (-lower[i], i))

    out = []
    for i in order:
        if lower[i] < delta - max(0.05 * delta, 1e-6):
            break  # sorted: everything below is interior by a margin
        if abs(dist_to_hull(cands[i], A, B).d - delta) <= 1e-9:
            out.append(cands[i])
            if len(out) >= cap:
                break
    if not out:
        raise RuntimeError("no boundary samples found")
    return np.array(out)


def _lipschitz_estimate(f: TestFunction, pts: np.ndarray) -> float:
    best = 1.0
    for z in pts:
        if not np.isfinite(f_eval(f, z)):
            continue
        for g in f_subgrad(f, z):
            best = max(best, float(np.linalg.norm(g)))
    return best


def _bisect_disjoint(
    ybar: np.ndarray, sc: SupConvSpec, s1: float, grid: np.ndarray, c_hi: float
) -> float | None:
    """Largest dyadic-bisection c in (0, c_hi] with disjoint level sets.

    Disjointness is monotone (both sets shrink as c drops), so bisection
    on the threshold applies; None after 60 steps means failure even for
    tiny c.
    """
    if uv_disjoint(ybar, c_hi, sc, s1, grid):
        return c_hi
    lo, hi = 0.0, c_hi  # lo: last known disjoint (0 in the limit), hi: not
    found = None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if uv_disjoint(ybar, mid, sc, s1, grid):
            found = mid
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * c_hi:
            break
    return found


def run(ps: ProblemSpec, schedule=None, tol: float = 1e-8) -> Certificate:
    """Execute the full pipeline and return the first valid certificate.

    ``tol`` is the duality-gap tolerance for every smoothing evaluation.
    Raises CertificateSearchError with a per-step report when the schedule
    is exhausted, and SpecInvariantError when the problem data breaks a
    hypothesis (including a positive grid infimum of g, which signals a
    misestimated r).
    """
    if not tol > 0:
        raise SpecFormatError("tol must be positive")
    schedule = default_schedule() if schedule is None else [float(e) for e in schedule]
    A, B, delta = ps.A, ps.B, ps.delta

    hull_grid = sample_set(A, B, 0.0, ps.resolution)
    c_grid = sample_set(A, B, delta, ps.resolution)

    inf_a = _estimate_inf(ps.f, A, A, 0.0, ps.resolution)
    inf_c = _estimate_inf(ps.f, A, B, delta, ps.resolution)
    inf_bd = _estimate_inf(ps.f, B, B, delta, ps.resolution)
    inf_hull = _estimate_inf(ps.f, A, B, 0.0, ps.resolution)
    if not np.isfinite(inf_a.value):
        raise SpecInvariantError("A does not meet the domain of f")
    if not ps.mu < inf_c.value:
        raise SpecInvariantError("mu must lie strictly below inf of f over C")
    if not ps.s < inf_bd.value:
        raise SpecInvariantError("s must lie strictly below inf of f over inflated B")

    params = choose_params(ps)
    r, s1, delta1, K = params.r, params.s1, params.delta1, params.K
    tent = TentSpec(A, B, r, s1)
    sc = SupConvSpec(tent, K)

    bpts = boundary_samples(A, B, delta, ps.resolution)
    b_margins = ps.mu - phi_on_grid(sc, bpts, tol=tol)
    boundary_margin = float(b_margins.min())
    if boundary_margin <= 0:
        raise SpecInvariantError(
            f"smoothing fails to drop below mu on the boundary of C "
            f"(margin {boundary_margin:.3e})"
        )

    f1 = restrict_f(ps.f, A, B, delta)
    lip = _lipschitz_estimate(ps.f, hull_grid)

    eval_pts = np.vstack([c_grid, inf_a.argmin[None, :]])
    fvals = np.array([f_eval(f1, z) for z in eval_pts])
    finite = np.isfinite(fvals)
    gvals = np.full(len(eval_pts), np.inf)
    gvals[finite] = fvals[finite] - phi_on_grid(sc, eval_pts[finite], tol=tol)
    grid_inf_g = float(np.min(gvals))
    if grid_inf_g > 1e-6:
        raise SpecInvariantError(
            f"grid infimum of g is {grid_inf_g:.3e} > 0; r is misestimated"
        )
    boundary_g = float(
        np.min([f_eval(f1, z) for z in bpts] - phi_on_grid(sc, bpts, tol=tol))
    )

    region = HullInflation(A, B, delta)
    ek_points = minimize_g(
        f1, sc, region, schedule, ps.resolution, seed=ps.seed, phi_tol=tol
    )

    eps_bar = 0.5 * min(
        inf_c.value - ps.mu, inf_bd.value - s1, (delta - delta1) / (1.0 + 1.0 / K)
    )
    slack_floor_value = inf_hull.step * lip
    slack_floor_incr = 0.0 if A.num_vertices == 1 else inf_a.step * lip

    attempts = []
    trace = []
    for n, ek in enumerate(ek_points):
        radius = min(ek.eps, eps_bar, delta / 4.0)
        entry = {
            "n": n,
            "eps": ek.eps,
            "u": [float(v) for v in ek.u],
            "g_value": ek.value,
            "residual": None,
        }
        trace.append(entry)
        try:
            pair = fuzzy_pair(ek, f1, sc, search_radius=radius, grid=c_grid)
        except FuzzyPairError as exc:
            attempts.append(f"n={n}: {exc}")
            continue
        entry["residual"] = pair.residual

        xi, p = pair.x, pair.p
        failures = []
        if pair.separation >= eps_bar:
            failures.append(f"pair separation {pair.separation:.3e} >= {eps_bar:.3e}")
        gap_xy = f_eval(f1, pair.x) - phi_eval(pair.y, sc, tol=tol).value
        if gap_xy >= eps_bar:
            failures.append(f"value gap {gap_xy:.3e} >= {eps_bar:.3e}")
        d_xi = dist_to_hull(xi, A, B).d
        if classify_point(xi, A, B, delta, tol=_DEF_TOL) != INTERIOR:
            failures.append("xi is not interior to C")
        interior_margin = delta - d_xi

        c_n = _bisect_disjoint(pair.y, sc, s1, hull_grid, abs(r - s1))
        if c_n is None:
            failures.append("level sets could not be separated at y")

        checks = {
            "value_localization": InequalityCheck(
                lhs=f_eval(ps.f, xi),
                rhs=inf_hull.value + abs(r - ps.s) + ps.epsilon,
                slack=float(
                    inf_hull.value + abs(r - ps.s) + ps.epsilon - f_eval(ps.f, xi)
                ),
            ),
            "subgradient_norm": InequalityCheck(
                lhs=float(np.linalg.norm(p)),
                rhs=(max(r, ps.s) - ps.mu) / delta + ps.epsilon,
                slack=float(
                    (max(r, ps.s) - ps.mu) / delta + ps.epsilon - np.linalg.norm(p)
                ),
            ),
            "mean_value_increment": InequalityCheck(
                lhs=ps.s - r,
                rhs=inf_linear(p, B) - inf_linear(p, A),
                slack=float(inf_linear(p, B) - inf_linear(p, A) - (ps.s - r)),
            ),
        }
        floors = {
            "value_localization": slack_floor_value,
            "subgradient_norm": 0.0,
            "mean_value_increment": slack_floor_incr,
        }
        for name, chk in checks.items():
            if not chk.slack > floors[name]:
                failures.append(
                    f"{name}: slack {chk.slack:.3e} <= floor {floors[name]:.3e}"
                )

        if failures:
            attempts.append(f"n={n}: " + "; ".join(failures))
            continue

        evp = evp_verify(ek.u, ek.eps, f1, sc, c_grid)
        diagnostics = {
            "accepted_n": n,
            "eps_n": ek.eps,
            "residual": pair.residual,
            "separation": pair.separation,
            "u": [float(v) for v in ek.u],
            "y": [float(v) for v in pair.y],
            "q": [float(v) for v in pair.q],
            "interior_margin": float(interior_margin),
            "level_separation_c": float(c_n),
            "boundary_margin": boundary_margin,
            "boundary_g_inf": boundary_g,
            "grid_inf_g": grid_inf_g,
            "evp_worst": evp.worst,
            "eps_bar": float(eps_bar),
            "inf_estimates": {
                "inf_A": inf_a.value,
                "inf_C": inf_c.value,
                "inf_B_inflated": inf_bd.value,
                "inf_hull": inf_hull.value,
            },
            "slack_floors": floors,
            "lipschitz_estimate": lip,
            "rejected_attempts": attempts,
            "schedule_trace": trace,
        }
        tolerances = {
            "interior_tol": _DEF_TOL,
            "evp_tol": 1e-6,
            "residual_factor": 10.0,
            "grid_resolution": ps.resolution,
            "smoothing_gap_tol": tol,
        }
        return Certificate(
            xi=xi.copy(),
            p=p.copy(),
            checks=checks,
            params=params,
            diagnostics=diagnostics,
            tolerances=tolerances,
        )

    raise CertificateSearchError(
        "schedule exhausted without a valid certificate:\n  " + "\n  ".join(attempts)
    )


def verify_certificate(
    cert: Certificate, ps: ProblemSpec, resolution: int | None = None
) -> tuple[bool, dict]:
    """Independent recheck of a certificate from oracles and geometry only.

    Recomputes membership of xi, subgradient membership of p, and the
    three inequalities; the value localization uses the brute-force grid
    infimum over [A,B] and validates the claimed r against the brute-force
    infimum over A.
    """
    from .oracles import grid_inf as oracle_grid_inf

    res = ps.resolution if resolution is None else resolution
    report: dict = {}
    xi = as_point(cert.xi, ps.A.dim)
    p = as_point(cert.p, ps.A.dim)
    r, s = cert.params.r, ps.s

    d = dist_to_hull(xi, ps.A, ps.B).d
    report["xi_membership"] = {"distance": d, "delta": ps.delta, "ok": d < ps.delta}

    fx = f_eval(ps.f, xi)
    reps = f_subgrad(ps.f, xi)
    gap = min((float(np.linalg.norm(p - g)) for g in reps), default=np.inf)
    report["subgradient_membership"] = {"distance": gap, "ok": gap <= 1e-8}

    ginf_a = oracle_grid_inf(ps.f, ps.A, ps.A, 0.0, res)
    lip = _lipschitz_estimate(ps.f, sample_set(ps.A, ps.B, 0.0, min(res, 41)))
    r_err = ginf_a.step * lip + 1e-9
    report["level_r"] = {
        "claimed": r,
        "oracle": ginf_a.value,
        "tolerance": r_err,
        "ok": r <= ginf_a.value + 1e-9 and r >= ginf_a.value - r_err,
    }

    ginf_hull = oracle_grid_inf(ps.f, ps.A, ps.B, 0.0, res)
    rhs_value = ginf_hull.value + abs(r - s) + ps.epsilon
    report["value_localization"] = {
        "lhs": fx,
        "rhs": rhs_value,
        "slack": rhs_value - fx,
        "ok": fx < rhs_value,
    }

    rhs_norm = (max(r, s) - ps.mu) / ps.delta + ps.epsilon
    nrm = float(np.linalg.norm(p))
    report["subgradient_norm"] = {
        "lhs": nrm,
        "rhs": rhs_norm,
        "slack": rhs_norm - nrm,
        "ok": nrm < rhs_norm,
    }

    incr = inf_linear(p, ps.B) - inf_linear(p, ps.A)
    report["mean_value_increment"] = {
        "lhs": s - r,
        "rhs": incr,
        "slack": incr - (s - r),
        "ok": incr > s - r,
    }

    valid = all(section["ok"] for section in report.values())
    report["valid"] = valid
    return valid, report

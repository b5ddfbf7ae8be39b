import numpy as np
import pytest

from mdmvi import (
    EkelandPoint,
    FuzzyPairError,
    Polytope,
    SupConvSpec,
    TentSpec,
    TestFunction,
    evp_verify,
    fuzzy_pair,
    linear,
    minimize_g,
    quadratic,
    restricted,
)
from mdmvi.ekeland import DescentError, default_schedule
from mdmvi.geometry import HullInflation
from mdmvi.mdmvt import restrict_f
from mdmvi.supconv import phi_value

from conftest import grid_1d


@pytest.fixture(scope="module")
def canonical_smoothing(seg_a, seg_b):
    """Pipeline-style smoothing for the linear canonical problem."""
    return SupConvSpec(TentSpec(seg_a, seg_b, 0.0, 0.425), 2.0825396825396825)


def wrap_phi(sc, extra=None):
    """Test-only function equal to the smoothing (plus an optional term)."""

    def value(x):
        v = phi_value(x, sc)
        return v + (extra(x) if extra else 0.0)

    def subgrad(x):
        return []

    return TestFunction(
        fid="synthetic", params={}, dim=sc.dim, value=value, subgrad=subgrad
    )


class TestMinimizeG:
    def test_linear_objective_minimizer(self, seg_a, seg_b, canonical_smoothing):
        # dense-grid scan of g = f1 - phi pins the minimizer near 0, where
        # the smoothing's slope first exceeds the slope of f
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        pts = minimize_g(f1, canonical_smoothing, region, [0.1, 0.01], 201, seed=0)
        xs = np.linspace(-0.5, 1.5, 2001)
        gs = np.array(
            [x - phi_value([x], canonical_smoothing) for x in xs]
        )
        u_grid = xs[int(np.argmin(gs))]
        assert abs(pts[0].u[0] - u_grid) <= 2e-3
        assert pts[0].value == pytest.approx(float(gs.min()), abs=1e-6)

    def test_constant_g_returns_zero_value(self, seg_a, seg_b, canonical_smoothing):
        f = wrap_phi(canonical_smoothing)
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        pts = minimize_g(f1, canonical_smoothing, region, [0.1], 101, seed=0)
        assert pts[0].value == pytest.approx(0.0, abs=1e-9)

    def test_centered_quadratic_recovers_center(self, seg_a, seg_b, canonical_smoothing):
        f = wrap_phi(canonical_smoothing, extra=lambda x: 0.5 * float((x[0] - 0.5) ** 2))
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        pts = minimize_g(f1, canonical_smoothing, region, [0.1], 101, seed=0)
        assert pts[0].u[0] == pytest.approx(0.5, abs=1e-6)
        assert pts[0].value == pytest.approx(0.0, abs=1e-9)

    def test_values_nonincreasing_along_schedule(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        pts = minimize_g(
            f1, canonical_smoothing, region, default_schedule(), 101, seed=0
        )
        vals = [p.value for p in pts]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_empty_domain_errors(self, seg_a, seg_b, canonical_smoothing):
        f = restricted(linear([1.0]), Polytope([[5.0], [6.0]]))
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        with pytest.raises(DescentError):
            minimize_g(f1, canonical_smoothing, region, [0.1], 41, seed=0)

    def test_schedule_must_decrease(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        with pytest.raises(ValueError):
            minimize_g(f1, canonical_smoothing, region, [0.1, 0.1], 41, seed=0)

    def test_deterministic_given_seed(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        a = minimize_g(f1, canonical_smoothing, region, [0.1], 101, seed=4)
        b = minimize_g(f1, canonical_smoothing, region, [0.1], 101, seed=4)
        assert np.array_equal(a[0].u, b[0].u)

    def test_final_entry_meets_exhaustive_scan(self, seg_a, seg_b, canonical_smoothing):
        # the last schedule entry must land within eps_N (plus grid error)
        # of an independent exhaustive scan of g
        from mdmvi import TestFunction
        from mdmvi.oracles import grid_inf

        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        region = HullInflation(seg_a, seg_b, 0.5)
        schedule = default_schedule()
        pts = minimize_g(f1, canonical_smoothing, region, schedule, 201, seed=0)
        g_fn = TestFunction(
            fid="synthetic",
            params={},
            dim=1,
            value=lambda x: f1.value(x) - phi_value(x, canonical_smoothing),
            subgrad=lambda x: [],
        )
        scan = grid_inf(g_fn, seg_a, seg_b, 0.5, 401)
        lip_budget = 1.0 + canonical_smoothing.K
        assert pts[-1].value - scan.value <= schedule[-1] + scan.step * lip_budget


class TestEvpVerify:
    def test_global_minimizer_dominates(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        ok, worst = evp_verify(
            [0.0], 0.01, f1, canonical_smoothing, grid_1d(-0.5, 1.5, 201)
        )
        assert ok and worst >= -1e-9

    def test_displaced_point_fails(self, seg_a, seg_b, canonical_smoothing):
        # g(u) sits 0.5 above the infimum, far beyond what eps*diam allows
        f = wrap_phi(
            canonical_smoothing, extra=lambda x: 0.5 * float((x[0] - 0.5) ** 2)
        )
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        u = [1.5]  # g(1.5) = 0.5
        ok, worst = evp_verify(
            u, 1e-3, f1, canonical_smoothing, grid_1d(-0.5, 1.5, 201)
        )
        assert not ok
        assert worst == pytest.approx(-0.5 + 1e-3, abs=1e-2)

    def test_constant_g_always_ok(self, seg_a, seg_b, canonical_smoothing):
        f = wrap_phi(canonical_smoothing)
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        ok, worst = evp_verify(
            [0.7], 0.05, f1, canonical_smoothing, grid_1d(-0.5, 1.5, 101)
        )
        assert ok and worst >= -1e-9


class TestFuzzyPair:
    def test_smooth_interior_point(self, seg_a, seg_b, canonical_smoothing):
        # at a smooth point the residual is |f' - phi'| exactly
        from mdmvi import eps_subdiff_check
        from mdmvi.supconv import phi_value as pv

        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        u = EkelandPoint(u=np.array([0.7]), eps=0.1, value=0.0)
        pair = fuzzy_pair(
            u, f1, canonical_smoothing, 0.05, grid=grid_1d(-0.5, 1.5, 101)
        )
        assert pair.p[0] == pytest.approx(1.0, abs=1e-12)
        assert pair.q[0] == pytest.approx(-0.425, abs=1e-6)
        assert pair.residual == pytest.approx(0.575, abs=1e-6)
        # returned slopes stay honest members of their differentials
        local = pair.x + np.linspace(-0.1, 0.1, 41)[:, None]
        assert eps_subdiff_check(f1, pair.x, pair.p, 1e-9, local)
        sup_gap = max(
            pv([z], canonical_smoothing)
            - pv(pair.y, canonical_smoothing)
            - float(-pair.q @ (z - pair.y))
            for z in np.linspace(-0.5, 1.5, 41)
        )
        assert sup_gap <= 1e-4

    def test_exact_cancellation_at_smooth_minimum(
        self, seg_a, seg_b, canonical_smoothing
    ):
        base = quadratic([[1.0]], [-0.5])  # x^2/2 - x/2, gradient x - 0.5

        def value(x):
            return base.value(x) + phi_value(x, canonical_smoothing)

        def subgrad(x):
            sg = base.subgrad(x)[0]
            slope = 0.425 if 0 < x[0] < 1 else None
            if slope is None:
                return []
            return [sg + slope]

        f = TestFunction(
            fid="synthetic", params={}, dim=1, value=value, subgrad=subgrad
        )
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        u = EkelandPoint(u=np.array([0.5]), eps=0.1, value=0.0)
        pair = fuzzy_pair(
            u, f1, canonical_smoothing, 0.05, grid=grid_1d(-0.5, 1.5, 101)
        )
        assert pair.residual <= 1e-6

    def test_kink_enumerates_representatives(self, seg_a, seg_b, unit_smoothing):
        # |x| against the unit tent with K=2: g vanishes on [0,1]; at u=0
        # enumeration over the two representatives bounds the residual
        from mdmvi import l2_norm

        f = restricted(l2_norm([0.0]), Polytope([[-1.0], [1.0]]))
        f1 = restrict_f(f, seg_a, seg_b, 0.5)
        u = EkelandPoint(u=np.array([0.0]), eps=0.1, value=0.0)
        pair = fuzzy_pair(u, f1, unit_smoothing, 0.05, grid=grid_1d(-0.5, 1.5, 101))
        assert pair.p[0] in (-1.0, 1.0)
        assert pair.residual <= 0.5 + 1e-9

    def test_threshold_failure_raises(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        u = EkelandPoint(u=np.array([0.7]), eps=1e-4, value=0.0)
        with pytest.raises(FuzzyPairError):
            fuzzy_pair(u, f1, canonical_smoothing, 0.01, grid=grid_1d(-0.5, 1.5, 101))

    def test_rejects_bad_radius(self, seg_a, seg_b, canonical_smoothing):
        f1 = restrict_f(linear([1.0]), seg_a, seg_b, 0.5)
        u = EkelandPoint(u=np.array([0.7]), eps=0.1, value=0.0)
        with pytest.raises(ValueError):
            fuzzy_pair(u, f1, canonical_smoothing, 0.0)

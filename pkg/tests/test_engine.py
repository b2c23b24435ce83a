import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import ols, windowed_intercept, wls_normal_equations

from brdd import _backend, _kernels_py
from brdd.dgp import generate_univariate
from brdd.engine import (
    BandwidthPair,
    discontinuity,
    fuzzy_discontinuity,
    kernel_constants,
    kernel_weight,
    local_linear_side,
    resolve_bandwidth,
    rule_of_thumb,
    select_bandwidth,
    sharp_discontinuity,
    wls_intercepts,
    wls_solve,
)
from brdd.errors import InsufficientDataError, SingularFitError, WeakFirstStageError

KERNELS = ("triangular", "uniform", "epanechnikov")


class TestKernels:
    @pytest.mark.parametrize("u,kind,expected", [
        (0.0, "triangular", 1.0), (0.5, "triangular", 0.5), (1.5, "triangular", 0.0),
        (1.5, "uniform", 0.0), (1.5, "epanechnikov", 0.0), (0.0, "uniform", 0.5), (0.0, "epanechnikov", 0.75),
    ])
    def test_values(self, u, kind, expected):
        assert kernel_weight(u, kind) == pytest.approx(expected)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_shape_properties(self, kind, backend):
        u = np.arange(-3000, 3001) / 1000.0
        w = kernel_weight(u, kind)
        assert np.all(w >= 0)
        assert np.all(w[np.abs(u) > 1] == 0)
        assert np.array_equal(w, kernel_weight(-u, kind))

    def test_unknown_kernel(self):
        with pytest.raises(ValueError):
            kernel_weight(0.1, "gaussian")

    def test_triangular_constants_closed_form(self):
        # one-sided moments of K(u) = 1 - u on [0, 1]
        mu = [1 / 2, 1 / 6, 1 / 12, 1 / 20]
        nu = [1 / 3, 1 / 12, 1 / 30]
        det = mu[0] * mu[2] - mu[1] ** 2
        bias = (mu[2] ** 2 - mu[1] * mu[3]) / det
        e = np.array([mu[2], -mu[1]]) / det
        var = e @ np.array([[nu[0], nu[1]], [nu[1], nu[2]]]) @ e
        c = kernel_constants("triangular")
        assert c["bias"] == pytest.approx(bias, rel=1e-12)
        assert c["variance"] == pytest.approx(var, rel=1e-12)
        assert (bias, var) == pytest.approx((-0.1, 4.8), rel=1e-12)
        assert c["C"] == pytest.approx(480 ** 0.2, rel=1e-12)
        assert c["C"] == pytest.approx(3.4375, abs=1e-4)

    @pytest.mark.parametrize("kind", KERNELS)
    def test_constants_positive(self, kind):
        c = kernel_constants(kind)
        assert c["variance"] > 0 and c["bias"] < 0 and c["C"] > 0


class TestWls:
    def test_two_point_interpolation(self):
        r = wls_solve(np.column_stack([[1.0, 1.0], [0.0, 1.0]]), [1.0, 3.0])
        assert r.coef == pytest.approx([1.0, 2.0], abs=1e-14)

    def test_constant_outcome(self, rng):
        X = np.column_stack([np.ones(30), rng.normal(size=30)])
        r = wls_solve(X, np.full(30, 4.2), rng.uniform(0.1, 2, 30))
        assert r.coef == pytest.approx([4.2, 0.0], abs=1e-12)

    def test_matches_normal_equation_oracle(self, rng):
        worst = 0.0
        for _ in range(100):
            n, p = 50, int(rng.integers(1, 6))
            X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1)) * rng.uniform(0.1, 100, p - 1)])
            y = X @ rng.normal(size=p) + rng.normal(size=n)
            w = rng.uniform(0, 3, n) * (rng.random(n) > 0.1)
            r = wls_solve(X, y, w)
            coef, cov = wls_normal_equations(X, y, w)
            worst = max(worst, np.max(np.abs(r.coef - coef) / np.maximum(np.abs(coef), 1e-8)),
                        np.max(np.abs(r.cov - cov)) / np.max(np.abs(cov)))
        assert worst < 1e-10

    def test_rank_deficient(self, rng):
        x = rng.normal(size=20)
        with pytest.raises(SingularFitError) as info:
            wls_solve(np.column_stack([np.ones(20), x, 2 * x]), rng.normal(size=20))
        assert info.value.condition > 1e13

    def test_too_few_positive_weights(self):
        with pytest.raises(SingularFitError):
            wls_solve(np.column_stack([np.ones(3), [0.0, 1.0, 2.0]]), [1.0, 2.0, 3.0], [1.0, 0.0, 0.0])

    def test_intercept_covariance_matches_single_outcome(self, rng):
        X = np.column_stack([np.ones(80), rng.normal(size=(80, 2))])
        Y = rng.normal(size=(80, 2))
        w = rng.uniform(0, 1, 80)
        coef, V = wls_intercepts(X, Y, w)
        for j in range(2):
            r = wls_solve(X, Y[:, j], w)
            assert coef[:, j] == pytest.approx(r.coef, rel=1e-10)
            assert V[j, j] == pytest.approx(r.cov[0, 0], rel=1e-10)
        assert V[0, 1] == pytest.approx(V[1, 0])


class TestLocalLinearSide:
    def test_noiseless_linear(self, rng, backend):
        x = rng.uniform(-1, 3, 200)
        f = local_linear_side(x, 2 + 3 * (x - 1.0), 1.0, 0.7, "right", "uniform")
        assert (f.intercept, f.slope) == pytest.approx((2.0, 3.0), abs=1e-12)

    @pytest.mark.parametrize("side", ["left", "right"])
    @pytest.mark.parametrize("h", [0.2, 0.55, 1.0])
    def test_uniform_kernel_is_windowed_ols(self, rng, backend, side, h):
        x = rng.uniform(-1, 1, 400)
        y = np.sin(3 * x) + 0.1 * rng.normal(size=400)
        f = local_linear_side(x, y, 0.1, h, side, "uniform")
        assert f.intercept == pytest.approx(windowed_intercept(x, y, 0.1, h, side), abs=1e-12)

    def test_quadratic_curvature(self, rng):
        x = rng.uniform(0, 1, 100)
        f = local_linear_side(x, 1 + x - 2.5 * x**2, 0.0, 1.0, "right", "triangular", order=2)
        assert f.curvature == pytest.approx(-5.0, abs=1e-9)

    def test_empty_window(self, rng):
        x = rng.uniform(1, 2, 50)
        with pytest.raises(InsufficientDataError) as info:
            local_linear_side(x, x, 0.0, 0.5, "right")
        assert info.value.side == "right"

    def test_se_and_count(self, rng):
        x = rng.uniform(-1, 1, 300)
        f = local_linear_side(x, rng.normal(size=300), 0.0, 0.5, "left")
        assert f.se_intercept >= 0 and f.n_eff == int(np.sum((x < 0) & (x > -0.5)))


class TestBandwidth:
    def test_pair_invariants(self):
        with pytest.raises(ValueError):
            BandwidthPair(1.0, 0.5)
        with pytest.raises(ValueError):
            BandwidthPair(0.0, 1.0)
        assert BandwidthPair.manual(2.0).b == 3.0

    @pytest.mark.parametrize("c", [0.5, 2.0, 4.0, 1024.0])
    def test_scale_equivariance_power_of_two_is_exact(self, c):
        s = generate_univariate(n=3000, seed=3)
        assert select_bandwidth(c * s.x, s.y).h == c * select_bandwidth(s.x, s.y).h

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-3, 1e3))
    def test_scale_equivariance(self, c):
        s = generate_univariate(n=2000, seed=4)
        base = select_bandwidth(s.x, s.y)
        scaled = select_bandwidth(c * s.x, s.y)
        assert scaled.h == pytest.approx(c * base.h, rel=1e-10)
        assert scaled.rule == base.rule

    def test_constant_outcome_falls_back(self, rng):
        x = rng.uniform(-1, 1, 500)
        bw = select_bandwidth(x, np.full(500, 3.0))
        assert bw.rule == "rule_of_thumb" and "rule_of_thumb_fallback" in bw.flags
        assert bw.h == pytest.approx(rule_of_thumb(x))

    def test_too_few_per_side(self, rng):
        x = np.concatenate([rng.uniform(-1, 0, 10), rng.uniform(0, 1, 100)])
        with pytest.raises(InsufficientDataError):
            select_bandwidth(x, x)

    def test_deterministic(self):
        s = generate_univariate(n=2000, seed=5)
        assert select_bandwidth(s.x, s.y) == select_bandwidth(s.x, s.y)

    def test_doubling_n_shrinks_h_at_rate(self):
        ratios = []
        for seed in range(100):
            small = generate_univariate(n=5000, seed=seed, noise_sd=0.3)
            large = generate_univariate(n=10000, seed=10_000 + seed, noise_sd=0.3)
            ratios.append(select_bandwidth(large.x, large.y).h / select_bandwidth(small.x, small.y).h)
        assert np.mean(ratios) == pytest.approx(2 ** -0.2, rel=0.05)

    def test_resolve(self):
        s = generate_univariate(n=500, seed=1)
        assert resolve_bandwidth(s.x, s.y, bandwidth=0.3).h == 0.3
        pair = BandwidthPair(0.2, 0.4)
        assert resolve_bandwidth(s.x, s.y, bandwidth=pair) is pair
        assert resolve_bandwidth(s.x, s.y).rule in ("mse_plugin", "rule_of_thumb")


class TestSharp:
    def test_noiseless_linear_jump(self, rng, backend):
        x = rng.uniform(-1, 1, 3000)
        e = sharp_discontinuity(x, 0.3 * (x >= 0) + x)
        assert e.tau_conventional == pytest.approx(0.3, abs=1e-12)
        assert abs(e.tau_bias_corrected - e.tau_conventional) < 1e-8

    @pytest.mark.parametrize("h", [0.15, 0.4])
    def test_uniform_manual_h_is_difference_of_windowed_ols(self, rng, backend, h):
        s = generate_univariate(n=2000, seed=9)
        e = sharp_discontinuity(s.x, s.y, 0.0, BandwidthPair.manual(h), "uniform")
        oracle = windowed_intercept(s.x, s.y, 0.0, h, "right") - windowed_intercept(s.x, s.y, 0.0, h, "left")
        assert e.tau_conventional == pytest.approx(oracle, abs=1e-12)

    def test_uniform_bias_correction_oracle(self, rng):
        """Bias correction = quadratic coefficient at b times the linear fit's intercept on (x-c)^2."""
        s = generate_univariate(n=3000, seed=10)
        h, b = 0.3, 0.5
        e = sharp_discontinuity(s.x, s.y, 0.0, BandwidthPair(h, b), "uniform")
        bias = 0.0
        for side, sign in (("right", 1), ("left", -1)):
            selb = ((s.x >= 0) if side == "right" else (s.x < 0)) & (np.abs(s.x) <= b)
            beta2 = ols(np.column_stack([np.ones(selb.sum()), s.x[selb], s.x[selb] ** 2]), s.y[selb])[2]
            factor = windowed_intercept(s.x, s.x**2, 0.0, h, side)
            bias += sign * beta2 * factor
        assert e.tau_bias_corrected == pytest.approx(e.tau_conventional - bias, abs=1e-12)

    def test_constant_shift(self, rng):
        s = generate_univariate(n=2000, seed=2)
        bw = BandwidthPair.manual(0.3)
        a = sharp_discontinuity(s.x, s.y, 0.0, bw)
        b = sharp_discontinuity(s.x, s.y + 7.5, 0.0, bw)
        assert b.tau_conventional == pytest.approx(a.tau_conventional, abs=1e-12)
        assert b.tau_bias_corrected == pytest.approx(a.tau_bias_corrected, abs=1e-12)
        left_a = local_linear_side(s.x, s.y, 0.0, 0.3, "left")
        left_b = local_linear_side(s.x, s.y + 7.5, 0.0, 0.3, "left")
        assert left_b.intercept == pytest.approx(left_a.intercept + 7.5, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-50, 50).filter(lambda a: abs(a) > 1e-3), st.floats(-100, 100))
    def test_affine_equivariance(self, a, c):
        s = generate_univariate(n=1500, seed=6)
        bw = BandwidthPair.manual(0.35)
        base = sharp_discontinuity(s.x, s.y, 0.0, bw)
        tr = sharp_discontinuity(s.x, a * s.y + c, 0.0, bw)
        assert tr.tau_conventional == pytest.approx(a * base.tau_conventional, rel=1e-9, abs=1e-10)
        assert tr.tau_bias_corrected == pytest.approx(a * base.tau_bias_corrected, rel=1e-9, abs=1e-10)
        assert tr.se_robust == pytest.approx(abs(a) * base.se_robust, rel=1e-9)

    def test_robust_variance_options(self):
        s = generate_univariate(n=2000, seed=7)
        j = sharp_discontinuity(s.x, s.y, 0.0, BandwidthPair.manual(0.3), robust_variance="joint")
        i = sharp_discontinuity(s.x, s.y, 0.0, BandwidthPair.manual(0.3), robust_variance="independent")
        assert j.tau_bias_corrected == i.tau_bias_corrected
        assert i.se_robust > 0 and j.se_robust > 0
        with pytest.raises(ValueError):
            sharp_discontinuity(s.x, s.y, 0.0, BandwidthPair.manual(0.3), robust_variance="other")

    def test_null_effect_inside_two_se(self):
        hits = 0
        for seed in range(200):
            s = generate_univariate(n=2000, tau=0.0, left=(0.5, 0.4, 0.3), right=(0.5, 0.4, 0.3), seed=seed)
            e = sharp_discontinuity(s.x, s.y)
            hits += abs(e.tau_bias_corrected) <= 2 * e.se_robust
        assert hits / 200 >= 0.90

    def test_side_error_is_tagged(self, rng):
        x = np.concatenate([rng.uniform(-1, -0.5, 100), rng.uniform(0, 1, 100)])
        with pytest.raises(InsufficientDataError) as info:
            sharp_discontinuity(x, x, 0.0, BandwidthPair.manual(0.2))
        assert info.value.side == "left"


class TestFuzzy:
    def test_perfect_compliance_equals_sharp(self):
        s = generate_univariate(n=3000, seed=8)
        bw = BandwidthPair.manual(0.3)
        f = fuzzy_discontinuity(s.x, s.y, s.z, 0.0, bw)
        sh = sharp_discontinuity(s.x, s.y, 0.0, bw)
        assert f.tau_conventional == pytest.approx(sh.tau_conventional, abs=1e-12)
        assert f.tau_bias_corrected == pytest.approx(sh.tau_bias_corrected, abs=1e-12)
        assert f.first_stage == pytest.approx(1.0, abs=1e-12)

    def test_ratio_identity(self):
        s = generate_univariate(n=5000, compliance=0.6, seed=11)
        bw = BandwidthPair.manual(0.4)
        f = fuzzy_discontinuity(s.x, s.y, s.t, 0.0, bw)
        sh = sharp_discontinuity(s.x, s.y, 0.0, bw)
        assert f.tau_conventional * f.first_stage == pytest.approx(sh.tau_conventional, abs=1e-12)
        assert 0 < f.first_stage <= 1

    def test_compliance_scaling(self):
        """Take-up 0.6 and outcome jump 0.27 imply an effect near 0.45."""
        s = generate_univariate(n=100_000, tau=0.45, compliance=0.6, noise_sd=0.1, seed=12)
        f = fuzzy_discontinuity(s.x, s.y, s.t)
        sh = sharp_discontinuity(s.x, s.y)
        assert sh.tau_bias_corrected == pytest.approx(0.27, abs=0.03)
        assert f.tau_bias_corrected == pytest.approx(0.45, abs=0.03)

    def test_no_takeup_is_weak(self):
        s = generate_univariate(n=1000, seed=1)
        with pytest.raises(WeakFirstStageError):
            fuzzy_discontinuity(s.x, s.y, np.zeros(1000), 0.0, BandwidthPair.manual(0.5))

    def test_discontinuity_dispatch(self):
        s = generate_univariate(n=1000, seed=1)
        assert discontinuity(s.x, s.y, s.t, kind="fuzzy").kind == "fuzzy"
        with pytest.raises(ValueError):
            discontinuity(s.x, s.y, kind="fuzzy")
        with pytest.raises(ValueError):
            discontinuity(s.x, s.y, kind="other")


class TestBackends:
    @pytest.mark.skipif(len(_backend.available()) < 2, reason="compiled extension not built")
    def test_kernels_agree(self, rng):
        k = _backend._load("cython")
        x = np.ascontiguousarray(rng.normal(size=2000))
        Y = np.ascontiguousarray(rng.normal(size=(2000, 2)))
        for kind in (-1, 0, 1, 2):
            for side in (-1, 0, 1):
                a = k.poly_moments(x, Y, 0.1, 0.7, 0.7, side, kind, 2)
                b = _kernels_py.poly_moments(x, Y, 0.1, 0.7, 0.7, side, kind, 2)
                assert a[2] == b[2]
                for p, q in zip(a[:2], b[:2]):
                    assert np.allclose(p, q, rtol=1e-11, atol=1e-11)
        a = k.rbc_moments(x, Y, 0.0, 0.4, 0.8, 1, 0)
        b = _kernels_py.rbc_moments(x, Y, 0.0, 0.4, 0.8, 1, 0)
        for p, q in zip(a, b):
            assert np.allclose(p, q, rtol=1e-11, atol=1e-11)

    def test_estimates_identical_across_backends(self):
        s = generate_univariate(n=4000, compliance=0.7, seed=13)
        out = []
        for name in _backend.available():
            prev = _backend.set_backend(name)
            try:
                out.append(fuzzy_discontinuity(s.x, s.y, s.t))
            finally:
                _backend.set_backend(prev)
        for e in out[1:]:
            assert e.tau_bias_corrected == pytest.approx(out[0].tau_bias_corrected, rel=1e-10)
            assert e.se_robust == pytest.approx(out[0].se_robust, rel=1e-9)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            _backend.set_backend("fortran")

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brdd.classic import (
    centering_rd,
    centering_score,
    conditional_rd,
    multicutoff_rd,
    weighted_average,
)
from brdd.data import AssignmentRule, Dataset, RdEstimate, eligibility, validate_and_normalize
from brdd.dgp import DgpConfig, TauProfile, generate
from brdd.engine import BandwidthPair, discontinuity
from brdd.errors import DataError, InsufficientDataError


@pytest.mark.parametrize("a,b,expected", [(3, -2, -2), (0, 0, 0), (-1, -4, -4)])
def test_centering_score_examples(a, b, expected):
    assert centering_score(a, b) == expected


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_centering_score_sign_is_eligibility(a, b):
    assert (centering_score(a, b) >= 0) == bool(eligibility(a, b))


def test_centering_recovers_constant_effect(constant_ds):
    assert centering_rd(constant_ds).tau_bias_corrected == pytest.approx(0.3, abs=0.03)


@pytest.mark.parametrize("along", ["x1", "x2"])
def test_conditional_recovers_constant_effect(constant_ds, along):
    assert conditional_rd(constant_ds, along).tau_bias_corrected == pytest.approx(0.3, abs=0.03)


@pytest.mark.parametrize("kind", ["sharp", "fuzzy"])
def test_centering_degenerates_to_conditional(rng, kind):
    """x2 is never the minimum, so min(x1, x2) is x1 on the x2 >= 0 sample."""
    n = 4000
    x1 = rng.uniform(-30, 30, n)
    x2 = np.abs(x1) + rng.uniform(0.1, 20, n)
    t = (x1 >= 0) * (rng.random(n) < 0.7)
    y = 0.2 + 0.01 * x1 + 0.3 * t + 0.1 * rng.normal(size=n)
    ds = validate_and_normalize(Dataset(y=y, x1=x1, x2=x2, t=t))
    assert centering_rd(ds, kind) == conditional_rd(ds, "x1", kind)


def test_null_effect(rng):
    cfg = DgpConfig(n=50_000, tau=TauProfile("constant", 0.0), compliance=1.0, noise_sd=0.1, seed=5)
    ds = validate_and_normalize(generate(cfg), cfg.rule)
    e = conditional_rd(ds, "x2")
    assert abs(e.tau_bias_corrected) <= 2 * e.se_robust


def test_conditional_rejects_empty_subsample():
    ds = validate_and_normalize(Dataset(y=[0.0, 1.0], x1=[1.0, -1.0], x2=[-1.0, -2.0]))
    with pytest.raises(InsufficientDataError):
        conditional_rd(ds, "x1")
    with pytest.raises(ValueError):
        conditional_rd(ds, "x3")


def test_fuzzy_times_first_stage_is_itt(fuzzy_ds):
    f = conditional_rd(fuzzy_ds, "x1", "fuzzy")
    s = conditional_rd(fuzzy_ds, "x1", "sharp")
    assert f.h == s.h
    assert f.tau_conventional * f.first_stage == pytest.approx(s.tau_conventional, abs=1e-12)


@pytest.fixture(scope="module")
def three_group():
    cfg = DgpConfig(compliance=1.0, noise_sd=0.05, seed=21,
                    group_effects={"main-city": 0.36, "urban": 0.20, "rural": 0.18})
    return cfg, validate_and_normalize(generate(cfg), cfg.rule)


class TestMultiCutoff:
    def test_group_recovery(self, three_group):
        cfg, ds = three_group
        res = multicutoff_rd(ds, cfg.rule)
        for g, tau in cfg.group_effects.items():
            assert res.per_group[g].tau_bias_corrected == pytest.approx(tau, abs=0.04)
        assert not res.skipped

    def test_raw_input_is_normalized_with_rule(self, three_group):
        cfg, ds = three_group
        raw = generate(cfg)
        assert multicutoff_rd(raw, cfg.rule).pooled == multicutoff_rd(ds, cfg.rule).pooled
        with pytest.raises(DataError):
            multicutoff_rd(raw)

    def test_pooling_identity(self, three_group):
        cfg, ds = three_group
        res = multicutoff_rd(ds, cfg.rule)
        keep = ds.x1 >= 0
        assert res.pooled == discontinuity(ds.x2[keep], ds.y[keep], None, 0.0)

    def test_weighted_lies_between_groups(self, three_group):
        cfg, ds = three_group
        res = multicutoff_rd(ds, cfg.rule)
        taus = [e.tau_bias_corrected for e in res.per_group.values()]
        assert min(taus) <= res.weighted.tau <= max(taus)
        assert sum(res.weighted.weights.values()) == pytest.approx(1.0)
        counts = {g: e.n_eff for g, e in res.per_group.items()}
        total = sum(counts.values())
        assert res.weighted.weights == pytest.approx({g: c / total for g, c in counts.items()})

    def test_single_group_collapses(self, rng):
        n = 20_000
        x1, x2 = rng.uniform(-50, 50, n), rng.uniform(-50, 50, n)
        y = 0.1 + 0.3 * ((x1 >= 0) & (x2 >= 0)) + 0.05 * rng.normal(size=n)
        rule = AssignmentRule(cutoff2={"only": 0.0})
        res = multicutoff_rd(Dataset(y=y, x1=x1, x2=x2, group=["only"] * n), rule)
        g = res.per_group["only"]
        assert g == res.pooled
        assert res.weighted.tau == g.tau_bias_corrected
        assert res.weighted.se == pytest.approx(g.se_robust, rel=1e-15)

    def test_small_group_is_skipped(self, rng):
        n = 20_000
        x1, x2 = rng.uniform(-50, 50, n), rng.uniform(-50, 50, n)
        groups = np.where(np.arange(n) < 15, "tiny", "big")
        y = 0.3 * ((x1 >= 0) & (x2 >= 0)) + 0.05 * rng.normal(size=n)
        rule = AssignmentRule(cutoff2={"tiny": 0.0, "big": 0.0})
        res = multicutoff_rd(Dataset(y=y, x1=x1, x2=x2, group=groups), rule)
        assert "tiny" in res.skipped and list(res.per_group) == ["big"]
        assert res.weighted.weights == {"big": 1.0}

    def test_unknown_label_rejected(self, three_group):
        _, ds = three_group
        with pytest.raises(DataError):
            multicutoff_rd(ds, AssignmentRule(cutoff2={"rural": 40.75}))

    def test_requires_groups(self, constant_ds):
        with pytest.raises(DataError):
            multicutoff_rd(Dataset(y=constant_ds.y, x1=constant_ds.x1, x2=constant_ds.x2, normalized=True))


def test_weighted_average_formula():
    def est(t, s, n):
        return RdEstimate.build(t, s, t, s, h=1, b=1, n_left=n, n_right=n)

    w = weighted_average({"a": est(0.1, 0.02, 100), "b": est(0.4, 0.04, 300)})
    assert w.tau == pytest.approx(0.25 * 0.1 + 0.75 * 0.4)
    assert w.se == pytest.approx(np.sqrt(0.25**2 * 0.02**2 + 0.75**2 * 0.04**2))

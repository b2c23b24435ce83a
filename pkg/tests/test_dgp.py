import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brdd.data import AssignmentRule, eligibility, validate_and_normalize
from brdd.dgp import (
    DgpConfig,
    Marginal,
    TauProfile,
    check_probability_surface,
    generate,
    generate_univariate,
    true_tau,
)
from brdd.errors import ConfigError

SMALL = DgpConfig(n=20_000, seed=5)


def test_same_seed_identical_bytes():
    a, b = generate(SMALL), generate(SMALL)
    for col in ("y", "x1", "x2", "t"):
        assert getattr(a, col).tobytes() == getattr(b, col).tobytes()
    assert a.group.tolist() == b.group.tolist()


def test_different_seed_differs():
    a, b = generate(SMALL), generate(SMALL.with_(seed=6))
    assert not np.array_equal(a.y, b.y)


def test_full_compliance_is_sharp():
    ds = validate_and_normalize(generate(SMALL.with_(compliance=1.0)), SMALL.rule)
    assert np.array_equal(ds.t, eligibility(ds.x1, ds.x2).astype(float))


def test_partial_take_up_rate():
    cfg = DgpConfig(n=100_000, seed=1)
    ds = validate_and_normalize(generate(cfg), cfg.rule)
    z = eligibility(ds.x1, ds.x2) == 1
    assert ds.t[z].mean() == pytest.approx(0.59, abs=0.01)
    assert ds.t[~z].sum() == 0


def test_marginals_truncated():
    ds = generate(SMALL)
    assert ds.x1.min() >= 0 and ds.x1.max() <= 500
    assert ds.x2.min() >= 0 and ds.x2.max() <= 100
    assert ds.x1.mean() == pytest.approx(249.88, abs=2.0)


def test_group_shares():
    ds = generate(DgpConfig(n=50_000, seed=2))
    shares = {g: np.mean(ds.group == g) for g in ("main-city", "urban", "rural")}
    assert shares == pytest.approx({"main-city": 0.5, "urban": 0.3, "rural": 0.2}, abs=0.01)


def test_rounded_scores():
    ds = generate(SMALL.with_(round_x1=True))
    assert np.array_equal(ds.x1, np.round(ds.x1))


@pytest.mark.parametrize("tau,boundary,loc,expected", [
    (TauProfile("constant", 0.3), "B1", 17.0, 0.3),
    (TauProfile("constant", 0.3), "B2", 0.0, 0.3),
    (TauProfile("linear_x2", 0.4, -0.003), "B1", 100.0, 0.1),
    (TauProfile("linear_x2", 0.4, -0.003), "B2", 55.0, 0.4),
    (TauProfile("linear_x1", 0.2, 0.01), "B2", 10.0, 0.3),
    (TauProfile("vanishing", 0.3, vanish_at=30.0), "B2", 0.0, 0.3),
    (TauProfile("vanishing", 0.3, vanish_at=30.0), "B2", 15.0, 0.15),
    (TauProfile("vanishing", 0.3, vanish_at=30.0), "B2", 190.0, 0.0),
    (TauProfile("vanishing", 0.3, vanish_at=30.0), "B1", 40.0, 0.3),
])
def test_true_tau(tau, boundary, loc, expected):
    assert true_tau(DgpConfig(tau=tau), boundary, loc) == pytest.approx(expected, abs=1e-12)


def test_true_tau_group_effects():
    cfg = DgpConfig(group_effects={"main-city": 0.36, "urban": 0.2, "rural": 0.18})
    assert true_tau(cfg, "B1", 3.0, "urban") == 0.2
    with pytest.raises(ConfigError):
        true_tau(cfg, "B1", 3.0)
    with pytest.raises(ValueError):
        true_tau(cfg, "B1", -1.0, "urban")


def test_mean_field_matches_closed_form():
    cfg = DgpConfig(n=5000, noise_sd=0.0, compliance=1.0, tau=TauProfile("linear_x2", 0.4, -0.003), seed=3)
    raw = generate(cfg)
    ds = validate_and_normalize(raw, cfg.rule)
    expected = cfg.baseline_mean(ds.x1, ds.x2) + ds.t * (0.4 - 0.003 * ds.x2)
    assert np.max(np.abs(ds.y - expected)) <= 1e-12


def test_heteroskedastic_noise_grows_with_distance():
    cfg = DgpConfig(n=50_000, heteroskedastic=True, compliance=1.0, seed=4)
    ds = validate_and_normalize(generate(cfg), cfg.rule)
    resid = ds.y - cfg.baseline_mean(ds.x1, ds.x2) - ds.t * 0.3
    near = np.abs(ds.x1) < 10
    far = np.abs(ds.x1) > 80
    assert resid[far].std() > 2 * resid[near].std()


def test_bernoulli_outcomes():
    cfg = DgpConfig(n=5000, outcome_kind="bernoulli", seed=8)
    y = generate(cfg).y
    assert set(np.unique(y).tolist()) <= {0.0, 1.0}


def test_bernoulli_out_of_range_rejected():
    cfg = DgpConfig(outcome_kind="bernoulli", baseline=((0, 0, 0.9), (1, 0, 0.3)))
    with pytest.raises(ConfigError, match="leaves"):
        check_probability_surface(cfg)
    with pytest.raises(ConfigError):
        generate(cfg)


@pytest.mark.parametrize("kw", [
    dict(n=0), dict(compliance=1.5), dict(noise_sd=-1.0), dict(outcome_kind="count"),
    dict(baseline=((2, 2, 1.0),)), dict(group_shares={"urban": 1.0}),
    dict(group_shares={"main-city": 0.5, "urban": 0.3, "rural": 0.3}),
])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        DgpConfig(**kw)


def test_invalid_profiles():
    with pytest.raises(ConfigError):
        TauProfile("quadratic")
    with pytest.raises(ConfigError):
        TauProfile("vanishing", 0.3)
    with pytest.raises(ConfigError):
        Marginal(0, 1, 0, 1, kind="beta")


def test_dict_round_trip():
    cfg = DgpConfig(tau=TauProfile("vanishing", 0.3, vanish_at=30.0), heteroskedastic=True,
                    dist1=Marginal(0, 1, -3, 3, "uniform"), rule=AssignmentRule(), group_shares=None, seed=9)
    assert DgpConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        DgpConfig.from_dict({**cfg.to_dict(), "extra": 1})


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_univariate_structure(seed):
    s = generate_univariate(n=500, compliance=0.7, seed=seed)
    assert np.all(np.abs(s.x) <= 1)
    assert np.array_equal(s.z, (s.x >= 0).astype(float))
    assert np.all(s.t <= s.z)

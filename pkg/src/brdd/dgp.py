"""Synthetic data with a known boundary treatment function.

The default configuration mimics the program geometry: a test score
(mean 249.88, sd 43.16, eligible at or above 310) and a wealth index (mean
36.28, sd 18.14, eligible at or below a location-specific cutoff), with
take-up 0.59 among the eligible.

Outcomes are ``y = m(x) + t * tau(x) + e`` in normalized coordinates, where
``t`` is take-up (zero for ineligible units), so the intention-to-treat jump
along a boundary is ``compliance * tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from .data import AssignmentRule, Dataset, _center, check_boundary, eligibility
from .errors import ConfigError

TAU_KINDS = ("constant", "linear_x1", "linear_x2", "vanishing")


def _strict(cls, d, what):
    if not isinstance(d, Mapping):
        raise ConfigError(f"{what} must be a mapping")
    names = {f.name for f in fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"unknown {what} key(s): {sorted(extra)}")
    return dict(d)


@dataclass(frozen=True)
class Marginal:
    """Normal marginal for a raw running variable, optionally clipped."""

    mean: float
    sd: float
    low: float | None = None
    high: float | None = None
    kind: str = "normal"

    def __post_init__(self):
        if self.kind not in ("normal", "uniform"):
            raise ConfigError(f"unknown marginal kind {self.kind!r}")
        if not self.sd > 0:
            raise ConfigError("marginal sd must be positive")

    def sample(self, rng, n):
        if self.kind == "normal":
            x = rng.normal(self.mean, self.sd, n)
        else:
            half = self.sd * math.sqrt(3.0)
            x = rng.uniform(self.mean - half, self.mean + half, n)
        if self.low is not None or self.high is not None:
            x = np.clip(x, self.low, self.high)
        return x

    @classmethod
    def from_dict(cls, d):
        return cls(**_strict(cls, d, "marginal"))


@dataclass(frozen=True)
class TauProfile:
    """Treatment effect over the eligible quadrant, in normalized units.

    ``constant``: ``value``.
    ``linear_x2``: ``value + slope * x2`` (varies along B1, constant on B2).
    ``linear_x1``: ``value + slope * x1`` (varies along B2, constant on B1).
    ``vanishing``: ``value * max(0, 1 - x1 / vanish_at)``; zero for test
    scores beyond ``vanish_at`` along B2.
    """

    kind: str = "constant"
    value: float = 0.3
    slope: float = 0.0
    vanish_at: float | None = None

    def __post_init__(self):
        if self.kind not in TAU_KINDS:
            raise ConfigError(f"tau kind must be one of {TAU_KINDS}, got {self.kind!r}")
        if self.kind == "vanishing" and not (self.vanish_at and self.vanish_at > 0):
            raise ConfigError("vanishing profile needs a positive vanish_at")

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.kind == "constant":
            out = np.full(np.broadcast(x1, x2).shape, self.value)
        elif self.kind == "linear_x2":
            out = self.value + self.slope * x2 + 0.0 * x1
        elif self.kind == "linear_x1":
            out = self.value + self.slope * x1 + 0.0 * x2
        else:
            out = self.value * np.clip(1.0 - x1 / self.vanish_at, 0.0, 1.0) + 0.0 * x2
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(**_strict(cls, d, "tau"))


DEFAULT_BASELINE = ((0, 0, 0.4), (1, 0, 0.05), (0, 1, 0.03))


@dataclass(frozen=True)
class DgpConfig:
    """Recipe for one synthetic dataset.

    ``baseline`` lists ``(i, j, c)`` terms of the smooth surface
    ``m = sum c * (x1 / sd1)^i * (x2 / sd2)^j`` in normalized coordinates
    (total degree at most 3).  ``group_effects`` replaces ``tau`` with a
    constant effect per cutoff group.
    """

    n: int = 100_000
    dist1: Marginal = field(default_factory=lambda: Marginal(249.88, 43.16, 0.0, 500.0))
    dist2: Marginal = field(default_factory=lambda: Marginal(36.28, 18.14, 0.0, 100.0))
    rule: AssignmentRule = field(default_factory=AssignmentRule.program_default)
    group_shares: Mapping | None = field(
        default_factory=lambda: {"main-city": 0.5, "urban": 0.3, "rural": 0.2}
    )
    baseline: tuple = DEFAULT_BASELINE
    tau: TauProfile = field(default_factory=TauProfile)
    group_effects: Mapping | None = None
    compliance: float = 0.59
    noise_sd: float = 0.1
    heteroskedastic: bool = False
    outcome_kind: str = "continuous"
    round_x1: bool = False
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ConfigError("n must be positive")
        if not 0.0 <= self.compliance <= 1.0:
            raise ConfigError("compliance must be a probability")
        if self.outcome_kind not in ("continuous", "bernoulli"):
            raise ConfigError("outcome_kind must be 'continuous' or 'bernoulli'")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")
        base = tuple((int(i), int(j), float(c)) for i, j, c in self.baseline)
        if any(i < 0 or j < 0 or i + j > 3 for i, j, _ in base):
            raise ConfigError("baseline terms must have non-negative powers and total degree <= 3")
        object.__setattr__(self, "baseline", base)
        if self.rule.multi_cutoff:
            shares = self.group_shares or {}
            if set(shares) != set(self.rule.cutoff2):
                raise ConfigError("group_shares must name exactly the rule's cutoff groups")
            if not math.isclose(sum(shares.values()), 1.0, abs_tol=1e-9) or min(shares.values()) < 0:
                raise ConfigError("group_shares must be non-negative and sum to 1")
        if self.group_effects is not None:
            if not self.rule.multi_cutoff or set(self.group_effects) != set(self.rule.cutoff2):
                raise ConfigError("group_effects must name exactly the rule's cutoff groups")

    def with_(self, **kw) -> "DgpConfig":
        return replace(self, **kw)

    def baseline_mean(self, x1n, x2n):
        s1, s2 = self.dist1.sd, self.dist2.sd
        m = np.zeros(np.broadcast(x1n, x2n).shape)
        for i, j, c in self.baseline:
            m = m + c * (x1n / s1) ** i * (x2n / s2) ** j
        return m

    def effect(self, x1n, x2n, group=None):
        if self.group_effects is None:
            return self.tau(x1n, x2n)
        if group is None:
            raise ConfigError("group effects need group labels")
        return np.array([self.group_effects[g] for g in np.asarray(group)], dtype=float)

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "dist1": _marginal_dict(self.dist1),
            "dist2": _marginal_dict(self.dist2),
            "rule": self.rule.to_dict(),
            "group_shares": dict(self.group_shares) if self.group_shares else None,
            "baseline": [list(t) for t in self.baseline],
            "tau": {"kind": self.tau.kind, "value": self.tau.value, "slope": self.tau.slope,
                    "vanish_at": self.tau.vanish_at},
            "group_effects": dict(self.group_effects) if self.group_effects else None,
            "compliance": self.compliance,
            "noise_sd": self.noise_sd,
            "heteroskedastic": self.heteroskedastic,
            "outcome_kind": self.outcome_kind,
            "round_x1": self.round_x1,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DgpConfig":
        d = _strict(cls, d, "dgp")
        if "dist1" in d:
            d["dist1"] = Marginal.from_dict(d["dist1"])
        if "dist2" in d:
            d["dist2"] = Marginal.from_dict(d["dist2"])
        if "rule" in d:
            d["rule"] = AssignmentRule.from_dict(d["rule"])
        if "tau" in d:
            d["tau"] = TauProfile.from_dict(d["tau"])
        if "baseline" in d:
            d["baseline"] = tuple(tuple(t) for t in d["baseline"])
        return cls(**d)


def _marginal_dict(m: Marginal) -> dict:
    return {"mean": m.mean, "sd": m.sd, "low": m.low, "high": m.high, "kind": m.kind}


def _draw_running(cfg: DgpConfig, rng, n):
    x1 = cfg.dist1.sample(rng, n)
    if cfg.round_x1:
        x1 = np.round(x1)
    x2 = cfg.dist2.sample(rng, n)
    group = None
    if cfg.rule.multi_cutoff:
        labels = sorted(cfg.rule.cutoff2)
        probs = np.array([cfg.group_shares[g] for g in labels])
        group = np.asarray(labels, dtype=object)[rng.choice(len(labels), size=n, p=probs)]
    return x1, x2, group


def _normalized(cfg, x1, x2, group):
    rule = cfg.rule
    return (
        _center(x1, float(rule.cutoff1), rule.direction1),
        _center(x2, rule.cutoff2_for(group), rule.direction2),
    )


def check_probability_surface(cfg: DgpConfig, draws: int = 10_000):
    """Raise ConfigError unless treated and untreated means lie in [0, 1]."""
    rng = np.random.default_rng([int(cfg.seed), 7919])
    x1, x2, group = _draw_running(cfg, rng, draws)
    x1n, x2n = _normalized(cfg, x1, x2, group)
    m = cfg.baseline_mean(x1n, x2n)
    treated = m + cfg.effect(x1n, x2n, group)
    lo = min(m.min(), treated[eligibility(x1n, x2n) == 1].min(initial=np.inf))
    hi = max(m.max(), treated[eligibility(x1n, x2n) == 1].max(initial=-np.inf))
    if lo < 0.0 or hi > 1.0:
        raise ConfigError(f"bernoulli outcome mean leaves [0, 1] (range {lo:.3f} to {hi:.3f})")


def generate(cfg: DgpConfig) -> Dataset:
    """Draw a raw (un-normalized) dataset; identical seeds give identical bytes."""
    if cfg.outcome_kind == "bernoulli":
        check_probability_surface(cfg)
    rng = np.random.default_rng(int(cfg.seed))
    n = int(cfg.n)
    x1, x2, group = _draw_running(cfg, rng, n)
    x1n, x2n = _normalized(cfg, x1, x2, group)
    z = eligibility(x1n, x2n)
    t = (z == 1) & (rng.random(n) < cfg.compliance)
    mean = cfg.baseline_mean(x1n, x2n) + t * cfg.effect(x1n, x2n, group)
    if cfg.outcome_kind == "bernoulli":
        y = (rng.random(n) < mean).astype(float)
    else:
        sd = cfg.noise_sd
        if cfg.heteroskedastic:
            sd = cfg.noise_sd * (0.5 + np.abs(x1n) / cfg.dist1.sd)
        y = mean + sd * rng.standard_normal(n)
    return Dataset(y=y, x1=x1, x2=x2, t=t.astype(float), group=group)


def true_tau(cfg: DgpConfig, boundary: str, location: float, group: str | None = None) -> float:
    """Closed-form effect at a boundary point (the estimation oracle).

    B1 points are ``(0, location)``; B2 points are ``(location, 0)``.
    """
    boundary = check_boundary(boundary)
    if location < 0:
        raise ValueError("boundary locations are non-negative")
    pt = (0.0, location) if boundary == "B1" else (location, 0.0)
    if cfg.group_effects is not None:
        if group is None:
            raise ConfigError("group effects need a group label")
        return float(cfg.group_effects[group])
    return float(cfg.tau(*pt))


@dataclass(frozen=True)
class UnivariateSample:
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    z: np.ndarray


def generate_univariate(n=5000, tau=0.3, left=(0.5, 0.8, -1.0), right=(0.5, 0.8, 0.5),
                        compliance=1.0, noise_sd=0.3, seed=0) -> UnivariateSample:
    """Single running variable on [-1, 1] with quadratic mean on each side.

    ``left``/``right`` are ``(c0, c1, c2)`` coefficients of ``c0 + c1 x + c2 x^2``;
    the take-up jump is ``compliance`` and the outcome jump ``compliance * tau``.
    """
    rng = np.random.default_rng(int(seed))
    x = rng.uniform(-1.0, 1.0, n)
    z = (x >= 0).astype(float)
    t = z * (rng.random(n) < compliance)
    cl = np.polynomial.polynomial.polyval(x, left)
    cr = np.polynomial.polynomial.polyval(x, right)
    y = np.where(x >= 0, cr, cl) + tau * t + noise_sd * rng.standard_normal(n)
    return UnivariateSample(x=x, y=y, t=t, z=z)

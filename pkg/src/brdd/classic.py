"""Single-score reductions of a two-cutoff design.

Centering collapses both normalized running variables into their minimum;
the conditional approach runs a standard discontinuity on one variable among
units eligible on the other; the multi-cutoff approach estimates per cutoff
group, pooled, and as a count-weighted average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Z_95, AssignmentRule, Dataset, RdEstimate, require_normalized, validate_and_normalize
from .engine import DEFAULT_PILOT_RATIO, discontinuity
from .errors import DataError, EstimationError, InsufficientDataError

_OTHER = {"x1": "x2", "x2": "x1"}


def centering_score(x1c, x2c):
    """Minimum of the two centered scores; non-negative exactly when eligible."""
    out = np.minimum(x1c, x2c)
    return float(out) if np.ndim(out) == 0 else out


def _fit(ds: Dataset, x, kind, kernel, bandwidth, pilot_ratio, robust_variance):
    t = ds.t if kind == "fuzzy" else None
    return discontinuity(x, ds.y, t, 0.0, kind=kind, kernel=kernel, bandwidth=bandwidth,
                         pilot_ratio=pilot_ratio, robust_variance=robust_variance)


def centering_rd(ds: Dataset, kind: str = "sharp", kernel: str = "triangular", bandwidth=None,
                 pilot_ratio: float = DEFAULT_PILOT_RATIO, robust_variance: str = "joint") -> RdEstimate:
    """Discontinuity in the minimum centered score at zero."""
    require_normalized(ds)
    return _fit(ds, centering_score(ds.x1, ds.x2), kind, kernel, bandwidth, pilot_ratio, robust_variance)


def conditional_subsample(ds: Dataset, along: str) -> Dataset:
    """Units eligible on the margin other than ``along``."""
    if along not in _OTHER:
        raise ValueError(f"along must be 'x1' or 'x2', got {along!r}")
    keep = getattr(ds, _OTHER[along]) >= 0
    if not keep.any():
        raise InsufficientDataError(f"no observations with {_OTHER[along]} >= 0", count=0)
    return ds.subset(keep)


def conditional_rd(ds: Dataset, along: str = "x1", kind: str = "sharp", kernel: str = "triangular",
                   bandwidth=None, pilot_ratio: float = DEFAULT_PILOT_RATIO,
                   robust_variance: str = "joint") -> RdEstimate:
    """Discontinuity along one running variable, restricted to eligibility on the other."""
    require_normalized(ds)
    sub = conditional_subsample(ds, along)
    return _fit(sub, getattr(sub, along), kind, kernel, bandwidth, pilot_ratio, robust_variance)


@dataclass(frozen=True)
class WeightedEstimate:
    """Weighted average of independent group estimates.

    ``weights`` are normalized in-bandwidth counts; standard errors combine
    group variances as independent.
    """

    tau: float
    se: float
    tau_conventional: float
    se_conventional: float
    weights: dict = field(default_factory=dict)
    scheme: str = "in_bandwidth_count"

    @property
    def ci(self) -> tuple:
        return (self.tau - Z_95 * self.se, self.tau + Z_95 * self.se)

    def to_dict(self) -> dict:
        lo, hi = self.ci
        return {"tau": self.tau, "se": self.se, "tau_conventional": self.tau_conventional,
                "se_conventional": self.se_conventional, "ci_lower": lo, "ci_upper": hi,
                "weights": dict(self.weights), "scheme": self.scheme}


@dataclass(frozen=True)
class MultiCutoffResult:
    per_group: dict
    pooled: RdEstimate
    weighted: WeightedEstimate | None
    skipped: dict = field(default_factory=dict)
    along: str = "x2"


def weighted_average(per_group: dict) -> WeightedEstimate:
    """Combine group estimates with weights proportional to ``n_left + n_right``."""
    if not per_group:
        raise EstimationError("no group estimates to combine")
    labels = sorted(per_group)
    counts = np.array([per_group[g].n_eff for g in labels], dtype=float)
    w = counts / counts.sum()
    tau = np.array([per_group[g].tau_bias_corrected for g in labels])
    tau_c = np.array([per_group[g].tau_conventional for g in labels])
    se = np.array([per_group[g].se_robust for g in labels])
    se_c = np.array([per_group[g].se_conventional for g in labels])
    return WeightedEstimate(
        tau=float(w @ tau),
        se=math.sqrt(float(w**2 @ se**2)),
        tau_conventional=float(w @ tau_c),
        se_conventional=math.sqrt(float(w**2 @ se_c**2)),
        weights={g: float(v) for g, v in zip(labels, w)},
    )


def multicutoff_rd(ds: Dataset, rule: AssignmentRule | None = None, kind: str = "sharp",
                   along: str = "x2", kernel: str = "triangular", bandwidth=None,
                   pilot_ratio: float = DEFAULT_PILOT_RATIO,
                   robust_variance: str = "joint") -> MultiCutoffResult:
    """Per-group, pooled and weighted conditional estimates along the multi-cutoff variable.

    A raw dataset is normalized with ``rule`` first, so each group's score is
    centered at its own cutoff.  Groups whose estimation fails are reported in
    ``skipped`` and left out of the weighted average.
    """
    if not ds.normalized:
        if rule is None:
            raise DataError("a raw dataset needs an assignment rule")
        ds = validate_and_normalize(ds, rule)
    if ds.group is None:
        raise DataError("multi-cutoff estimation needs group labels")
    if rule is not None and rule.multi_cutoff:
        unknown = set(np.unique(ds.group).tolist()) - set(rule.cutoff2)
        if unknown:
            raise DataError(f"group label(s) without a cutoff: {sorted(map(str, unknown))}")

    kw = dict(kind=kind, kernel=kernel, bandwidth=bandwidth, pilot_ratio=pilot_ratio,
              robust_variance=robust_variance)
    pooled = conditional_rd(ds, along, **kw)
    per_group, skipped = {}, {}
    for g in sorted(np.unique(ds.group).tolist(), key=str):
        try:
            per_group[str(g)] = conditional_rd(ds.subset(ds.group == g), along, **kw)
        except EstimationError as exc:
            skipped[str(g)] = str(exc)
    weighted = weighted_average(per_group) if per_group else None
    return MultiCutoffResult(per_group=per_group, pooled=pooled, weighted=weighted,
                             skipped=skipped, along=along)

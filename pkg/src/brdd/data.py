"""Dataset, assignment rule and result containers shared by all estimators.

Running variables are stored *normalized*: each is centered at its
(group-specific) cutoff and sign-flipped where eligibility is granted by
falling below the cutoff, so that eligibility is always
``x1 >= 0 and x2 >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, EmptyDatasetError

Z_95 = 1.959963984540054

_GE = {">=", "≥", "ge", "geq", "above"}
_LE = {"<=", "≤", "le", "leq", "below"}


def _direction(d: str) -> str:
    d = str(d).strip().lower()
    if d in _GE:
        return ">="
    if d in _LE:
        return "<="
    raise ConfigError(f"unknown cutoff direction {d!r} (use '>=' or '<=')")


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    if arr.ndim != 1:
        raise DataError("dataset columns must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable columnar observations.

    ``t`` may be omitted on raw input; normalization then sets it equal to
    eligibility (a sharp design).  ``z`` is filled in by
    :func:`validate_and_normalize`.
    """

    y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    t: np.ndarray | None = None
    group: np.ndarray | None = None
    z: np.ndarray | None = None
    normalized: bool = False
    diagnostics: Mapping = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "y", _frozen(self.y))
        set_(self, "x1", _frozen(self.x1))
        set_(self, "x2", _frozen(self.x2))
        n = self.y.shape[0]
        if self.t is not None:
            set_(self, "t", _frozen(self.t))
        if self.z is not None:
            set_(self, "z", _frozen(self.z, dtype=np.int8))
        if self.group is not None:
            set_(self, "group", _frozen([str(g) for g in self.group], dtype=object))
        for name in ("x1", "x2", "t", "group", "z"):
            col = getattr(self, name)
            if col is not None and col.shape[0] != n:
                raise DataError(f"column {name!r} has length {col.shape[0]}, expected {n}")
        set_(self, "diagnostics", dict(self.diagnostics))

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    def __len__(self):
        return self.n

    def subset(self, index) -> "Dataset":
        """Rows selected by a boolean mask, integer index array or slice."""

        def take(col):
            return None if col is None else col[index]

        return Dataset(
            y=self.y[index],
            x1=self.x1[index],
            x2=self.x2[index],
            t=take(self.t),
            group=take(self.group),
            z=take(self.z),
            normalized=self.normalized,
            diagnostics=self.diagnostics,
        )

    def equals(self, other: "Dataset") -> bool:
        """Exact equality of every column (NaN-aware) and of the flags."""
        if not isinstance(other, Dataset) or self.n != other.n:
            return False
        if self.normalized != other.normalized:
            return False
        for name in ("y", "x1", "x2", "t", "z"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b, equal_nan=a.dtype.kind == "f"):
                return False
        if (self.group is None) != (other.group is None):
            return False
        if self.group is not None and not np.array_equal(self.group, other.group):
            return False
        return True


@dataclass(frozen=True)
class AssignmentRule:
    """Per-variable cutoffs and directions defining eligibility.

    ``cutoff2`` may be a mapping from group label to cutoff (multi-cutoff
    designs).  A direction of ``'<='`` means values at or below the cutoff
    are eligible; the normalized variable is then ``cutoff - x``.
    """

    cutoff1: float = 0.0
    cutoff2: float | Mapping[str, float] = 0.0
    direction1: str = ">="
    direction2: str = ">="
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "direction1", _direction(self.direction1))
        object.__setattr__(self, "direction2", _direction(self.direction2))
        if not math.isfinite(float(self.cutoff1)):
            raise ConfigError("cutoff1 must be finite")
        if isinstance(self.cutoff2, Mapping):
            if not self.cutoff2:
                raise ConfigError("cutoff2 group map is empty")
            cut = {str(k): float(v) for k, v in self.cutoff2.items()}
            if not all(math.isfinite(v) for v in cut.values()):
                raise ConfigError("cutoff2 values must be finite")
            object.__setattr__(self, "cutoff2", cut)
        elif not math.isfinite(float(self.cutoff2)):
            raise ConfigError("cutoff2 must be finite")
        if not self.normalize and not self.is_identity:
            raise ConfigError(
                "normalize=False declares data already normalized; cutoffs must be 0 "
                "and directions '>='"
            )

    @property
    def multi_cutoff(self) -> bool:
        return isinstance(self.cutoff2, Mapping)

    @property
    def is_identity(self) -> bool:
        return (
            not self.multi_cutoff
            and float(self.cutoff1) == 0.0
            and float(self.cutoff2) == 0.0
            and self.direction1 == ">="
            and self.direction2 == ">="
        )

    def cutoff2_for(self, group) -> np.ndarray | float:
        if not self.multi_cutoff:
            return float(self.cutoff2)
        if group is None:
            raise DataError("rule has group-specific cutoffs but the dataset has no group column")
        labels = np.asarray(group, dtype=object)
        unknown = sorted(set(labels.tolist()) - set(self.cutoff2))
        if unknown:
            raise DataError(f"unresolvable group label(s): {unknown}")
        return np.array([self.cutoff2[g] for g in labels], dtype=float)

    def to_dict(self) -> dict:
        return {
            "cutoff1": float(self.cutoff1),
            "cutoff2": dict(self.cutoff2) if self.multi_cutoff else float(self.cutoff2),
            "direction1": self.direction1,
            "direction2": self.direction2,
            "normalize": self.normalize,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AssignmentRule":
        allowed = {"cutoff1", "cutoff2", "direction1", "direction2", "normalize"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown rule key(s): {sorted(extra)}")
        return cls(**dict(d))

    @classmethod
    def program_default(cls) -> "AssignmentRule":
        """Test score at or above 310; wealth index at or below a location cutoff."""
        return cls(
            cutoff1=310.0,
            cutoff2={"main-city": 57.21, "urban": 56.32, "rural": 40.75},
            direction1=">=",
            direction2="<=",
        )


IDENTITY_RULE = AssignmentRule()


def eligibility(x1, x2):
    """1 if both normalized running variables are at or above zero, else 0.

    Ties at zero are eligible.  Works elementwise on arrays.
    """
    out = (np.asarray(x1) >= 0) & (np.asarray(x2) >= 0)
    if out.ndim == 0:
        return int(out)
    return out.astype(np.int8)


def _center(x, cutoff, direction):
    return x - cutoff if direction == ">=" else cutoff - x


def validate_and_normalize(raw: Dataset, rule: AssignmentRule = IDENTITY_RULE) -> Dataset:
    """Drop incomplete rows, center and orient the running variables.

    Already-normalized datasets are returned unchanged.  Diagnostics record
    dropped rows, exact-cutoff ties and compliance shares; take-up among
    ineligible units sets the ``two_sided_noncompliance`` flag rather than
    raising.
    """
    if raw.normalized:
        return raw
    if raw.n == 0:
        raise EmptyDatasetError("dataset is empty")

    miss_run = np.isnan(raw.x1) | np.isnan(raw.x2)
    miss_y = np.isnan(raw.y) & ~miss_run
    keep = ~(miss_run | miss_y)
    ds = raw.subset(keep) if not keep.all() else raw
    if ds.n == 0:
        raise EmptyDatasetError("no complete rows after dropping missing values")

    if ds.t is not None:
        t = ds.t
        if np.isnan(t).any() or not np.isin(t, (0.0, 1.0)).all():
            raise DataError("take-up column must be binary 0/1")

    cut2 = rule.cutoff2_for(ds.group)
    x1 = _center(ds.x1, float(rule.cutoff1), rule.direction1)
    x2 = _center(ds.x2, cut2, rule.direction2)
    z = eligibility(x1, x2)
    t = ds.t if ds.t is not None else z.astype(float)

    elig = z == 1
    n_elig = int(elig.sum())
    noncompliant = int(((t == 1) & ~elig).sum())
    diag = {
        "n_raw": raw.n,
        "n": ds.n,
        "n_dropped_missing_running": int(miss_run.sum()),
        "n_dropped_missing_outcome": int(miss_y.sum()),
        "ties_x1": int((x1 == 0).sum()),
        "ties_x2": int((x2 == 0).sum()),
        "n_eligible": n_elig,
        "take_up_eligible": float(t[elig].mean()) if n_elig else float("nan"),
        "take_up_ineligible": float(t[~elig].mean()) if n_elig < ds.n else float("nan"),
        "n_takeup_ineligible": noncompliant,
        "two_sided_noncompliance": noncompliant > 0,
        "take_up_from_eligibility": ds.t is None,
    }
    if ds.group is not None:
        labels, counts = np.unique(ds.group, return_counts=True)
        diag["group_counts"] = {str(k): int(c) for k, c in zip(labels, counts)}
    return Dataset(
        y=ds.y, x1=x1, x2=x2, t=t, group=ds.group, z=z, normalized=True, diagnostics=diag
    )


def require_normalized(ds: Dataset):
    if not ds.normalized:
        raise DataError("estimators need a normalized dataset; call validate_and_normalize first")


@dataclass(frozen=True)
class RdEstimate:
    """One discontinuity estimate.

    The confidence interval is centered on the bias-corrected point and uses
    the robust standard error.  For fuzzy estimates ``first_stage`` is the
    conventional take-up jump and ``tau_conventional * first_stage`` equals
    the intention-to-treat jump.
    """

    tau_conventional: float
    se_conventional: float
    tau_bias_corrected: float
    se_robust: float
    ci_lower: float
    ci_upper: float
    h: float
    b: float
    n_left: int
    n_right: int
    kind: str = "sharp"
    first_stage: float | None = None
    first_stage_bias_corrected: float | None = None
    bandwidth_rule: str = "manual"
    flags: tuple = ()

    @classmethod
    def build(cls, tau_conventional, se_conventional, tau_bias_corrected, se_robust, **kw):
        half = Z_95 * se_robust
        return cls(
            tau_conventional=float(tau_conventional),
            se_conventional=float(se_conventional),
            tau_bias_corrected=float(tau_bias_corrected),
            se_robust=float(se_robust),
            ci_lower=float(tau_bias_corrected - half),
            ci_upper=float(tau_bias_corrected + half),
            **kw,
        )

    @property
    def n_eff(self) -> int:
        return self.n_left + self.n_right

    def covers(self, value: float) -> bool:
        return self.ci_lower <= value <= self.ci_upper

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


@dataclass(frozen=True)
class GridPoint:
    percentile: int
    location: float


@dataclass(frozen=True)
class SkippedPoint:
    percentile: int
    location: float
    reason: str


BOUNDARIES = ("B1", "B2")


def check_boundary(boundary: str) -> str:
    b = str(boundary).upper()
    if b not in BOUNDARIES:
        raise ConfigError(f"boundary must be 'B1' or 'B2', got {boundary!r}")
    return b


@dataclass(frozen=True)
class BoundaryGrid:
    """Percentile-indexed evaluation points along one boundary.

    On B1 (x1 = 0) the points move along x2; on B2 (x2 = 0) along x1.
    """

    boundary_id: str
    points: tuple
    fraction: float | None = None
    skipped: tuple = ()

    @property
    def locations(self) -> np.ndarray:
        return np.array([p.location for p in self.points], dtype=float)

    @property
    def percentiles(self) -> np.ndarray:
        return np.array([p.percentile for p in self.points], dtype=int)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class BoundaryCurve:
    """Per-point estimates along a boundary.

    ``points[i]`` is the grid point of ``estimates[i]``; grid points that
    produced no estimate are listed in ``skipped`` with a reason.
    """

    grid: BoundaryGrid
    points: tuple
    estimates: tuple
    skipped: tuple = ()
    method: str = "flexible"
    kind: str = "sharp"
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if len(self.points) != len(self.estimates):
            raise ValueError("curve points and estimates must correspond one to one")

    @property
    def boundary_id(self) -> str:
        return self.grid.boundary_id

    def __len__(self):
        return len(self.estimates)

    @property
    def percentiles(self) -> np.ndarray:
        return np.array([p.percentile for p in self.points], dtype=int)

    @property
    def locations(self) -> np.ndarray:
        return np.array([p.location for p in self.points], dtype=float)

    @property
    def tau(self) -> np.ndarray:
        return np.array([e.tau_bias_corrected for e in self.estimates], dtype=float)

    @property
    def tau_conventional(self) -> np.ndarray:
        return np.array([e.tau_conventional for e in self.estimates], dtype=float)

    @property
    def se(self) -> np.ndarray:
        return np.array([e.se_robust for e in self.estimates], dtype=float)

    @property
    def ci(self) -> np.ndarray:
        return np.array([(e.ci_lower, e.ci_upper) for e in self.estimates], dtype=float)

    def interior(self, lo: int = 5, hi: int = 95) -> np.ndarray:
        """Boolean mask of points with percentile in ``[lo, hi]``."""
        p = self.percentiles
        return (p >= lo) & (p <= hi)

    def mean(self, weights: str = "uniform", lo: int = 1, hi: int = 99) -> float:
        """Average bias-corrected effect over points with percentile in ``[lo, hi]``.

        ``weights='inverse_variance'`` weights each point by ``1 / se_robust**2``.
        """
        mask = self.interior(lo, hi)
        if not mask.any():
            return float("nan")
        tau = self.tau[mask]
        if weights == "uniform":
            return float(tau.mean())
        if weights == "inverse_variance":
            w = 1.0 / self.se[mask] ** 2
            return float(np.sum(w * tau) / np.sum(w))
        raise ValueError(f"unknown weights {weights!r}")

    def with_meta(self, **kw) -> "BoundaryCurve":
        return replace(self, meta={**self.meta, **kw})


def as_points(pairs: Sequence) -> tuple:
    return tuple(GridPoint(int(p), float(loc)) for p, loc in pairs)

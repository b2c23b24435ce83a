"""Treatment effects along the L-shaped boundary of a two-cutoff rule.

Boundary B1 is ``x1 = 0, x2 >= 0`` (the test-score cutoff, points move along
x2); B2 is ``x2 = 0, x1 >= 0`` (the wealth cutoff, points move along x1).

Three estimators are provided:

* the flexible estimator: at each percentile of the non-fixed coordinate,
  take the nearest fraction of eligible-margin observations and run a
  univariate discontinuity in the other coordinate with its own bandwidth;
* a full-interaction surface with 16 coefficients whose plane jumps give
  affine effect curves;
* a bivariate local linear estimator with a fixed diagonal bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .data import (
    BoundaryCurve,
    BoundaryGrid,
    Dataset,
    GridPoint,
    RdEstimate,
    SkippedPoint,
    check_boundary,
    require_normalized,
)
from .engine import (
    DEFAULT_PILOT_RATIO,
    MIN_FIRST_STAGE,
    MIN_SIDE_FOR_SELECTION,
    _ratio_se,
    discontinuity,
    kernel_code,
    kernel_weight,
    select_bandwidth,
    wls_intercepts,
    wls_solve,
)
from .errors import ConfigError, EstimationError, InsufficientDataError, SingularFitError, WeakFirstStageError

MIN_GRID_OBS = 100
MIN_WINDOW = 2 * MIN_SIDE_FOR_SELECTION


def boundary_coords(ds: Dataset, boundary: str):
    """``(disc, along)`` columns: the discontinuity coordinate and the one moving along the boundary."""
    boundary = check_boundary(boundary)
    return (ds.x1, ds.x2) if boundary == "B1" else (ds.x2, ds.x1)


def boundary_point(boundary: str, location: float) -> tuple:
    """Normalized ``(x1, x2)`` of a boundary location."""
    return (0.0, float(location)) if check_boundary(boundary) == "B1" else (float(location), 0.0)


def _check_fraction(fraction):
    if not (0.0 < fraction <= 0.5):
        raise ConfigError(f"window fraction must lie in (0, 0.5], got {fraction}")


# ---------------------------------------------------------------------------
# grid and windows


def build_boundary_grid(ds: Dataset, boundary: str, increment_pct: int = 1,
                        fraction: float | None = None) -> BoundaryGrid:
    """Percentiles of the non-fixed coordinate on its eligible margin.

    Percentiles ``increment_pct, 2 * increment_pct, ... < 100`` are taken
    as order statistics (inverted empirical CDF), so every location is an
    observed value.  A percentile whose location repeats an earlier one is
    dropped and listed in ``skipped``.
    """
    require_normalized(ds)
    boundary = check_boundary(boundary)
    if not (isinstance(increment_pct, (int, np.integer)) and 1 <= increment_pct <= 50):
        raise ConfigError("increment_pct must be an integer in [1, 50]")
    _, along = boundary_coords(ds, boundary)
    vals = along[along >= 0]
    if vals.size < MIN_GRID_OBS:
        raise InsufficientDataError(
            f"{vals.size} eligible observations on the {boundary} margin; need {MIN_GRID_OBS}",
            count=int(vals.size),
        )
    pcts = np.arange(increment_pct, 100, increment_pct)
    # exact integer rank ceil(p * m / 100); floating percentiles misround at e.g. 8% of 100
    m = int(vals.size)
    ranks = np.maximum(-(-pcts * m // 100), 1)
    locs = np.sort(vals)[ranks - 1]
    points, skipped = [], []
    for p, loc in zip(pcts.tolist(), locs.tolist()):
        if points and loc == points[-1].location:
            skipped.append(SkippedPoint(p, loc, f"duplicate location (same as percentile {points[-1].percentile})"))
        else:
            points.append(GridPoint(p, loc))
    return BoundaryGrid(boundary, tuple(points), fraction, tuple(skipped))


@dataclass(frozen=True)
class _Margin:
    """Eligible-margin observations sorted by the non-fixed coordinate."""

    disc: np.ndarray
    along: np.ndarray
    y: np.ndarray
    t: np.ndarray

    @classmethod
    def of(cls, ds: Dataset, boundary: str):
        disc, along = boundary_coords(ds, boundary)
        idx = np.flatnonzero(along >= 0)
        idx = idx[np.argsort(along[idx], kind="stable")]
        return cls(*(np.ascontiguousarray(a[idx]) for a in (disc, along, ds.y, ds.t))), idx

    def window(self, location, k):
        start = int(_backend.kernels().nearest_window(self.along, float(location), int(k)))
        return start, slice(start, start + k)


def window_size(m: int, fraction: float) -> int:
    """``ceil(fraction * m)``, guarded against floating-point overshoot."""
    _check_fraction(fraction)
    return int(math.ceil(fraction * m - 1e-9))


def window_select(ds: Dataset, boundary: str, location: float, fraction: float) -> Dataset:
    """The ``ceil(fraction * m)`` eligible-margin observations nearest ``location``.

    ``m`` counts observations with the non-fixed coordinate at or above
    zero; all of them keep both signs of the discontinuity coordinate.  The
    window is contiguous in the sorted non-fixed coordinate, with ties
    resolved toward smaller values.
    """
    require_normalized(ds)
    margin, idx = _Margin.of(ds, boundary)
    k = window_size(margin.along.size, fraction)
    if k < MIN_WINDOW:
        raise InsufficientDataError(f"window of {k} observations is below the minimum {MIN_WINDOW}", count=k)
    _, sl = margin.window(location, k)
    return ds.subset(np.sort(idx[sl]))


def flexible_boundary_curve(ds: Dataset, boundary: str, fraction: float = 0.10, kind: str = "sharp",
                            kernel: str = "triangular", increment_pct: int = 1, bandwidth=None,
                            pilot_ratio: float = DEFAULT_PILOT_RATIO,
                            robust_variance: str = "joint") -> BoundaryCurve:
    """Moving-window discontinuity estimates along a boundary.

    Each grid point gets its own window and (unless ``bandwidth`` is given)
    its own plug-in bandwidth in the discontinuity coordinate.  Points whose
    window repeats the previous one, or whose estimation fails, are recorded
    in ``skipped`` with the reason.
    """
    boundary = check_boundary(boundary)
    grid = build_boundary_grid(ds, boundary, increment_pct, fraction)
    margin, _ = _Margin.of(ds, boundary)
    k = window_size(margin.along.size, fraction)
    if k < MIN_WINDOW:
        raise InsufficientDataError(f"window of {k} observations is below the minimum {MIN_WINDOW}", count=k)
    points, ests, skipped = [], [], list(grid.skipped)
    prev = None
    for gp in grid.points:
        start, sl = margin.window(gp.location, k)
        if start == prev:
            skipped.append(SkippedPoint(gp.percentile, gp.location, "duplicate window"))
            continue
        prev = start
        try:
            est = discontinuity(margin.disc[sl], margin.y[sl], margin.t[sl], 0.0, kind=kind,
                                kernel=kernel, bandwidth=bandwidth, pilot_ratio=pilot_ratio,
                                robust_variance=robust_variance)
        except EstimationError as exc:
            skipped.append(SkippedPoint(gp.percentile, gp.location, f"{type(exc).__name__}: {exc}"))
            continue
        points.append(gp)
        ests.append(est)
    skipped.sort(key=lambda s: s.percentile)
    return BoundaryCurve(grid, tuple(points), tuple(ests), tuple(skipped), method="flexible", kind=kind,
                         meta={"fraction": fraction, "window_size": k, "kernel": kernel})


# ---------------------------------------------------------------------------
# full-interaction surface

PAPAY_BASIS = (
    "1", "x1", "x2", "x1*x2",
    "T1", "T1*x1", "T1*x2", "T1*x1*x2",
    "T2", "T2*x1", "T2*x2", "T2*x1*x2",
    "T1*T2", "T1*T2*x1", "T1*T2*x2", "T1*T2*x1*x2",
)
_QUADRANTS = {(0, 0): "x1 < 0, x2 < 0", (1, 0): "x1 >= 0, x2 < 0",
              (0, 1): "x1 < 0, x2 >= 0", (1, 1): "x1 >= 0, x2 >= 0"}


def papay_design(x1, x2) -> np.ndarray:
    """The 16 columns named in ``PAPAY_BASIS``, with ``T_j = 1{x_j >= 0}``."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    t1 = (x1 >= 0).astype(float)
    t2 = (x2 >= 0).astype(float)
    base = np.column_stack([np.ones_like(x1), x1, x2, x1 * x2])
    return np.hstack([base, t1[:, None] * base, t2[:, None] * base, (t1 * t2)[:, None] * base])


@dataclass(frozen=True)
class PapayFit:
    """Coefficients in ``PAPAY_BASIS`` order and their HC1 covariance."""

    coefficients: np.ndarray
    covariance: np.ndarray
    bandwidths: tuple
    n_eff: int
    kernel: str = "triangular"
    outcome: str = "y"

    def coef(self, name: str) -> float:
        return float(self.coefficients[PAPAY_BASIS.index(name)])


def papay_fit(ds: Dataset, h1: float, h2: float, kernel: str = "triangular", outcome: str = "y") -> PapayFit:
    """Weighted least squares of the outcome on the 16-term interaction basis.

    Observations inside ``|x1| <= h1, |x2| <= h2`` carry product kernel
    weights ``K(x1/h1) K(x2/h2)``.

    Raises
    ------
    SingularFitError
        If any quadrant of the window has fewer than four weighted
        observations (its plane is not identified); the message names it.
    """
    require_normalized(ds)
    if not (h1 > 0 and h2 > 0):
        raise ConfigError("bandwidths must be positive")
    kernel_code(kernel)
    sel = (np.abs(ds.x1) <= h1) & (np.abs(ds.x2) <= h2)
    x1, x2 = ds.x1[sel], ds.x2[sel]
    yv = getattr(ds, outcome)[sel]
    w = kernel_weight(x1 / h1, kernel) * kernel_weight(x2 / h2, kernel)
    pos = w > 0
    if pos.sum() < 20:
        raise InsufficientDataError(f"{int(pos.sum())} weighted observations in the window; need 20",
                                    count=int(pos.sum()))
    q1 = (x1[pos] >= 0).astype(int)
    q2 = (x2[pos] >= 0).astype(int)
    for key, name in _QUADRANTS.items():
        cnt = int(np.sum((q1 == key[0]) & (q2 == key[1])))
        if cnt < 4:
            raise SingularFitError(f"quadrant {name} has {cnt} weighted observations; its plane is not identified",
                                   condition=math.inf)
    res = wls_solve(papay_design(x1, x2), yv, w)
    cov = 0.5 * (res.cov + res.cov.T)
    return PapayFit(res.coef, cov, (float(h1), float(h2)), res.n_eff, kernel, outcome)


def papay_contrast(boundary: str, location: float) -> np.ndarray:
    """Coefficient weights giving the plane jump across a boundary point.

    On B1 at ``(0, s)``: ``T1 + T1*T2 + (T1*x2 + T1*T2*x2) s``.
    On B2 at ``(s, 0)``: ``T2 + T1*T2 + (T2*x1 + T1*T2*x1) s``.
    """
    boundary = check_boundary(boundary)
    if location < 0:
        raise ValueError("boundary locations are non-negative")
    c = np.zeros(len(PAPAY_BASIS))
    ix = PAPAY_BASIS.index
    if boundary == "B1":
        c[ix("T1")] = c[ix("T1*T2")] = 1.0
        c[ix("T1*x2")] = c[ix("T1*T2*x2")] = location
    else:
        c[ix("T2")] = c[ix("T1*T2")] = 1.0
        c[ix("T2*x1")] = c[ix("T1*T2*x1")] = location
    return c


def papay_effect(fit: PapayFit, boundary: str, location: float) -> tuple:
    """``(tau, se)`` of the jump at a boundary location; affine in ``location``."""
    c = papay_contrast(boundary, location)
    tau = float(c @ fit.coefficients)
    se = math.sqrt(max(float(c @ fit.covariance @ c), 0.0))
    return tau, se


def papay_curve(ds: Dataset, boundary: str, h1: float, h2: float, kind: str = "sharp",
                kernel: str = "triangular", increment_pct: int = 1, grid: BoundaryGrid | None = None,
                extrapolate: bool = False) -> BoundaryCurve:
    """Evaluate the surface jump at each grid point.

    The surface is fitted on the ``h1 x h2`` window, so grid points farther
    along the boundary than the window reaches are skipped unless
    ``extrapolate`` is set.

    Standard errors are conventional contrast standard errors (no bias
    correction), flagged ``conventional_se``.  The fuzzy curve is the ratio
    of outcome and take-up surface jumps with a delta-method standard error
    built from the joint covariance of the two fits.
    """
    boundary = check_boundary(boundary)
    if kind not in ("sharp", "fuzzy"):
        raise ConfigError(f"kind must be 'sharp' or 'fuzzy', got {kind!r}")
    grid = grid or build_boundary_grid(ds, boundary, increment_pct)
    fit_y = papay_fit(ds, h1, h2, kernel)
    if kind == "fuzzy":
        sel = (np.abs(ds.x1) <= h1) & (np.abs(ds.x2) <= h2)
        x1, x2 = ds.x1[sel], ds.x2[sel]
        w = kernel_weight(x1 / h1, kernel) * kernel_weight(x2 / h2, kernel)
        X = papay_design(x1, x2)
        coef, Vfull = _joint_coef_cov(X, np.column_stack([ds.y[sel], ds.t[sel]]), w)
    disc, _ = boundary_coords(ds, boundary)
    h_disc = h1 if boundary == "B1" else h2
    n_left = int(np.sum((disc < 0) & (np.abs(ds.x1) <= h1) & (np.abs(ds.x2) <= h2)))
    n_right = int(np.sum((disc >= 0) & (np.abs(ds.x1) <= h1) & (np.abs(ds.x2) <= h2)))
    h_along = h2 if boundary == "B1" else h1
    points, ests, skipped = [], [], list(grid.skipped)
    for gp in grid.points:
        if not extrapolate and gp.location > h_along:
            skipped.append(SkippedPoint(gp.percentile, gp.location, "outside the fit window"))
            continue
        common = dict(h=float(h_disc), b=float(h_disc), n_left=n_left, n_right=n_right, kind=kind,
                      bandwidth_rule="manual", flags=("conventional_se",))
        if kind == "sharp":
            tau, se = papay_effect(fit_y, boundary, gp.location)
            est = RdEstimate.build(tau, se, tau, se, **common)
        else:
            c = papay_contrast(boundary, gp.location)
            itt, fs = float(c @ coef[:, 0]), float(c @ coef[:, 1])
            if abs(fs) < MIN_FIRST_STAGE:
                skipped.append(SkippedPoint(gp.percentile, gp.location, f"weak first stage {fs:.4g}"))
                continue
            V = np.array([[c @ Vfull[i][j] @ c for j in range(2)] for i in range(2)])
            se = _ratio_se(V, itt, fs)
            est = RdEstimate.build(itt / fs, se, itt / fs, se, first_stage=fs,
                                   first_stage_bias_corrected=fs, **common)
        points.append(gp)
        ests.append(est)
    skipped.sort(key=lambda s: s.percentile)
    return BoundaryCurve(grid, tuple(points), tuple(ests), tuple(skipped), method="papay", kind=kind,
                         meta={"h1": float(h1), "h2": float(h2), "kernel": kernel, "extrapolate": extrapolate,
                               "coefficients": fit_y.coefficients.tolist()})


def _joint_coef_cov(X, Y, w):
    """Coefficients (p x q) and cross-outcome HC1 blocks ``V[i][j]`` (p x p)."""
    pos = w > 0
    Xp, Yp, wp = X[pos], Y[pos], w[pos]
    n, p = Xp.shape
    fits = [wls_solve(Xp, Yp[:, j], wp) for j in range(Y.shape[1])]
    coef = np.column_stack([f.coef for f in fits])
    G = (Xp * wp[:, None]).T @ Xp
    Ginv = np.linalg.inv(G)
    hc1 = n / (n - p)
    scores = [(wp * f.residuals[pos])[:, None] * Xp for f in fits]
    V = [[hc1 * Ginv @ (scores[i].T @ scores[j]) @ Ginv for j in range(len(fits))] for i in range(len(fits))]
    return coef, V


# ---------------------------------------------------------------------------
# bivariate local linear with a fixed bandwidth matrix

ZAJONC_RULES = ("min", "mean", "manual")


@dataclass(frozen=True)
class ZajoncConfig:
    """Diagonal bandwidth ``H = (h1, h2)`` and how it was chosen.

    ``h1`` aggregates plug-in bandwidths in x1 along B1, ``h2`` those in x2
    along B2; ``per_point`` keeps the underlying grids.
    """

    H: tuple
    rule: str = "mean"
    grid_spacing: int = 20
    per_point: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in ZAJONC_RULES:
            raise ConfigError(f"zajonc rule must be one of {ZAJONC_RULES}")
        h1, h2 = (float(v) for v in self.H)
        if not (h1 > 0 and h2 > 0):
            raise ConfigError("bandwidth components must be positive")
        object.__setattr__(self, "H", (h1, h2))

    @classmethod
    def manual(cls, h1, h2) -> "ZajoncConfig":
        return cls((h1, h2), "manual", 0)


def zajonc_bandwidth(ds: Dataset, rule: str = "mean", grid_spacing: int = 20, fraction: float = 0.10,
                     kernel: str = "triangular") -> ZajoncConfig:
    """Aggregate per-point plug-in bandwidths into one diagonal bandwidth.

    On each boundary, ``grid_spacing`` points are spread evenly between the
    1st and 99th percentiles of the non-fixed coordinate; at each, the
    plug-in selector runs on the moving window in the discontinuity
    coordinate.  ``H`` is the minimum or mean of the successful selections.
    """
    require_normalized(ds)
    if rule not in ("min", "mean"):
        raise ConfigError("rule must be 'min' or 'mean'")
    if int(grid_spacing) < 5:
        raise ConfigError("grid_spacing must be at least 5")
    agg = np.min if rule == "min" else np.mean
    H, per_point = [], {}
    for boundary in ("B1", "B2"):
        margin, _ = _Margin.of(ds, boundary)
        if margin.along.size < MIN_GRID_OBS:
            raise InsufficientDataError(f"too few eligible observations on the {boundary} margin",
                                        count=int(margin.along.size))
        k = window_size(margin.along.size, fraction)
        lo, hi = np.percentile(margin.along, [1, 99])
        hs = []
        for loc in np.linspace(lo, hi, int(grid_spacing)):
            _, sl = margin.window(loc, k)
            try:
                hs.append(select_bandwidth(margin.disc[sl], margin.y[sl], 0.0, kernel).h)
            except EstimationError:
                continue
        if not hs:
            raise EstimationError(f"bandwidth selection failed at every {boundary} grid point")
        per_point[boundary] = tuple(hs)
        H.append(float(agg(hs)))
    return ZajoncConfig(tuple(H), rule, int(grid_spacing), per_point)


def _as_H(H):
    if isinstance(H, ZajoncConfig):
        return H.H
    h1, h2 = (float(v) for v in H)
    if not (h1 > 0 and h2 > 0):
        raise ConfigError("bandwidth components must be positive")
    return h1, h2


def zajonc_point(ds: Dataset, point, H, kind: str = "sharp", kernel: str = "triangular",
                 _subset=None) -> RdEstimate:
    """Bivariate local linear jump at a boundary point.

    Treated (eligible) and control observations are fitted separately on
    ``{1, x1 - p1, x2 - p2}`` with weights ``K((x1 - p1)/h1) K((x2 - p2)/h2)``;
    the effect is the intercept difference (sharp) or the ratio of outcome
    and take-up differences (fuzzy).  Inference is conventional HC1, so the
    bias-corrected fields repeat the conventional ones.
    """
    require_normalized(ds)
    h1, h2 = _as_H(H)
    p1, p2 = (float(v) for v in point)
    if not ((p1 == 0.0 and p2 >= 0.0) or (p2 == 0.0 and p1 >= 0.0)):
        raise ConfigError(f"point {point} is not on the treatment boundary")
    if kind not in ("sharp", "fuzzy"):
        raise ConfigError(f"kind must be 'sharp' or 'fuzzy', got {kind!r}")
    idx = _subset if _subset is not None else slice(None)
    x1 = ds.x1[idx] - p1
    x2 = ds.x2[idx] - p2
    box = (np.abs(x1) <= h1) & (np.abs(x2) <= h2)
    x1, x2 = x1[box], x2[box]
    z = ds.z[idx][box] if ds.z is not None else ((ds.x1[idx] >= 0) & (ds.x2[idx] >= 0))[box]
    w = kernel_weight(x1 / h1, kernel) * kernel_weight(x2 / h2, kernel)
    Y = ds.y[idx][box][:, None] if kind == "sharp" else np.column_stack([ds.y[idx][box], ds.t[idx][box]])
    X = np.column_stack([np.ones_like(x1), x1, x2])
    out, counts = [], []
    for label, side in (("control", z == 0), ("treated", z == 1)):
        sw = np.where(side, w, 0.0)
        if int(np.sum(sw > 0)) < 4:
            raise InsufficientDataError(f"{label} side has {int(np.sum(sw > 0))} weighted observations",
                                        side=label, count=int(np.sum(sw > 0)))
        out.append(wls_intercepts(X, Y, sw))
        counts.append(int(np.sum(sw > 0)))
    (c0, V0), (c1, V1) = out
    jump = c1[0] - c0[0]
    V = V0 + V1
    h_disc = h1 if p1 == 0.0 else h2
    common = dict(h=h_disc, b=h_disc, n_left=counts[0], n_right=counts[1], kind=kind,
                  bandwidth_rule="manual", flags=("conventional_se",))
    if kind == "sharp":
        se = math.sqrt(max(float(V[0, 0]), 0.0))
        return RdEstimate.build(jump[0], se, jump[0], se, **common)
    itt, fs = float(jump[0]), float(jump[1])
    if abs(fs) < MIN_FIRST_STAGE:
        raise WeakFirstStageError(f"first stage {fs:.4g} is below {MIN_FIRST_STAGE}", first_stage=fs)
    se = _ratio_se(V, itt, fs)
    return RdEstimate.build(itt / fs, se, itt / fs, se, first_stage=fs, first_stage_bias_corrected=fs, **common)


def zajonc_curve(ds: Dataset, boundary: str, config, kind: str = "sharp", kernel: str = "triangular",
                 increment_pct: int = 1, trim: str | None = "se", trim_factor: float = 5.0,
                 trim_top_pct: int = 9, grid: BoundaryGrid | None = None) -> BoundaryCurve:
    """Sweep ``zajonc_point`` over the percentile grid.

    ``trim='se'`` drops points whose standard error exceeds ``trim_factor``
    times the median; ``trim='top'`` drops the top ``trim_top_pct``
    percentiles; ``trim=None`` keeps every point that was estimated.
    """
    boundary = check_boundary(boundary)
    if trim not in (None, "se", "top"):
        raise ConfigError("trim must be None, 'se' or 'top'")
    h1, h2 = _as_H(config)
    grid = grid or build_boundary_grid(ds, boundary, increment_pct)
    _, along = boundary_coords(ds, boundary)
    order = np.argsort(along, kind="stable")
    sorted_along = along[order]
    h_along = h2 if boundary == "B1" else h1
    points, ests, skipped = [], [], list(grid.skipped)
    for gp in grid.points:
        lo = np.searchsorted(sorted_along, gp.location - h_along, side="left")
        hi = np.searchsorted(sorted_along, gp.location + h_along, side="right")
        try:
            est = zajonc_point(ds, boundary_point(boundary, gp.location), (h1, h2), kind, kernel,
                               _subset=np.sort(order[lo:hi]))
        except EstimationError as exc:
            skipped.append(SkippedPoint(gp.percentile, gp.location, f"{type(exc).__name__}: {exc}"))
            continue
        points.append(gp)
        ests.append(est)
    if trim and ests:
        keep = np.ones(len(ests), dtype=bool)
        if trim == "se":
            se = np.array([e.se_robust for e in ests])
            cut = trim_factor * float(np.median(se))
            keep = se <= cut
            reason = f"trimmed: se above {trim_factor:g}x median ({cut:.4g})"
        else:
            keep = np.array([gp.percentile <= 100 - trim_top_pct for gp in points])
            reason = f"trimmed: top {trim_top_pct} percentiles"
        skipped += [SkippedPoint(gp.percentile, gp.location, reason)
                    for gp, k in zip(points, keep) if not k]
        points = [gp for gp, k in zip(points, keep) if k]
        ests = [e for e, k in zip(ests, keep) if k]
    skipped.sort(key=lambda s: s.percentile)
    meta = {"H": [h1, h2], "kernel": kernel, "trim": trim}
    if isinstance(config, ZajoncConfig):
        meta["rule"] = config.rule
    return BoundaryCurve(grid, tuple(points), tuple(ests), tuple(skipped), method="zajonc", kind=kind, meta=meta)

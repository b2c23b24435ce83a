"""Local polynomial machinery shared by every estimator.

One-sided kernel-weighted polynomial fits, a plug-in MSE bandwidth
selector, and sharp/fuzzy discontinuity estimates with robust
bias-corrected inference.

The bias correction follows the usual local-polynomial construction: the
leading smoothing bias of each one-sided local linear intercept at
bandwidth ``h`` is ``B_h * m''/2``, where ``B_h`` is the finite-sample bias
factor of the fit and ``m''`` is estimated by a local quadratic fit at the
pilot bandwidth ``b``.  Both pieces are linear in the outcome, so the
bias-corrected intercept is a single linear smoother and its sandwich
variance accounts for the correlation between point estimate and bias
estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _backend
from .data import RdEstimate
from .errors import InsufficientDataError, SingularFitError, WeakFirstStageError

MAX_CONDITION = 1e13
MIN_FIRST_STAGE = 0.01
DEFAULT_PILOT_RATIO = 1.5


class KernelKind(str, Enum):
    TRIANGULAR = "triangular"
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"


_KCODE = {KernelKind.TRIANGULAR: 0, KernelKind.UNIFORM: 1, KernelKind.EPANECHNIKOV: 2}


def kernel_code(kind) -> int:
    try:
        return _KCODE[KernelKind(kind)]
    except ValueError:
        raise ValueError(f"unknown kernel {kind!r}; choose from {[k.value for k in KernelKind]}")


def kernel_weight(u, kind="triangular"):
    """Kernel value K(u); zero outside ``|u| <= 1``.

    triangular ``1 - |u|``, uniform ``1/2``, epanechnikov ``3/4 (1 - u^2)``.
    """
    w = _backend.kernels().kernel_weights(np.asarray(u, dtype=float), kernel_code(kind))
    return float(w) if np.ndim(w) == 0 else w


@lru_cache(maxsize=None)
def kernel_constants(kind="triangular") -> dict:
    """Boundary constants of the one-sided local linear estimator.

    ``bias``: intercept bias is ``bias * h^2 * m''/2`` to leading order;
    ``variance``: intercept variance is ``variance * sigma^2 / (n f h)``;
    ``C``: ``(variance / bias^2)^(1/5)``, the MSE-optimal bandwidth constant
    (3.4375 for the triangular kernel).
    """
    nodes, wts = np.polynomial.legendre.leggauss(20)
    u = 0.5 * (nodes + 1.0)
    wts = 0.5 * wts
    k = kernel_weight(u, kind)
    mu = [float(np.sum(wts * u**j * k)) for j in range(4)]
    nu = [float(np.sum(wts * u**j * k**2)) for j in range(3)]
    det = mu[0] * mu[2] - mu[1] ** 2
    bias = (mu[2] ** 2 - mu[1] * mu[3]) / det
    row = np.array([mu[2], -mu[1]]) / det
    lam = np.array([[nu[0], nu[1]], [nu[1], nu[2]]])
    variance = float(row @ lam @ row)
    return {"bias": bias, "variance": variance, "C": (variance / bias**2) ** 0.2}


def _side_code(side) -> int:
    if side in ("right", "+", 1):
        return 1
    if side in ("left", "-", -1):
        return -1
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _checked_inverse(G, what="weighted design"):
    try:
        cond = float(np.linalg.cond(G))
    except np.linalg.LinAlgError:
        cond = math.inf
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularFitError(f"{what} is rank deficient (condition number {cond:.3g})", condition=cond)
    return np.linalg.inv(G)


def _hankel(S, p):
    idx = np.add.outer(np.arange(p), np.arange(p))
    return S[idx]


def _as_1d(a, name):
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


# ---------------------------------------------------------------------------
# weighted least squares


@dataclass(frozen=True)
class WlsResult:
    coef: np.ndarray
    cov: np.ndarray
    condition: float
    n_eff: int
    residuals: np.ndarray


def wls_solve(design, y, w=None) -> WlsResult:
    """Weighted least squares through the normal equations.

    Columns are rescaled to unit weighted RMS before solving.  ``cov`` is
    the HC1 sandwich ``n/(n-p) (X'WX)^-1 X'W diag(e^2) W X (X'WX)^-1`` with
    ``n`` the number of rows carrying positive weight.

    Raises
    ------
    SingularFitError
        If the weighted design is rank deficient; ``condition`` carries the
        condition number of the rescaled cross-product matrix.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    if y.shape[0] != n or w.shape[0] != n:
        raise ValueError("design, y and w must have the same number of rows")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    pos = w > 0
    n_eff = int(pos.sum())
    if n_eff < p:
        raise SingularFitError(f"{n_eff} positive-weight rows for {p} coefficients", condition=math.inf)
    Xp, yp, wp = X[pos], y[pos], w[pos]
    scale = np.sqrt((wp @ Xp**2) / wp.sum())
    if np.any(scale == 0):
        raise SingularFitError("a design column is zero on the weighted support", condition=math.inf)
    Xs = Xp / scale
    G = (Xs * wp[:, None]).T @ Xs
    Ginv = _checked_inverse(G)
    cond = float(np.linalg.cond(G))
    coef_s = np.linalg.solve(G, (Xs * wp[:, None]).T @ yp)
    e = yp - Xs @ coef_s
    we = (wp * e)[:, None] * Xs
    meat = we.T @ we
    hc1 = n_eff / (n_eff - p) if n_eff > p else math.nan
    cov_s = hc1 * Ginv @ meat @ Ginv
    resid = np.zeros(n)
    resid[pos] = e
    return WlsResult(
        coef=coef_s / scale,
        cov=cov_s / np.outer(scale, scale),
        condition=cond,
        n_eff=n_eff,
        residuals=resid,
    )


def wls_intercepts(design, Y, w=None):
    """Fit several outcomes on one weighted design.

    Returns ``(coef, V)``: ``coef`` is ``p x q`` and ``V`` the ``q x q`` HC1
    sandwich covariance of the first coefficient across outcomes, which is
    what a ratio of intercepts needs.  For a single outcome ``V`` equals
    ``wls_solve(...).cov[0, 0]``.
    """
    X = np.asarray(design, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    pos = w > 0
    n_eff = int(pos.sum())
    if n_eff < p:
        raise SingularFitError(f"{n_eff} positive-weight rows for {p} coefficients", condition=math.inf)
    Xp, Yp, wp = X[pos], Y[pos], w[pos]
    scale = np.sqrt((wp @ Xp**2) / wp.sum())
    if np.any(scale == 0):
        raise SingularFitError("a design column is zero on the weighted support", condition=math.inf)
    Xs = Xp / scale
    G = (Xs * wp[:, None]).T @ Xs
    Ginv = _checked_inverse(G)
    coef_s = Ginv @ ((Xs * wp[:, None]).T @ Yp)
    E = Yp - Xs @ coef_s
    ell = (Xs @ Ginv[0]) * wp / scale[0]
    hc1 = n_eff / (n_eff - p) if n_eff > p else math.nan
    LE = ell[:, None] * E
    return coef_s / scale[:, None], hc1 * (LE.T @ LE)


# ---------------------------------------------------------------------------
# one-sided local polynomial fits


@dataclass(frozen=True)
class LocalFit:
    """One-sided local polynomial fit evaluated at ``center``.

    ``curvature`` is the second-derivative estimate (``nan`` for order 1).
    """

    intercept: float
    slope: float
    curvature: float
    se_intercept: float
    n_eff: int
    side: str
    order: int
    h: float
    cov: np.ndarray


def _poly_fit(x, Y, center, h, side, kcode, order):
    """Coefficients (in powers of ``(x - center)/scale``) and HC1 covariances."""
    K = _backend.kernels()
    scale = h if math.isfinite(h) else max(float(np.max(np.abs(x - center))), 1e-300)
    S, T, n_eff = K.poly_moments(x, Y, center, scale, h, side, kcode, order)
    p = order + 1
    if n_eff < p + 1:
        raise InsufficientDataError(
            f"{n_eff} observations with positive weight on the "
            f"{'right' if side > 0 else 'left'} side; need at least {p + 1}",
            side="right" if side > 0 else "left",
            count=n_eff,
        )
    G = _hankel(S, p)
    Ginv = _checked_inverse(G, "local polynomial design")
    coef = Ginv @ T
    M = K.poly_meat(x, Y, center, scale, h, side, kcode, np.ascontiguousarray(coef))
    hc1 = n_eff / (n_eff - p)
    q = Y.shape[1]
    covs = []
    for k in range(q):
        meat = _hankel(M[:, k, k], p)
        covs.append(hc1 * Ginv @ meat @ Ginv)
    return coef, covs, scale, n_eff


def local_linear_side(x, y, center=0.0, h=1.0, side="right", kind="triangular", order=1) -> LocalFit:
    """Kernel-weighted polynomial fit using one side of ``center``.

    The right side uses ``x >= center``, the left side ``x < center``.
    With the uniform kernel this is ordinary least squares on the
    observations within ``h`` of ``center``.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = _as_1d(x, "x")
    Y = _as_1d(y, "y")[:, None]
    s = _side_code(side)
    coef, covs, scale, n_eff = _poly_fit(x, Y, float(center), float(h), s, kernel_code(kind), order)
    c = coef[:, 0]
    scal = scale ** np.arange(order + 1)
    cov = covs[0] / np.outer(scal, scal)
    return LocalFit(
        intercept=float(c[0]),
        slope=float(c[1] / scale),
        curvature=float(2.0 * c[2] / scale**2) if order == 2 else math.nan,
        se_intercept=float(math.sqrt(max(cov[0, 0], 0.0))),
        n_eff=int(n_eff),
        side="right" if s > 0 else "left",
        order=order,
        h=float(h),
        cov=cov,
    )


# ---------------------------------------------------------------------------
# bandwidth selection


@dataclass(frozen=True)
class BandwidthPair:
    h: float
    b: float
    rule: str = "manual"
    flags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "b", float(self.b))
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"bandwidth h must be positive and finite, got {self.h}")
        if not self.b >= self.h:
            raise ValueError(f"pilot bandwidth b={self.b} must be at least h={self.h}")

    @classmethod
    def manual(cls, h, b=None, pilot_ratio=DEFAULT_PILOT_RATIO):
        h = float(h)
        return cls(h=h, b=float(b) if b is not None else pilot_ratio * h, rule="manual")


MIN_SIDE_FOR_SELECTION = 20
# pilot width constant for second-derivative estimation (local quadratic, uniform kernel)
PILOT_CONSTANT = 3.56


def rule_of_thumb(x) -> float:
    x = np.asarray(x, dtype=float)
    return 1.84 * float(np.std(x, ddof=1)) * x.shape[0] ** -0.2


def select_bandwidth(x, y, center=0.0, kind="triangular", pilot_ratio=DEFAULT_PILOT_RATIO) -> BandwidthPair:
    """Plug-in MSE-optimal bandwidth for a sharp discontinuity at ``center``.

    ``h = C_K [ (s2_left + s2_right) / (f(c) n (D^2 + r)) ]^(1/5)``, computed
    in standardized units.  The residual variances ``s2`` come from global
    quartic fits on each side.  The second derivatives (``D`` is their jump)
    come from one-sided local quadratic fits with pilot width
    ``3.56 (s2 / (f n_side m3^2))^(1/7)``, where ``m3`` is the third derivative
    of a global cubic with a level shift; ``r`` is the sampling variance of
    ``D`` and regularizes a vanishing curvature jump.  ``f(c)`` is a
    uniform-kernel density estimate at the cutoff with a rule-of-thumb
    width.  The pilot bandwidth is ``b = pilot_ratio * h``.

    Falls back to ``h = 1.84 sd(x) n^(-1/5)`` (rule ``rule_of_thumb``) when the
    residual variance or the curvature term is numerically zero; ``h`` is
    capped at the smaller one-sided data range (flag ``capped``).
    """
    x = _as_1d(x, "x")
    y = _as_1d(y, "y")
    center = float(center)
    n = x.shape[0]
    right = x >= center
    n_r = int(right.sum())
    n_l = n - n_r
    if min(n_l, n_r) < MIN_SIDE_FOR_SELECTION:
        raise InsufficientDataError(
            f"bandwidth selection needs {MIN_SIDE_FOR_SELECTION} observations per side "
            f"(left {n_l}, right {n_r})",
            side="left" if n_l < n_r else "right",
            count=min(n_l, n_r),
        )
    sx = float(np.std(x, ddof=1))
    if not sx > 0:
        raise InsufficientDataError("running variable has no spread")
    kc = kernel_constants(kind)
    flags = []
    h_rot = 1.84 * sx * n**-0.2

    h = _plugin(x, y, center, n, sx, h_rot, kc)
    rule = "mse_plugin"
    if h is None:
        h, rule = h_rot, "rule_of_thumb"
        flags.append("rule_of_thumb_fallback")
    reach = min(float(np.max(x)) - center, center - float(np.min(x)))
    if reach > 0 and h > reach:
        h = reach
        flags.append("capped")
    return BandwidthPair(h=h, b=pilot_ratio * h, rule=rule, flags=tuple(flags))


def _plugin(x, y, center, n, sx, h_rot, kc):
    near = int(np.count_nonzero(np.abs(x - center) <= h_rot))
    if near == 0:
        return None
    f_std = near / (2.0 * n * h_rot) * sx  # density in standardized units
    xs = (x - center) / sx
    Y = y[:, None]
    vy = float(np.var(y))
    right = xs >= 0
    sig2 = {}
    for s, mask in ((-1, ~right), (1, right)):
        coef, _, scale, n_eff = _poly_fit(xs, Y, 0.0, math.inf, s, -1, 4)
        fit = np.polynomial.polynomial.polyval(xs[mask] / scale, coef[:, 0])
        sig2[s] = float(np.sum((y[mask] - fit) ** 2)) / max(n_eff - 5, 1)
    if not (vy > 0 and sig2[-1] + sig2[1] > 1e-12 * vy):
        return None

    # third derivative from a global cubic with a level shift at the cutoff
    X = np.column_stack([np.ones(n), right, xs, xs**2, xs**3])
    try:
        m3 = 6.0 * wls_solve(X, y).coef[4]
    except SingularFitError:
        return None
    curv, curv_var = [], 0.0
    for s, mask in ((-1, ~right), (1, right)):
        reach = float(np.max(np.abs(xs[mask])))
        if m3 != 0.0:
            h2 = PILOT_CONSTANT * (sig2[s] / (f_std * m3**2 * int(mask.sum()))) ** (1.0 / 7.0)
            h2 = min(h2, reach)
        else:
            h2 = reach
        try:
            coef, covs, scale, _ = _poly_fit(xs, Y, 0.0, h2, s, 1, 2)
        except (InsufficientDataError, SingularFitError):
            return None
        curv.append(2.0 * coef[2, 0] / scale**2)
        curv_var += 4.0 * covs[0][2, 2] / scale**4
    sig2_sum = sig2[-1] + sig2[1]
    denom = (curv[1] - curv[0]) ** 2 + curv_var
    if not denom > 1e-12 * sig2_sum:
        return None
    h_std = kc["C"] * (sig2_sum / (f_std * denom * n)) ** 0.2
    if not (math.isfinite(h_std) and h_std > 0):
        return None
    return h_std * sx


# ---------------------------------------------------------------------------
# discontinuity estimates


def _rbc_side(x, Y, center, h, b, side, kcode):
    K = _backend.kernels()
    Sh, Th, Sb, Tb, nh, nb = K.rbc_moments(x, Y, center, h, b, side, kcode)
    label = "right" if side > 0 else "left"
    if nh < 3:
        raise InsufficientDataError(
            f"{nh} observations within h on the {label} side; need at least 3", side=label, count=nh
        )
    if nb < 4:
        raise InsufficientDataError(
            f"{nb} observations within b on the {label} side; need at least 4", side=label, count=nb
        )
    Ghinv = _checked_inverse(_hankel(Sh, 2), f"{label} local linear design")
    Gbinv = _checked_inverse(_hankel(Sb, 3), f"{label} local quadratic design")
    beta_h = Ghinv @ Th
    beta_b = Gbinv @ Tb
    gh = np.ascontiguousarray(Ghinv[0])
    cb = np.ascontiguousarray(Gbinv[2])
    bias_factor = float(gh @ Sh[2:4])
    Vc, Vr, Vb = K.rbc_meat(
        x, Y, center, h, b, side, kcode,
        np.ascontiguousarray(beta_h), np.ascontiguousarray(beta_b), gh, cb, bias_factor,
    )
    Vc = Vc * (nh / (nh - 2))
    Vr = Vr * (nb / (nb - 3))
    Vb = Vb * (nb / (nb - 3))
    return {
        "intercept": beta_h[0],
        "intercept_bc": beta_h[0] - bias_factor * beta_b[2],
        "V_conv": Vc,
        "V_rbc": Vr,
        "V_indep": Vc + bias_factor**2 * Vb,
        "curvature": 2.0 * beta_b[2] / b**2,
        "n_h": nh,
        "n_b": nb,
    }


ROBUST_VARIANCE = ("joint", "independent")


def _sides(x, Y, center, bw, kind):
    if not isinstance(bw, BandwidthPair):
        bw = BandwidthPair.manual(bw)
    x = _as_1d(x, "x")
    kc = kernel_code(kind)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    out = []
    for s in (-1, 1):
        out.append(_rbc_side(x, Y, float(center), bw.h, bw.b, s, kc))
    return bw, out[0], out[1]


def _var_key(robust_variance):
    if robust_variance not in ROBUST_VARIANCE:
        raise ValueError(f"robust_variance must be one of {ROBUST_VARIANCE}")
    return "V_rbc" if robust_variance == "joint" else "V_indep"


def sharp_discontinuity(x, y, center=0.0, bw=None, kind="triangular", robust_variance="joint") -> RdEstimate:
    """Jump in the conditional mean of ``y`` at ``center``.

    ``tau_conventional`` is the difference of local linear intercepts at
    ``h``; ``tau_bias_corrected`` subtracts the estimated smoothing bias from
    local quadratic fits at ``b``.  ``robust_variance='independent'`` instead
    adds the bias-term variance as if independent of the point estimate
    (conservative).
    """
    if bw is None:
        bw = select_bandwidth(x, y, center, kind)
    Y = _as_1d(y, "y")[:, None]
    bw, L, R = _sides(x, Y, center, bw, kind)
    vk = _var_key(robust_variance)
    tau = float(R["intercept"][0] - L["intercept"][0])
    tau_bc = float(R["intercept_bc"][0] - L["intercept_bc"][0])
    se = math.sqrt(R["V_conv"][0, 0] + L["V_conv"][0, 0])
    se_r = math.sqrt(R[vk][0, 0] + L[vk][0, 0])
    return RdEstimate.build(
        tau, se, tau_bc, se_r,
        h=bw.h, b=bw.b, n_left=L["n_h"], n_right=R["n_h"], kind="sharp",
        bandwidth_rule=bw.rule, flags=tuple(bw.flags),
    )


def _ratio_se(V, itt, fs):
    tau = itt / fs
    var = (V[0, 0] - 2.0 * tau * V[0, 1] + tau**2 * V[1, 1]) / fs**2
    return math.sqrt(max(var, 0.0))


def fuzzy_discontinuity(x, y, t, center=0.0, bw=None, kind="triangular", robust_variance="joint") -> RdEstimate:
    """Ratio of the outcome jump to the take-up jump at ``center``.

    Standard errors use the delta method with the joint sandwich covariance
    of numerator and denominator.  The bandwidth, when not given, is
    selected for the outcome.

    Raises
    ------
    WeakFirstStageError
        If the conventional take-up jump is below 0.01 in absolute value.
    """
    if bw is None:
        bw = select_bandwidth(x, y, center, kind)
    Y = np.column_stack([_as_1d(y, "y"), _as_1d(t, "t")])
    bw, L, R = _sides(x, Y, center, bw, kind)
    vk = _var_key(robust_variance)
    jump = R["intercept"] - L["intercept"]
    jump_bc = R["intercept_bc"] - L["intercept_bc"]
    itt, fs = float(jump[0]), float(jump[1])
    itt_bc, fs_bc = float(jump_bc[0]), float(jump_bc[1])
    if not abs(fs) >= MIN_FIRST_STAGE:
        raise WeakFirstStageError(f"first stage {fs:.4g} is below {MIN_FIRST_STAGE}", first_stage=fs)
    if not abs(fs_bc) >= MIN_FIRST_STAGE:
        raise WeakFirstStageError(f"bias-corrected first stage {fs_bc:.4g} is below {MIN_FIRST_STAGE}", first_stage=fs_bc)
    Vc = R["V_conv"] + L["V_conv"]
    Vr = R[vk] + L[vk]
    return RdEstimate.build(
        itt / fs, _ratio_se(Vc, itt, fs), itt_bc / fs_bc, _ratio_se(Vr, itt_bc, fs_bc),
        h=bw.h, b=bw.b, n_left=L["n_h"], n_right=R["n_h"], kind="fuzzy",
        first_stage=fs, first_stage_bias_corrected=fs_bc,
        bandwidth_rule=bw.rule, flags=tuple(bw.flags),
    )


def resolve_bandwidth(x, y, center=0.0, kernel="triangular", bandwidth=None, pilot_ratio=DEFAULT_PILOT_RATIO):
    """``None`` selects by plug-in; a number is a manual ``h``; a pair passes through."""
    if bandwidth is None:
        return select_bandwidth(x, y, center, kernel, pilot_ratio=pilot_ratio)
    if isinstance(bandwidth, BandwidthPair):
        return bandwidth
    return BandwidthPair.manual(bandwidth, pilot_ratio=pilot_ratio)


def discontinuity(x, y, t=None, center=0.0, kind="sharp", kernel="triangular", bandwidth=None,
                  pilot_ratio=DEFAULT_PILOT_RATIO, robust_variance="joint") -> RdEstimate:
    """Sharp or fuzzy estimate with bandwidth resolution in one call."""
    bw = resolve_bandwidth(x, y, center, kernel, bandwidth, pilot_ratio)
    if kind == "sharp":
        return sharp_discontinuity(x, y, center, bw, kernel, robust_variance)
    if kind == "fuzzy":
        if t is None:
            raise ValueError("fuzzy estimation needs take-up t")
        return fuzzy_discontinuity(x, y, t, center, bw, kernel, robust_variance)
    raise ValueError(f"kind must be 'sharp' or 'fuzzy', got {kind!r}")

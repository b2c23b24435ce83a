"""Pure numpy implementation of the numeric kernels.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or ``BRDD_BACKEND=python`` is set.

Kernel codes: -1 no kernel (unit weights), 0 triangular, 1 uniform,
2 epanechnikov.  ``side`` is +1 for ``x >= center``, -1 for ``x < center``
and 0 for both.  Powers of the running variable are taken on
``(x - center) / scale`` to keep the moment matrices well conditioned.
"""

import numpy as np

BACKEND = "python"


def kernel_weights(u, kind):
    u = np.asarray(u, dtype=float)
    if kind == -1:
        return np.ones_like(u)
    a = np.abs(u)
    if kind == 0:
        w = 1.0 - a
    elif kind == 1:
        w = np.full_like(u, 0.5)
    elif kind == 2:
        w = 0.75 * (1.0 - u * u)
    else:
        raise ValueError(f"unknown kernel code {kind}")
    return np.where(a <= 1.0, w, 0.0)


def _select(x, Y, center, radius, side, kind):
    if side > 0:
        sel = x >= center
    elif side < 0:
        sel = x < center
    else:
        sel = np.ones(x.shape, dtype=bool)
    if kind != -1:
        sel &= np.abs(x - center) <= radius
    idx = np.flatnonzero(sel)
    return x[idx] - center, Y[idx]


def poly_moments(x, Y, center, scale, h, side, kind, order):
    d, Ys = _select(x, Y, center, h, side, kind)
    w = kernel_weights(d / h, kind)
    nz = w > 0
    d, w, Ys = d[nz], w[nz], Ys[nz]
    P = np.vander(d / scale, 2 * order + 1, increasing=True)
    S = w @ P
    T = (P[:, : order + 1] * w[:, None]).T @ Ys
    return S, T, int(nz.sum())


def poly_meat(x, Y, center, scale, h, side, kind, coef):
    order = coef.shape[0] - 1
    d, Ys = _select(x, Y, center, h, side, kind)
    w = kernel_weights(d / h, kind)
    nz = w > 0
    d, w, Ys = d[nz], w[nz], Ys[nz]
    P = np.vander(d / scale, 2 * order + 1, increasing=True)
    e = Ys - P[:, : order + 1] @ coef
    we = e * w[:, None]
    # M[j] = sum_i w_i^2 u_i^j e_i e_i'
    return np.einsum("ij,ik,il->jkl", P, we, we)


def rbc_moments(x, Y, center, h, b, side, kind):
    d, Ys = _select(x, Y, center, b, side, kind)
    u = d / b
    wh = kernel_weights(d / h, kind)
    wb = kernel_weights(u, kind)
    P = np.vander(u, 5, increasing=True)
    Sh = wh @ P[:, :4]
    Th = (P[:, :2] * wh[:, None]).T @ Ys
    Sb = wb @ P
    Tb = (P[:, :3] * wb[:, None]).T @ Ys
    return Sh, Th, Sb, Tb, int((wh > 0).sum()), int((wb > 0).sum())


def rbc_meat(x, Y, center, h, b, side, kind, beta_h, beta_b, gh, cb, bias_factor):
    d, Ys = _select(x, Y, center, b, side, kind)
    u = d / b
    wh = kernel_weights(d / h, kind)
    wb = kernel_weights(u, kind)
    lh = (gh[0] + gh[1] * u) * wh
    lb = (cb[0] + cb[1] * u + cb[2] * u * u) * wb
    lr = lh - bias_factor * lb
    eh = Ys - beta_h[0] - np.outer(u, beta_h[1])
    eb = Ys - beta_b[0] - np.outer(u, beta_b[1]) - np.outer(u * u, beta_b[2])
    v_conv = (eh * (lh * lh)[:, None]).T @ eh
    v_rbc = (eb * (lr * lr)[:, None]).T @ eb
    v_curv = (eb * (lb * lb)[:, None]).T @ eb
    return v_conv, v_rbc, v_curv


def nearest_window(a, loc, k):
    """Start index of the ``k`` values of sorted ``a`` nearest to ``loc``.

    Ties go to the smaller values; the window is contiguous.
    """
    lo, hi = 0, a.shape[0] - k
    while lo < hi:
        mid = (lo + hi) // 2
        if loc - a[mid] > a[mid + k] - loc:
            lo = mid + 1
        else:
            hi = mid
    return lo

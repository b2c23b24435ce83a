"""Independent reference implementations used as test oracles.

Each one is written directly from the definition, without touching the
package's numeric code paths: ``numpy.linalg.lstsq`` for least squares,
explicit normal equations for weighted fits, and full sorts for quantiles.
"""

import math

import numpy as np


def ols(X, y):
    """Plain least squares via SVD-based lstsq."""
    coef, *_ = np.linalg.lstsq(np.asarray(X, float), np.asarray(y, float), rcond=None)
    return coef


def wls_normal_equations(X, y, w):
    """Weighted least squares by solving (X'WX) b = X'Wy densely, with HC1 covariance."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    n, p = X.shape
    XtW = X.T * w
    A = XtW @ X
    coef = np.linalg.solve(A, XtW @ y)
    e = y - X @ coef
    Ainv = np.linalg.inv(A)
    meat = (X * (w * e)[:, None]).T @ (X * (w * e)[:, None])
    cov = n / (n - p) * Ainv @ meat @ Ainv
    return coef, cov


def windowed_intercept(x, y, center, h, side):
    """Intercept of OLS of y on (x - center) among one-sided points within h."""
    x = np.asarray(x, float)
    sel = (x >= center) if side == "right" else (x < center)
    sel &= np.abs(x - center) <= h
    X = np.column_stack([np.ones(sel.sum()), x[sel] - center])
    return ols(X, np.asarray(y, float)[sel])[0]


def percentile_by_sort(values, pct):
    """Inverted-CDF percentile: the ceil(pct/100 * m)-th smallest value."""
    v = np.sort(np.asarray(values, float))
    k = max(int(math.ceil(pct / 100.0 * v.size - 1e-12)), 1)
    return v[k - 1]


def nearest_k_brute(a, loc, k):
    """Start index (in sorted ``a``) of the k values nearest loc, ties to smaller values.

    Ranks every value by (distance, value) and takes the first k.
    """
    a = np.asarray(a, float)
    order = np.lexsort((a, np.abs(a - loc)))
    return int(order[:k].min())


def papay_design_by_names(x1, x2):
    """The 16-term interaction basis built column by column from its names."""
    t1 = (np.asarray(x1) >= 0).astype(float)
    t2 = (np.asarray(x2) >= 0).astype(float)
    cols = []
    for ind in (np.ones_like(t1), t1, t2, t1 * t2):
        cols += [ind, ind * x1, ind * x2, ind * x1 * x2]
    return np.column_stack(cols)

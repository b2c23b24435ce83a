# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: single-pass moment and sandwich accumulation.

Same signatures and semantics as ``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND = "cython"

cdef enum:
    MAXP = 9


cdef inline double _kw(double u, int kind) noexcept nogil:
    cdef double a
    if kind == -1:
        return 1.0
    a = fabs(u)
    if a > 1.0:
        return 0.0
    if kind == 0:
        return 1.0 - a
    if kind == 1:
        return 0.5
    return 0.75 * (1.0 - u * u)


cdef inline bint _on_side(double x, double center, int side) noexcept nogil:
    if side > 0:
        return x >= center
    if side < 0:
        return x < center
    return True


def kernel_weights(u, int kind):
    if kind < -1 or kind > 2:
        raise ValueError(f"unknown kernel code {kind}")
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    out = np.empty(uu.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(uu.shape[0]):
        o[i] = _kw(uu[i], kind)
    return out.reshape(np.shape(u))


def poly_moments(const double[::1] x, const double[:, ::1] Y, double center, double scale,
                 double h, int side, int kind, int order):
    cdef Py_ssize_t n = x.shape[0], q = Y.shape[1], i, j, k
    cdef int nm = 2 * order + 1, np1 = order + 1
    if nm > MAXP:
        raise ValueError("polynomial order too large")
    S = np.zeros(nm, dtype=np.float64)
    T = np.zeros((np1, q), dtype=np.float64)
    cdef double[::1] s = S
    cdef double[:, ::1] t = T
    cdef double d, w, u, pw
    cdef double powers[MAXP]
    cdef Py_ssize_t cnt = 0
    with nogil:
        for i in range(n):
            if not _on_side(x[i], center, side):
                continue
            d = x[i] - center
            if kind != -1 and fabs(d) > h:
                continue
            w = _kw(d / h, kind)
            if w <= 0.0:
                continue
            cnt += 1
            u = d / scale
            pw = w
            for j in range(nm):
                powers[j] = pw
                s[j] += pw
                pw *= u
            for j in range(np1):
                for k in range(q):
                    t[j, k] += powers[j] * Y[i, k]
    return S, T, cnt


def poly_meat(const double[::1] x, const double[:, ::1] Y, double center, double scale,
              double h, int side, int kind, const double[:, ::1] coef):
    cdef Py_ssize_t n = x.shape[0], q = Y.shape[1], i, j, k, l
    cdef int np1 = coef.shape[0]
    cdef int nm = 2 * np1 - 1
    if nm > MAXP or q > 4:
        raise ValueError("polynomial order or outcome count too large")
    M = np.zeros((nm, q, q), dtype=np.float64)
    cdef double[:, :, ::1] m = M
    cdef double d, w, u, pw, fit
    cdef double e[4]
    with nogil:
        for i in range(n):
            if not _on_side(x[i], center, side):
                continue
            d = x[i] - center
            if kind != -1 and fabs(d) > h:
                continue
            w = _kw(d / h, kind)
            if w <= 0.0:
                continue
            u = d / scale
            for k in range(q):
                fit = 0.0
                pw = 1.0
                for j in range(np1):
                    fit += coef[j, k] * pw
                    pw *= u
                e[k] = (Y[i, k] - fit) * w
            pw = 1.0
            for j in range(nm):
                for k in range(q):
                    for l in range(q):
                        m[j, k, l] += pw * e[k] * e[l]
                pw *= u
    return M


def rbc_moments(const double[::1] x, const double[:, ::1] Y, double center, double h,
                double b, int side, int kind):
    cdef Py_ssize_t n = x.shape[0], q = Y.shape[1], i, j, k
    Sh = np.zeros(4, dtype=np.float64)
    Th = np.zeros((2, q), dtype=np.float64)
    Sb = np.zeros(5, dtype=np.float64)
    Tb = np.zeros((3, q), dtype=np.float64)
    cdef double[::1] sh = Sh, sb = Sb
    cdef double[:, ::1] th = Th, tb = Tb
    cdef double d, u, wh, wb, yk
    cdef Py_ssize_t nh = 0, nb = 0
    with nogil:
        for i in range(n):
            if not _on_side(x[i], center, side):
                continue
            d = x[i] - center
            if fabs(d) > b:
                continue
            u = d / b
            wb = _kw(u, kind)
            wh = _kw(d / h, kind)
            if wb > 0.0:
                nb += 1
                sb[0] += wb
                sb[1] += wb * u
                sb[2] += wb * u * u
                sb[3] += wb * u * u * u
                sb[4] += wb * u * u * u * u
                for k in range(q):
                    yk = Y[i, k]
                    tb[0, k] += wb * yk
                    tb[1, k] += wb * u * yk
                    tb[2, k] += wb * u * u * yk
            if wh > 0.0:
                nh += 1
                sh[0] += wh
                sh[1] += wh * u
                sh[2] += wh * u * u
                sh[3] += wh * u * u * u
                for k in range(q):
                    yk = Y[i, k]
                    th[0, k] += wh * yk
                    th[1, k] += wh * u * yk
    return Sh, Th, Sb, Tb, nh, nb


def rbc_meat(const double[::1] x, const double[:, ::1] Y, double center, double h, double b,
             int side, int kind, const double[:, ::1] beta_h, const double[:, ::1] beta_b,
             const double[::1] gh, const double[::1] cb, double bias_factor):
    cdef Py_ssize_t n = x.shape[0], q = Y.shape[1], i, k, l
    if q > 4:
        raise ValueError("at most 4 outcome columns")
    Vc = np.zeros((q, q), dtype=np.float64)
    Vr = np.zeros((q, q), dtype=np.float64)
    Vb = np.zeros((q, q), dtype=np.float64)
    cdef double[:, ::1] vc = Vc, vr = Vr, vb = Vb
    cdef double d, u, wh, wb, lh, lb, lr
    cdef double eh[4]
    cdef double eb[4]
    with nogil:
        for i in range(n):
            if not _on_side(x[i], center, side):
                continue
            d = x[i] - center
            if fabs(d) > b:
                continue
            u = d / b
            wb = _kw(u, kind)
            wh = _kw(d / h, kind)
            lh = (gh[0] + gh[1] * u) * wh
            lb = (cb[0] + cb[1] * u + cb[2] * u * u) * wb
            lr = lh - bias_factor * lb
            for k in range(q):
                eh[k] = Y[i, k] - beta_h[0, k] - beta_h[1, k] * u
                eb[k] = Y[i, k] - beta_b[0, k] - beta_b[1, k] * u - beta_b[2, k] * u * u
            for k in range(q):
                for l in range(q):
                    vc[k, l] += lh * lh * eh[k] * eh[l]
                    vr[k, l] += lr * lr * eb[k] * eb[l]
                    vb[k, l] += lb * lb * eb[k] * eb[l]
    return Vc, Vr, Vb


def nearest_window(const double[::1] a, double loc, Py_ssize_t k):
    cdef Py_ssize_t lo = 0, hi = a.shape[0] - k, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if loc - a[mid] > a[mid + k] - loc:
            lo = mid + 1
        else:
            hi = mid
    return lo

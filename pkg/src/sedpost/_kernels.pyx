# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled curve kernels; mirrors sedpost._kernels_py bit-for-bit.

Every loop keeps the exact operation order of the pure-Python reference
(sequential IEEE double arithmetic, same comparison conventions), so the
two backends are interchangeable and the parity tests can assert exact
equality.
"""

import numpy as np

cimport cython

BACKEND = "cython"


def moving_average(curve, int window):
    """Centered moving average with window truncation at the edges.

    Each output is clamped into the window's [min, max]; see the pure
    reference for the rationale.
    """
    x = np.ascontiguousarray(curve, dtype=np.float64)
    cdef double[::1] xv = x
    cdef Py_ssize_t n = xv.shape[0]
    if window == 1:
        return x.copy()
    cdef int h = (window - 1) // 2
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j, lo, hi
    cdef double s, v, m, wmin, wmax
    for i in range(n):
        lo = i - h
        if lo < 0:
            lo = 0
        hi = i + h + 1
        if hi > n:
            hi = n
        s = 0.0
        wmin = xv[lo]
        wmax = xv[lo]
        for j in range(lo, hi):
            v = xv[j]
            s += v
            if v < wmin:
                wmin = v
            elif v > wmax:
                wmax = v
        m = s / (hi - lo)
        if m < wmin:
            m = wmin
        elif m > wmax:
            m = wmax
        ov[i] = m
    return out


def binarize_absolute(curve, double t):
    """mask[i] = curve[i] >= t."""
    x = np.ascontiguousarray(curve, dtype=np.float64)
    cdef double[::1] xv = x
    cdef Py_ssize_t n = xv.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] ov = out
    cdef Py_ssize_t i
    for i in range(n):
        if xv[i] >= t:
            ov[i] = 1
    return out


def binarize_hysteresis(curve, double t_high, double t_low):
    """Two-threshold state machine: enter on >= t_high, leave on < t_low."""
    x = np.ascontiguousarray(curve, dtype=np.float64)
    cdef double[::1] xv = x
    cdef Py_ssize_t n = xv.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] ov = out
    cdef Py_ssize_t i
    cdef bint active = False
    cdef double v
    for i in range(n):
        v = xv[i]
        if active:
            if v < t_low:
                active = False
        elif v >= t_high:
            active = True
        if active:
            ov[i] = 1
    return out


def binarize_slope(curve, int k, double rise, double fall,
                   double plateau_eps, int plateau_len):
    """Slope state machine: enter on a fast rise, leave on a fast fall or plateau."""
    x = np.ascontiguousarray(curve, dtype=np.float64)
    cdef double[::1] xv = x
    cdef Py_ssize_t n = xv.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] ov = out
    cdef Py_ssize_t i
    cdef bint active = False
    cdef int flat_count = 0
    cdef double s
    for i in range(n):
        if i >= k:
            s = (xv[i] - xv[i - k]) / k
        else:
            s = 0.0
        if active:
            if s <= -fall:
                active = False
                flat_count = 0
                continue
            if -plateau_eps < s < plateau_eps:
                flat_count += 1
                if flat_count >= plateau_len:
                    active = False
                    flat_count = 0
                    continue
            else:
                flat_count = 0
            ov[i] = 1
        elif s >= rise:
            active = True
            if -plateau_eps < s < plateau_eps:
                flat_count = 1
            else:
                flat_count = 0
            ov[i] = 1
    return out


def mask_to_runs(mask):
    """Maximal runs of true as an (n, 2) array of half-open [start, end)."""
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef unsigned char[::1] mv = m
    cdef Py_ssize_t n = mv.shape[0]
    # worst case: alternating mask, (n + 1) // 2 runs
    buf = np.empty(((n + 1) // 2 + 1, 2), dtype=np.int64)
    cdef long long[:, ::1] bv = buf
    cdef Py_ssize_t i, count = 0
    cdef bint inside = False
    for i in range(n):
        if mv[i]:
            if not inside:
                bv[count, 0] = i
                inside = True
        elif inside:
            bv[count, 1] = i
            count += 1
            inside = False
    if inside:
        bv[count, 1] = n
        count += 1
    return buf[:count].copy()


def merge_prune_runs(runs, long long min_gap, long long min_len):
    """Merge runs separated by a gap < min_gap, then drop runs shorter than min_len."""
    r = np.ascontiguousarray(runs, dtype=np.int64).reshape(-1, 2)
    cdef long long[:, ::1] rv = r
    cdef Py_ssize_t n = rv.shape[0]
    buf = np.empty((n, 2), dtype=np.int64)
    cdef long long[:, ::1] bv = buf
    cdef Py_ssize_t i, m = 0, kept = 0
    cdef long long start, end
    for i in range(n):
        start = rv[i, 0]
        end = rv[i, 1]
        if m > 0 and start - bv[m - 1, 1] < min_gap:
            bv[m - 1, 1] = end
        else:
            bv[m, 0] = start
            bv[m, 1] = end
            m += 1
    for i in range(m):
        if bv[i, 1] - bv[i, 0] >= min_len:
            bv[kept, 0] = bv[i, 0]
            bv[kept, 1] = bv[i, 1]
            kept += 1
    return buf[:kept].copy()

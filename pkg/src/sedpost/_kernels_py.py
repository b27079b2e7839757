"""Pure-Python curve kernels; reference implementation of sedpost._kernels.

These are the hot inner-loop operations of segmentation and parameter
search. The compiled extension in ``_kernels.pyx`` mirrors this module
operation-for-operation (same summation order, same comparison
conventions), so the two backends return bit-identical results and either
can serve the whole toolkit. Inputs are assumed validated by the callers
in :mod:`sedpost.smoothing` and :mod:`sedpost.segmentation`.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def moving_average(curve: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with window truncation at the edges.

    out[i] = mean(curve[max(0, i-h) : min(T, i+h+1)]) with h = (window-1)//2;
    the mean is renormalized by the actual window length near the edges.
    Summation is sequential left-to-right within each window, and each
    output is clamped into the window's [min, max] so that rounding can
    never push a mean outside the data range (constant windows stay
    exactly constant).
    """
    x = np.ascontiguousarray(curve, dtype=np.float64)
    n = x.shape[0]
    if window == 1:
        return x.copy()
    h = (window - 1) // 2
    out = np.empty(n, dtype=np.float64)
    xs = x.tolist()
    for i in range(n):
        lo = i - h
        if lo < 0:
            lo = 0
        hi = i + h + 1
        if hi > n:
            hi = n
        s = 0.0
        wmin = xs[lo]
        wmax = xs[lo]
        for j in range(lo, hi):
            v = xs[j]
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
        out[i] = m
    return out


def binarize_absolute(curve: np.ndarray, t: float) -> np.ndarray:
    """mask[i] = curve[i] >= t."""
    x = np.ascontiguousarray(curve, dtype=np.float64)
    return (x >= t).astype(np.uint8)


def binarize_hysteresis(curve: np.ndarray, t_high: float, t_low: float) -> np.ndarray:
    """Two-threshold state machine: enter on >= t_high, leave on < t_low."""
    x = np.ascontiguousarray(curve, dtype=np.float64)
    n = x.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    xs = x.tolist()
    active = False
    for i in range(n):
        v = xs[i]
        if active:
            if v < t_low:
                active = False
        elif v >= t_high:
            active = True
        if active:
            out[i] = 1
    return out


def binarize_slope(
    curve: np.ndarray,
    k: int,
    rise: float,
    fall: float,
    plateau_eps: float,
    plateau_len: int,
) -> np.ndarray:
    """Slope state machine: enter on a fast rise, leave on a fast fall or plateau.

    The lag-k slope s[i] = (curve[i] - curve[i-k]) / k is taken as 0 for
    i < k. Inactive -> active when s[i] >= rise (the entry frame never
    terminates). Active -> inactive when s[i] <= -fall, or when |s[j]| <
    plateau_eps has held for plateau_len consecutive frames ending at i;
    the terminating frame is excluded from the segment and a later rise
    may start a new one. A segment still active at the end of the clip
    closes at T.
    """
    x = np.ascontiguousarray(curve, dtype=np.float64)
    n = x.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    xs = x.tolist()
    active = False
    flat_count = 0
    for i in range(n):
        if i >= k:
            s = (xs[i] - xs[i - k]) / k
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
            out[i] = 1
        elif s >= rise:
            active = True
            if -plateau_eps < s < plateau_eps:
                flat_count = 1
            else:
                flat_count = 0
            out[i] = 1
    return out


def mask_to_runs(mask: np.ndarray) -> np.ndarray:
    """Maximal runs of true as an (n, 2) array of half-open [start, end)."""
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    n = m.shape[0]
    starts = []
    ends = []
    inside = False
    for i in range(n):
        if m[i]:
            if not inside:
                starts.append(i)
                inside = True
        elif inside:
            ends.append(i)
            inside = False
    if inside:
        ends.append(n)
    out = np.empty((len(starts), 2), dtype=np.int64)
    out[:, 0] = starts
    out[:, 1] = ends
    return out


def merge_prune_runs(runs: np.ndarray, min_gap: int, min_len: int) -> np.ndarray:
    """Merge runs separated by a gap < min_gap, then drop runs shorter than min_len.

    Expects sorted, non-overlapping [start, end) rows of one class.
    """
    r = np.ascontiguousarray(runs, dtype=np.int64)
    n = r.shape[0]
    merged = []
    for i in range(n):
        start = int(r[i, 0])
        end = int(r[i, 1])
        if merged and start - merged[-1][1] < min_gap:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    kept = [se for se in merged if se[1] - se[0] >= min_len]
    out = np.empty((len(kept), 2), dtype=np.int64)
    for i, (start, end) in enumerate(kept):
        out[i, 0] = start
        out[i, 1] = end
    return out

"""Compiled row-wise kernels for the projections that have no closed form in numpy."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def pava_rows(Y, out):
    """Pool-adjacent-violators on every row of ``Y`` (nondecreasing fit, unit weights)."""
    rows, n = Y.shape
    vals = np.empty(n)
    wts = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    for r in range(rows):
        k = -1
        for i in range(n):
            k += 1
            vals[k] = Y[r, i]
            wts[k] = 1.0
            ends[k] = i
            while k > 0 and vals[k - 1] > vals[k]:
                w = wts[k - 1] + wts[k]
                vals[k - 1] = (wts[k - 1] * vals[k - 1] + wts[k] * vals[k]) / w
                wts[k - 1] = w
                ends[k - 1] = ends[k]
                k -= 1
        start = 0
        for j in range(k + 1):
            for i in range(start, ends[j] + 1):
                out[r, i] = vals[j]
            start = ends[j] + 1
    return out


@njit(cache=True, nogil=True)
def _scaled_box_alpha(y, lo, hi):
    # g(a) = squared distance from y to [a*lo, a*hi]^n is convex and C^1 in a;
    # g'(a)/2 = a*A(a) - B(a) is piecewise linear with breakpoints y_i/hi, y_i/lo.
    n = y.shape[0]
    pos = np.empty(2 * n)
    d_a = np.empty(2 * n)
    d_b = np.empty(2 * n)
    m = 0
    A = 0.0
    B = 0.0
    for i in range(n):
        yi = y[i]
        if yi > 0.0:
            A += hi * hi
            B += hi * yi
            pos[m] = yi / hi
            d_a[m] = -hi * hi
            d_b[m] = -hi * yi
            m += 1
            if lo > 0.0:
                pos[m] = yi / lo
                d_a[m] = lo * lo
                d_b[m] = lo * yi
                m += 1
        elif lo > 0.0:
            A += lo * lo
            B += lo * yi
    order = np.argsort(pos[:m])
    prev = 0.0
    for j in range(m):
        e = order[j]
        nxt = min(pos[e], 1.0)
        if A > 0.0:
            root = B / A
            if root <= nxt:
                return max(root, prev)
        elif B <= 0.0:
            return prev
        if pos[e] >= 1.0:
            return 1.0
        A += d_a[e]
        B += d_b[e]
        prev = pos[e]
    if A > 0.0:
        root = B / A
        if root <= 1.0:
            return max(root, prev)
    elif B <= 0.0:
        return prev
    return 1.0


@njit(cache=True, nogil=True)
def scaled_box_alpha_rows(Y, lo, hi, out):
    """Exact minimizer over a in [0, 1] of dist(y, [a*lo, a*hi]^n)^2 for every row."""
    for r in range(Y.shape[0]):
        out[r] = _scaled_box_alpha(Y[r], lo, hi)
    return out

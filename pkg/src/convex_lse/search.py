"""Golden-section search, scalar and row-vectorized."""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a, b, iterations=200):
    """Minimize a unimodal ``f`` independently on each interval [a_k, b_k].

    ``f`` maps an array of abscissae (one per interval) to an array of values
    and is called once per iteration. Returns the best interior probe.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        left = fc < fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        probe = np.where(left, b - INV_PHI * (b - a), a + INV_PHI * (b - a))
        fp = f(probe)
        c, d = np.where(left, probe, d), np.where(left, c, probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    return np.where(fc < fd, c, d)


def golden_section_max(f, a, b, tol, max_iter=200):
    """Maximize a concave scalar function on [a, b] to interval width ``tol``.

    Returns ``(argmax, value, evaluations)``; the endpoints are evaluated too,
    so a maximum sitting on the boundary is found exactly.
    """
    if b < a:
        raise ValueError("empty interval")
    lo, hi = a, b
    fa, fb = f(a), f(b)
    if b - a <= tol:
        return (a, fa, 2) if fa >= fb else (b, fb, 2)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 4
    while b - a > tol and evals < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    best = max((fa, 0, lo), (fb, 1, hi), (fc, 2, c), (fd, 3, d))
    return best[2], best[0], evals

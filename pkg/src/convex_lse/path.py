"""Per-sample evaluation of the localized supremum along the projection path.

For a draw ``z`` the curve s -> nu(s) = P_K(mu + s z) traces maximizers of
z . nu over K intersected with balls around ``mu``: nu(s) attains the supremum
of z . (nu - mu) over K with |nu - mu| <= r(s), r(s) = |nu(s) - mu|. The radius
r(s) is nondecreasing in s, so the supremum at radius ``t`` is found by a
bracketed search on s. Known (s, r, m) triples are kept per sample so later
radii start from tight brackets.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .sets import DEFAULT_TOL

CHUNK_ROWS = 128
MAX_SEARCH_ITER = 200
FALLBACK_GRID = 512
MONOTONE_SLACK = 1e-9
# rounding error of an exact projection, relative to |mu + s z|
ROUNDING = 64 * np.finfo(float).eps
S_MAX = 2.0**80


def accuracy_factor(K, tol):
    """Projection error per unit |y|: zero for exact projections, sqrt(tol) for
    iterative ones whose stopping rule bounds the error by sqrt(tol) |y|."""
    return 0.0 if getattr(K, "exact_projection", True) else float(np.sqrt(tol))


def radius_tolerance(t):
    return max(1e-8, 1e-6 * t)


def default_threads():
    return os.cpu_count() or 1


class _ChunkPath:
    """Search state for a contiguous block of samples."""

    def __init__(self, K, mu, Z, tol, base_point, base_state):
        self.K, self.mu, self.Z, self.tol = K, mu, Z, tol
        self.accuracy = accuracy_factor(K, tol)
        rows = len(Z)
        diff0 = base_point - mu
        self.t_c = float(np.linalg.norm(diff0))
        self.m0 = Z @ diff0
        # M(t) never exceeds sup{z . nu : nu in K} - z . mu; reaching it means M is flat from there on
        support = K.support(Z)
        self.m_top = None if support is None else support - Z @ mu
        self.has_state = base_state is not None
        self.s_cols = [np.zeros(rows)]
        self.r_cols = [np.full(rows, self.t_c)]
        self.m_cols = [self.m0.copy()]
        self.state_cols = [np.tile(base_state, (rows, 1)) if self.has_state else None]
        self.monotone_violations = 0
        everyone = np.arange(rows)
        batch = self._project(np.ones(rows), everyone, None)
        r1, m1 = self._radius_value(batch.points, everyone)
        diff = batch.points - mu
        self.sq_error = np.einsum("ij,ij->i", diff, diff)
        self.t_star = r1
        self.converged = batch.converged.copy()
        self._store(np.ones(rows), r1, m1, batch.state, everyone)

    def _project(self, s, rows, warm):
        Y = self.mu + s[:, None] * self.Z[rows]
        return self.K.project_many(Y, self.tol, warm)

    def _slack(self, s, rows, r):
        """Allowed backward step of r(s): float noise plus twice the projection error.

        Far along the path |mu + s z| is huge and even an exact projection
        carries a rounding error proportional to it.
        """
        Y = self.mu + s[:, None] * self.Z[rows]
        return MONOTONE_SLACK * (1.0 + r) + (ROUNDING + 2.0 * self.accuracy) * np.linalg.norm(Y, axis=1)

    def _at_top(self, s, rows, m):
        """True where m has reached the support-function ceiling up to projection noise."""
        if self.m_top is None:
            return np.zeros(len(rows), dtype=bool)
        noise = self._slack(s, rows, np.abs(m)) * (1.0 + np.linalg.norm(self.Z[rows], axis=1))
        return m >= self.m_top[rows] - noise

    def _radius_value(self, points, rows):
        diff = points - self.mu
        return np.sqrt(np.einsum("ij,ij->i", diff, diff)), np.einsum("ij,ij->i", self.Z[rows], diff)

    def _store(self, s, r, m, state, rows):
        full = len(self.Z)
        col_s, col_r, col_m = (np.full(full, np.nan) for _ in range(3))
        col_s[rows], col_r[rows], col_m[rows] = s, r, m
        self.s_cols.append(col_s)
        self.r_cols.append(col_r)
        self.m_cols.append(col_m)
        col_state = None
        if self.has_state:
            col_state = np.zeros((full, state.shape[1]))
            col_state[rows] = state
        self.state_cols.append(col_state)

    def _gather_state(self, ks, rows):
        if not self.has_state:
            return None
        return np.array([self.state_cols[k][row] for k, row in zip(ks, rows)])

    def evaluate(self, t, rows):
        """Supremum of z . (nu - mu) over K with |nu - mu| <= t, for each row in ``rows``."""
        rows = np.asarray(rows)
        nr = len(rows)
        tol_t = radius_tolerance(t)
        if t < self.t_c - tol_t:
            return np.full(nr, -np.inf)
        if t <= self.t_c + tol_t:
            return self.m0[rows].copy()

        S = np.array(self.s_cols)[:, rows]
        R = np.array(self.r_cols)[:, rows]
        Mv = np.array(self.m_cols)[:, rows]
        known = ~np.isnan(S)
        idx = np.arange(nr)

        below = known & (R <= t)
        above = known & (R >= t)
        k_lo = np.argmax(np.where(below, S, -np.inf), axis=0)
        has_hi = above.any(axis=0)
        k_hi = np.where(has_hi, np.argmin(np.where(above, S, np.inf), axis=0), k_lo)
        s_lo, r_lo, m_lo = S[k_lo, idx], R[k_lo, idx], Mv[k_lo, idx]
        s_hi = np.where(has_hi, S[k_hi, idx], np.inf)
        r_hi = np.where(has_hi, R[k_hi, idx], np.inf)
        m_hi = np.where(has_hi, Mv[k_hi, idx], np.nan)
        st_lo = self._gather_state(k_lo, rows)
        st_hi = self._gather_state(k_hi, rows)

        out = np.full(nr, np.nan)
        res_s = np.full(nr, np.nan)
        res_r = np.full(nr, np.nan)
        res_state = None if st_lo is None else np.zeros_like(st_lo)
        todo = np.ones(nr, dtype=bool)

        def accept(j, s, r, m, state):
            out[j], res_s[j], res_r[j] = m, s, r
            if res_state is not None:
                res_state[j] = state
            todo[j] = False

        for j in range(nr):
            if abs(r_lo[j] - t) <= tol_t:
                accept(j, s_lo[j], r_lo[j], m_lo[j], None if st_lo is None else st_lo[j])
            elif has_hi[j] and abs(r_hi[j] - t) <= tol_t:
                accept(j, s_hi[j], r_hi[j], m_hi[j], None if st_hi is None else st_hi[j])

        # a stored point already at the ceiling answers every larger radius
        ready = np.flatnonzero(todo & ~has_hi)
        for j in ready[self._at_top(s_lo[ready], rows[ready], m_lo[ready])]:
            accept(j, s_lo[j], r_lo[j], m_lo[j], None if st_lo is None else st_lo[j])

        # grow an upper bracket by doubling s; M stops growing once it reaches its ceiling
        grow = todo & ~has_hi
        while np.any(grow):
            g = np.flatnonzero(grow)
            s_try = np.maximum(2.0 * s_lo[g], 1.0)
            batch = self._project(s_try, rows[g], None if st_lo is None else st_lo[g])
            r_try, m_try = self._radius_value(batch.points, rows[g])
            top = self._at_top(s_try, rows[g], m_try)
            for j, gj in enumerate(g):
                state = None if batch.state is None else batch.state[j]
                if r_try[j] >= t:
                    grow[gj] = False
                    if r_try[j] - t <= tol_t:
                        accept(gj, s_try[j], r_try[j], m_try[j], state)
                    else:
                        s_hi[gj], r_hi[gj], m_hi[gj] = s_try[j], r_try[j], m_try[j]
                        if st_hi is not None:
                            st_hi[gj] = state
                elif top[j] or s_try[j] >= S_MAX:
                    grow[gj] = False
                    accept(gj, s_try[j], r_try[j], m_try[j], state)
                else:
                    s_lo[gj], r_lo[gj], m_lo[gj] = s_try[j], r_try[j], m_try[j]
                    if st_lo is not None:
                        st_lo[gj] = state

        # Illinois false position on r(s) - t inside [s_lo, s_hi]
        f_lo = r_lo - t
        f_hi = r_hi - t
        side = np.zeros(nr, dtype=np.int8)
        for _ in range(MAX_SEARCH_ITER):
            act = np.flatnonzero(todo)
            if act.size == 0:
                break
            a, b = s_lo[act], s_hi[act]
            fa, fb = f_lo[act], f_hi[act]
            with np.errstate(divide="ignore", invalid="ignore"):
                s_new = a - fa * (b - a) / (fb - fa)
            bad = ~np.isfinite(s_new) | (s_new <= a) | (s_new >= b)
            s_new = np.where(bad, 0.5 * (a + b), s_new)
            warm = None
            if st_lo is not None:
                near_hi = (b - s_new) < (s_new - a)
                warm = np.where(near_hi[:, None], st_hi[act], st_lo[act])
            batch = self._project(s_new, rows[act], warm)
            r_new, m_new = self._radius_value(batch.points, rows[act])
            noise = self._slack(s_new, rows[act], r_new)
            violated = (r_new < r_lo[act] - noise) | (r_new > r_hi[act] + noise)
            for j, aj in enumerate(act):
                state = None if batch.state is None else batch.state[j]
                fn = r_new[j] - t
                if violated[j]:
                    self.monotone_violations += 1
                    m, s, r = self._grid_fallback(rows[aj], t, a[j], b[j])
                    accept(aj, s, r, m, None if state is None else np.zeros_like(state))
                elif abs(fn) <= tol_t:
                    accept(aj, s_new[j], r_new[j], m_new[j], state)
                elif fn < 0:
                    s_lo[aj], f_lo[aj], r_lo[aj], m_lo[aj] = s_new[j], fn, r_new[j], m_new[j]
                    if st_lo is not None:
                        st_lo[aj] = state
                    if side[aj] == -1:
                        f_hi[aj] *= 0.5
                    side[aj] = -1
                else:
                    s_hi[aj], f_hi[aj], r_hi[aj], m_hi[aj] = s_new[j], fn, r_new[j], m_new[j]
                    if st_hi is not None:
                        st_hi[aj] = state
                    if side[aj] == 1:
                        f_lo[aj] *= 0.5
                    side[aj] = 1
        for aj in np.flatnonzero(todo):
            # iteration cap: report the feasible bracket end
            accept(aj, s_lo[aj], r_lo[aj], m_lo[aj], None if st_lo is None else st_lo[aj])
        self._store(res_s, res_r, out, res_state, rows)
        return out

    def _grid_fallback(self, row, t, a, b):
        s = np.linspace(a, b, FALLBACK_GRID)
        batch = self._project(s, np.full(FALLBACK_GRID, row), None)
        r, m = self._radius_value(batch.points, np.full(FALLBACK_GRID, row))
        feasible = r <= t + radius_tolerance(t)
        k = np.flatnonzero(feasible)[np.argmax(m[feasible])] if feasible.any() else int(np.argmin(r))
        return m[k], s[k], r[k]


class ProjectionPath:
    """Localized suprema for a fixed matrix of Gaussian draws ``Z`` (one per row).

    Rows are split into fixed-size chunks; chunks run on a thread pool of
    ``threads`` workers. Chunk composition never depends on ``threads``, so
    every result is bit-identical for any worker count.
    """

    def __init__(self, K, mu, Z, tol=DEFAULT_TOL, threads=None):
        self.K = K
        self.mu = np.asarray(mu, dtype=float)
        self.Z = np.asarray(Z, dtype=float)
        self.threads = max(1, int(threads or default_threads()))
        base_batch = K.project_many(self.mu[None, :], tol)
        base = base_batch.points[0]
        base_state = None if base_batch.state is None else base_batch.state[0]
        self.base_point = base
        self.t_c = float(np.linalg.norm(base - self.mu))
        bounds = list(range(0, len(self.Z), CHUNK_ROWS)) + [len(self.Z)]
        self._spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        self._chunks = self._map(
            lambda span: _ChunkPath(K, self.mu, self.Z[span[0] : span[1]], tol, base, base_state), self._spans
        )

    def _map(self, fn, items):
        if self.threads == 1 or len(items) == 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    @property
    def n_samples(self):
        return len(self.Z)

    @property
    def t_star(self):
        return np.concatenate([c.t_star for c in self._chunks])

    @property
    def sq_error(self):
        return np.concatenate([c.sq_error for c in self._chunks])

    @property
    def converged(self):
        return np.concatenate([c.converged for c in self._chunks])

    @property
    def monotone_violations(self):
        return sum(c.monotone_violations for c in self._chunks)

    def values(self, t, rows=None):
        """Per-sample suprema at radius ``t`` (``-inf`` below the distance to K)."""
        if t < 0:
            from .errors import NegativeRadius

            raise NegativeRadius("radius must be nonnegative")
        if rows is None:
            rows = np.arange(self.n_samples)
        rows = np.asarray(rows)
        jobs = []
        for chunk, (a, b) in zip(self._chunks, self._spans):
            local = rows[(rows >= a) & (rows < b)] - a
            if local.size:
                jobs.append((chunk, local))
        parts = self._map(lambda job: job[0].evaluate(float(t), job[1]), jobs)
        return np.concatenate(parts) if parts else np.empty(0)

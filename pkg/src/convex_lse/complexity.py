"""Localized Gaussian complexity f(t) = E sup{Z.(nu - mu) : nu in K, |nu - mu| <= t} - t^2/2.

All Monte Carlo estimates use common random numbers: one fixed matrix of
Gaussian draws is reused for every radius, so each sample's objective
M_i(t) - t^2/2 stays concave in t and so does their average. That is what
makes golden-section search on the averaged objective valid.
"""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .errors import (
    BracketFailure,
    DimensionMismatch,
    EmptyGrid,
    NegativeRadius,
    NonPositiveTmu,
    ParameterOutOfRange,
    PointsNotOnGrid,
)
from .path import ProjectionPath
from .search import golden_section_max
from .sets import DEFAULT_TOL

N_BATCHES = 10
T_MAX = 1e6


def _check_point(K, v, name):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != K.dim:
        raise DimensionMismatch(f"{name} must have dimension {K.dim}, got shape {v.shape}")
    return v


def _fmt(x):
    """Shortest round-trip decimal; infinities as '-inf'/'inf'."""
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(x)


@dataclass(frozen=True)
class ErrorSample:
    t_star: float
    sq_error: float
    seed_index: int = 0


@dataclass(frozen=True, eq=False)
class ComplexityCurve:
    mu: np.ndarray
    grid: np.ndarray
    f_hat: np.ndarray
    stderr: np.ndarray
    m_hat: np.ndarray
    t_c_hat: float
    n_samples: int
    seed: int

    def argmax(self):
        return float(self.grid[int(np.argmax(self.f_hat))])

    def index_of(self, r, rtol=1e-9):
        hits = np.flatnonzero(np.abs(self.grid - r) <= rtol * max(1.0, abs(r)))
        if hits.size == 0:
            raise PointsNotOnGrid(f"{r} is not a grid point")
        return int(hits[0])

    def to_csv(self):
        buf = io.StringIO(newline="")
        buf.write("t,f_hat,stderr,m_hat\n")
        for row in zip(self.grid, self.f_hat, self.stderr, self.m_hat):
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, mu=None, t_c_hat=0.0, n_samples=0, seed=0):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if lines[0].strip() != "t,f_hat,stderr,m_hat":
            raise ValueError("unexpected curve CSV header")
        cols = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        return cls(
            mu=np.zeros(0) if mu is None else np.asarray(mu, dtype=float),
            grid=cols[:, 0],
            f_hat=cols[:, 1],
            stderr=cols[:, 2],
            m_hat=cols[:, 3],
            t_c_hat=t_c_hat,
            n_samples=n_samples,
            seed=seed,
        )


@dataclass(frozen=True)
class BracketVerdict:
    """Outcome of comparing the estimated curve at two radii.

    ``kind`` is ``"lower"`` (t_mu >= bound), ``"upper"`` (t_mu <= bound) or
    ``"inconclusive"``.
    """

    kind: str
    bound: float | None = None

    def to_dict(self):
        return {"kind": self.kind, "bound": self.bound}


@dataclass(frozen=True)
class TmuEstimate:
    t_mu: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    bracket: dict | None = None
    batch_maximizers: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "t_mu": self.t_mu,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bracket": self.bracket,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class ConcentrationRow:
    x: float
    empirical: float
    bound: float
    stderr: float
    violation: bool


@dataclass(frozen=True)
class ConcentrationTable:
    t_mu: float
    n_samples: int
    seed: int
    rows: tuple

    @property
    def any_violation(self):
        return any(r.violation for r in self.rows)

    def to_dict(self):
        return {
            "t_mu": self.t_mu,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "rows": [r.__dict__ for r in self.rows],
        }


@dataclass(frozen=True)
class RiskCheck:
    risk: float
    stderr: float
    lower: float
    upper: float
    inside: bool
    t_mu: float
    C: float

    def to_dict(self):
        return dict(self.__dict__)


def draws(K, n_samples, seed):
    """The common Gaussian draws used by every estimator for ``(seed, n_samples)``."""
    return rng.gaussian_rows(seed, K.dim, n_samples)


def sample_M(K, mu, z, t, tol=DEFAULT_TOL):
    """sup{z . (nu - mu) : nu in K, |nu - mu| <= t} for one draw ``z``; ``-inf`` if empty."""
    if t < 0:
        raise NegativeRadius("radius must be nonnegative")
    mu = _check_point(K, mu, "mu")
    z = _check_point(K, z, "z")
    return float(ProjectionPath(K, mu, z[None, :], tol, threads=1).values(t)[0])


def sample_t_star(K, mu, z, seed_index=0, tol=DEFAULT_TOL):
    """Distance from ``mu`` to the projection of ``mu + z``."""
    mu = _check_point(K, mu, "mu")
    z = _check_point(K, z, "z")
    diff = K.project(mu + z, tol).point - mu
    sq = float(diff @ diff)
    return ErrorSample(t_star=math.sqrt(sq), sq_error=sq, seed_index=seed_index)


def sample_t_stars(K, mu, n_samples, seed, tol=DEFAULT_TOL, chunk=1024):
    """Vector of squared errors |P_K(mu + Z_i) - mu|^2 for samples 0..n_samples-1."""
    mu = _check_point(K, mu, "mu")
    out = np.empty(n_samples)
    for start in range(0, n_samples, chunk):
        count = min(chunk, n_samples - start)
        Z = rng.gaussian_rows(seed, K.dim, count, start)
        diff = K.project_many(mu + Z, tol).points - mu
        out[start : start + count] = np.einsum("ij,ij->i", diff, diff)
    return out


def evaluate_M(K, mu, Z, grid, tol=DEFAULT_TOL, threads=None):
    """Matrix of per-sample suprema, shape (len(Z), len(grid)), grid ascending."""
    mu = _check_point(K, mu, "mu")
    path = ProjectionPath(K, mu, np.atleast_2d(Z), tol, threads)
    return np.column_stack([path.values(t) for t in grid]), path


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise EmptyGrid("grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ParameterOutOfRange("grid must be strictly increasing and positive")
    return grid


def default_grid(t_c, n, points=40):
    """Log-spaced grid on [max(t_c, 1e-2), 4 sqrt(n)]."""
    lo = max(t_c, 1e-2)
    hi = max(4.0 * math.sqrt(n), 2.0 * lo)
    return np.geomspace(lo, hi, points)


def _curve_from_values(mu, grid, values, t_c, seed):
    n_samples = values.shape[0]
    m_hat = values.mean(axis=0)
    finite = np.isfinite(m_hat)
    stderr = np.zeros(len(grid))
    if n_samples > 1:
        stderr[finite] = values[:, finite].std(axis=0, ddof=1) / math.sqrt(n_samples)
    f_hat = m_hat - grid**2 / 2.0
    return ComplexityCurve(
        mu=np.asarray(mu, dtype=float),
        grid=grid,
        f_hat=f_hat,
        stderr=stderr,
        m_hat=m_hat,
        t_c_hat=t_c,
        n_samples=n_samples,
        seed=int(seed),
    )


def estimate_curve(K, mu, grid, n_samples, seed, tol=DEFAULT_TOL, threads=None):
    """Monte Carlo estimate of f on ``grid`` with per-point standard errors."""
    if n_samples < 2:
        raise ParameterOutOfRange("n_samples must be at least 2")
    grid = _check_grid(grid)
    mu = _check_point(K, mu, "mu")
    values, path = evaluate_M(K, mu, draws(K, n_samples, seed), grid, tol, threads)
    return _curve_from_values(mu, grid, values, path.t_c, seed)


def _maximize(path, rows, lo, hi, tol):
    def objective(t):
        return float(np.mean(path.values(t, rows))) - t * t / 2.0

    t, _, _ = golden_section_max(objective, lo, hi, tol)
    return t


def _bracket_from_t_star(path, rows, tol):
    # each sample's concave objective peaks at its own t*, so the average peaks between them
    t_star = path.t_star[rows]
    lo = max(path.t_c, float(t_star.min()) - tol)
    hi = float(t_star.max()) + tol
    if hi > T_MAX:
        raise BracketFailure(f"averaged objective still increasing at t = {T_MAX:g}")
    return lo, hi


def solve_tmu(K, mu, n_samples, seed, tol=1e-3, certify=False, threads=None, proj_tol=DEFAULT_TOL):
    """Maximizer of the sample-average objective, with a 10-batch confidence interval.

    With ``certify=True`` the estimate also carries a bracket (r1, r2) whose
    two ends are each confirmed by :func:`bracket_tmu` on the same draws.
    """
    if n_samples < 2:
        raise ParameterOutOfRange("n_samples must be at least 2")
    mu = _check_point(K, mu, "mu")
    path = ProjectionPath(K, mu, draws(K, n_samples, seed), proj_tol, threads)
    return solve_tmu_on_path(path, seed, tol, certify)


def solve_tmu_on_path(path, seed, tol=1e-3, certify=False):
    """:func:`solve_tmu` for an existing :class:`ProjectionPath` (reuses its draws)."""
    if tol <= 0:
        raise ParameterOutOfRange("tol must be positive")
    n_samples = path.n_samples
    every = np.arange(n_samples)
    t_mu = _maximize(path, every, *_bracket_from_t_star(path, every, tol), tol)

    n_batches = min(N_BATCHES, n_samples)
    maxima = []
    for rows in np.array_split(every, n_batches):
        maxima.append(_maximize(path, rows, *_bracket_from_t_star(path, rows, tol), tol))
    maxima = np.array(maxima)
    half = stats.t.ppf(0.975, n_batches - 1) * maxima.std(ddof=1) / math.sqrt(n_batches)
    half = max(float(half), tol)

    bracket = None
    if certify:
        bracket = _certify(path, path.mu, t_mu, half, seed)
    return TmuEstimate(
        t_mu=float(t_mu),
        ci_low=max(float(t_mu - half), min(path.t_c, float(t_mu))),
        ci_high=float(t_mu + half),
        n_samples=n_samples,
        seed=int(seed),
        bracket=bracket,
        batch_maximizers=tuple(float(v) for v in maxima),
    )


def _certify(path, mu, t_mu, half, seed, attempts=8):
    width = 2.0 * half
    lower = upper = BracketVerdict("inconclusive")
    r1 = r2 = t_mu
    for _ in range(attempts):
        r1 = max(path.t_c, t_mu - width)
        r2 = t_mu + width
        if r1 >= t_mu:
            lower = BracketVerdict("lower", float(r1))
        pts = sorted({r1, t_mu, r2} - {0.0})
        values = np.column_stack([path.values(t) for t in pts])
        curve = _curve_from_values(mu, np.array(pts), values, path.t_c, seed)
        if lower.kind != "lower" and r1 > 0:
            lower = bracket_tmu(curve, r1, t_mu)
        if upper.kind != "upper":
            upper = bracket_tmu(curve, t_mu, r2)
        if lower.kind == "lower" and upper.kind == "upper":
            break
        width *= 2.0
    return {"r1": float(r1), "r2": float(r2), "lower": lower.to_dict(), "upper": upper.to_dict()}


def bracket_tmu(curve, r1, r2):
    """Bound the maximizer from two curve points, each side widened by 3 standard errors."""
    if not 0 <= r1 < r2:
        raise ParameterOutOfRange("need 0 <= r1 < r2")
    i, j = curve.index_of(r1), curve.index_of(r2)
    f1, s1 = curve.f_hat[i], curve.stderr[i]
    f2, s2 = curve.f_hat[j], curve.stderr[j]
    if f1 + 3 * s1 <= f2 - 3 * s2:
        return BracketVerdict("lower", float(r1))
    if f1 - 3 * s1 >= f2 + 3 * s2:
        return BracketVerdict("upper", float(r2))
    if curve.t_c_hat == 0.0:
        # mu in K: f(0) = 0, so a point where f is certainly <= 0 bounds t_mu from above
        for r, k in ((r1, i), (r2, j)):
            if r > 0 and curve.f_hat[k] + 3 * curve.stderr[k] <= 0:
                return BracketVerdict("upper", float(r))
    return BracketVerdict("inconclusive")


def tail_bound(x, t_mu):
    """3 exp(-x^4 / (32 (1 + x / sqrt(t_mu))^2))."""
    return 3.0 * math.exp(-(x**4) / (32.0 * (1.0 + x / math.sqrt(t_mu)) ** 2))


def concentration_check(K, mu, t_mu, n_samples, seed, x_grid, tol=DEFAULT_TOL):
    """Empirical P(| |mu_hat - mu| - t_mu | >= x sqrt(t_mu)) against the tail bound."""
    if not t_mu > 0:
        raise NonPositiveTmu("t_mu must be positive")
    t_star = np.sqrt(sample_t_stars(K, mu, n_samples, seed, tol))
    dev = np.abs(t_star - t_mu)
    rows = []
    for x in x_grid:
        x = float(x)
        p = float(np.mean(dev >= x * math.sqrt(t_mu)))
        se = math.sqrt(p * (1.0 - p) / n_samples)
        bound = tail_bound(x, t_mu)
        rows.append(ConcentrationRow(x, p, bound, se, p > bound + 3.0 * se))
    return ConcentrationTable(float(t_mu), n_samples, int(seed), tuple(rows))


def batch_mean_stderr(values, n_batches=N_BATCHES):
    """Mean and standard error from the spread of batch means."""
    values = np.asarray(values, dtype=float)
    n_batches = min(n_batches, len(values))
    means = np.array([b.mean() for b in np.array_split(values, n_batches)])
    se = means.std(ddof=1) / math.sqrt(n_batches) if n_batches > 1 else 0.0
    return float(values.mean()), float(se)


def risk_vs_tmu_check(K, mu, t_mu, n_samples, seed, C=10.0, tol=DEFAULT_TOL):
    """Is E|mu_hat - mu|^2 within t^2 -/+ C t^(3/2) (t >= 1) or [0, C] (t < 1)?"""
    if C <= 0:
        raise ParameterOutOfRange("C must be positive")
    risk, se = batch_mean_stderr(sample_t_stars(K, mu, n_samples, seed, tol))
    if t_mu >= 1:
        lower, upper = t_mu**2 - C * t_mu**1.5, t_mu**2 + C * t_mu**1.5
    else:
        lower, upper = 0.0, C
    inside = lower - 3 * se <= risk <= upper + 3 * se
    return RiskCheck(risk, se, lower, upper, bool(inside), float(t_mu), float(C))

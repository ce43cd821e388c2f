"""Desk-scale rate experiments: subspace, lasso penalty regimes, isotonic, counterexample.

Each sweep returns a :class:`SweepReport` whose rows echo everything needed
to re-run that row on its own.
"""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .complexity import batch_mean_stderr, draws, solve_tmu_on_path
from .errors import BadDesign, NonMonotoneTruth, NonPositiveValue, TooFewPoints
from .estimation import LSE, CoordinateMean, estimate_risk
from .path import ProjectionPath
from .sets import CounterexampleSet, IsotonicCone, LassoImage, Subspace

DEFAULT_SAMPLES = 400


def fit_loglog_slope(xs, ys):
    """OLS slope of log(ys) on log(xs) and its standard error."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise TooFewPoints("need at least 3 (x, y) pairs")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise NonPositiveValue("log-log fit needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * dx
    stderr = math.sqrt(float(resid @ resid) / (xs.size - 2) / sxx)
    return slope, stderr


@dataclass
class SweepReport:
    experiment: str
    rows: list
    slope: float
    slope_stderr: float
    seed: int
    slope_of: str = "t_mu_hat"
    slope_against: str = "n"
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, timing=False):
        out = {
            "experiment": self.experiment,
            "seed": self.seed,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "slope_of": self.slope_of,
            "slope_against": self.slope_against,
            "config": self.config,
            "rows": self.rows,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2)

    def to_csv(self):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "param_json", "t_mu_hat", "ci_low", "ci_high", "risk", "risk_stderr"])
        for r in self.rows:
            w.writerow(
                [
                    r["n"],
                    json.dumps(r["params"], sort_keys=True),
                    *(repr(float(r[k])) for k in ("t_mu_hat", "ci_low", "ci_high", "risk", "risk_stderr")),
                ]
            )
        return buf.getvalue()


def _row(n, params, est, sq_errors):
    risk, risk_se = batch_mean_stderr(sq_errors)
    return {
        "n": int(n),
        "params": params,
        "t_mu_hat": est.t_mu,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "risk": risk,
        "risk_stderr": risk_se,
    }


def _finish(name, rows, xs_key, seed, started, config, slope_of="t_mu_hat"):
    rows.sort(key=lambda r: (r["n"], r["params"].get("p", 0)))
    ok = [r for r in rows if r[slope_of] > 0]
    xs = [r["params"][xs_key] if xs_key != "n" else r["n"] for r in ok]
    ys = [r[slope_of] for r in ok]
    slope, se = fit_loglog_slope(xs, ys) if len(ok) >= 3 else (float("nan"), float("nan"))
    return SweepReport(
        experiment=name,
        rows=rows,
        slope=slope,
        slope_stderr=se,
        seed=int(seed),
        slope_of=slope_of,
        slope_against=xs_key,
        config=config,
        wall_time=time.perf_counter() - started,
    )


def _solve(K, mu, samples, seed, tol, threads):
    path = ProjectionPath(K, mu, draws(K, samples, seed), threads=threads)
    return solve_tmu_on_path(path, seed, tol), path


def subspace_sweep(p_list, n, samples=DEFAULT_SAMPLES, seed=0, tol=1e-3, threads=None):
    """t_mu at mu = 0 for random p-dimensional subspaces of R^n; slope against p."""
    started = time.perf_counter()
    rows = []
    for p in sorted(int(p) for p in p_list):
        if not 1 <= p <= n:
            raise ValueError(f"need 1 <= p <= n, got p = {p}")
        basis_seed = rng.derived_seed(seed, n, p)
        K = Subspace.random(n, p, basis_seed)
        est, path = _solve(K, np.zeros(n), samples, seed, tol, threads)
        params = {"p": p, "basis_seed": basis_seed, "samples": samples}
        rows.append(_row(n, params, est, path.sq_error))
    config = {"p_list": sorted(int(p) for p in p_list), "n": n, "samples": samples, "tol": tol}
    return _finish("subspace", rows, "p", seed, started, config)


def rademacher_design(n, p, seed):
    """n x p matrix of independent +-1 entries; every column has squared norm n."""
    g = np.random.Generator(np.random.Philox(key=rng.derived_seed(seed, n, p)))
    return g.choice(np.array([-1.0, 1.0]), size=(n, p))


DESIGNS = {"rademacher": rademacher_design}


def lasso_sweep(
    n_list,
    design="rademacher",
    beta=(1.0, 1.0),
    L=None,
    delta=None,
    samples=DEFAULT_SAMPLES,
    seed=0,
    ratio=0.5,
    tol=1e-3,
    threads=None,
):
    """t_mu for the lasso image at mu = X beta, one design per n.

    ``beta`` lists the leading nonzero coefficients (zero-padded to p = ratio * n).
    Give either the radius ``L`` or ``delta = L - |beta|_1``.
    """
    started = time.perf_counter()
    lead = np.asarray(beta, dtype=float)
    l1 = float(np.abs(lead).sum())
    if (L is None) == (delta is None):
        raise ValueError("give exactly one of L and delta")
    L = l1 + delta if L is None else float(L)
    make = DESIGNS[design] if isinstance(design, str) else design
    rows = []
    for n in sorted(int(n) for n in n_list):
        p = max(int(round(ratio * n)), lead.size)
        X = make(n, p, seed)
        diag = np.einsum("ij,ij->j", X, X) / n
        if np.max(np.abs(diag - 1.0)) > 1e-8:
            raise BadDesign("design must satisfy diag(X^T X / n) = 1")
        b = np.zeros(p)
        b[: lead.size] = lead
        K = LassoImage(X, L)
        est, path = _solve(K, X @ b, samples, seed, tol, threads)
        params = {
            "p": p,
            "L": L,
            "delta": L - l1,
            "beta_l1": l1,
            "s": int(np.count_nonzero(lead)),
            "design": design if isinstance(design, str) else getattr(design, "__name__", "custom"),
            "samples": samples,
        }
        rows.append(_row(n, params, est, path.sq_error))
    config = {
        "n_list": sorted(int(n) for n in n_list),
        "beta": lead.tolist(),
        "L": L,
        "ratio": ratio,
        "samples": samples,
        "tol": tol,
    }
    return _finish("lasso", rows, "n", seed, started, config)


def lasso_regimes(n_list, deltas=(1.0, 0.0, -1.0), **kwargs):
    """One :func:`lasso_sweep` per penalty offset, all on the same designs and beta."""
    return {float(d): lasso_sweep(n_list, delta=d, **kwargs) for d in deltas}


def _monotone_truth(spec, n):
    i = np.arange(1, n + 1)
    if callable(spec):
        return np.asarray(spec(n), dtype=float)
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "linear")
    if kind == "linear":
        return spec.get("scale", 1.0) * i / n
    if kind == "constant":
        return np.full(n, spec.get("value", 0.0))
    raise ValueError(f"unknown isotonic truth {kind!r}")


def isotonic_shape(mu):
    """(A, B, D): min and max of n * consecutive gaps, and max(range, 1)."""
    n = mu.size
    gaps = n * np.diff(mu)
    return float(gaps.min()), float(gaps.max()), float(max(mu[-1] - mu[0], 1.0))


def isotonic_sweep(n_list, mu_spec="linear", samples=DEFAULT_SAMPLES, seed=0, tol=1e-3, threads=None):
    started = time.perf_counter()
    rows = []
    for n in sorted(int(n) for n in n_list):
        mu = _monotone_truth(mu_spec, n)
        if np.any(np.diff(mu) < 0):
            raise NonMonotoneTruth("isotonic truth must be nondecreasing")
        A, B, D = isotonic_shape(mu)
        est, path = _solve(IsotonicCone(n), mu, samples, seed, tol, threads)
        params = {"A": A, "B": B, "D": D, "samples": samples}
        rows.append(_row(n, params, est, path.sq_error))
    spec = mu_spec if isinstance(mu_spec, (str, dict)) else getattr(mu_spec, "__name__", "custom")
    config = {"n_list": sorted(int(n) for n in n_list), "mu_spec": spec, "samples": samples, "tol": tol}
    return _finish("isotonic", rows, "n", seed, started, config)


def counterexample_risk(n_list, samples=DEFAULT_SAMPLES, seed=0, with_tmu=False, tol=1e-3, threads=None):
    """Risk of least squares and of the coordinate mean at mu = 0; slope of the LSE risk."""
    if len(n_list) == 0:
        raise ValueError("n_list is empty")
    started = time.perf_counter()
    rows = []
    for n in sorted(int(n) for n in n_list):
        K = CounterexampleSet(n)
        mu = np.zeros(n)
        lse = estimate_risk(LSE(K), mu, samples, seed)
        mean = estimate_risk(CoordinateMean(), mu, samples, seed)
        t_mu = ci_low = ci_high = float("nan")
        if with_tmu:
            est, _ = _solve(K, mu, samples, seed, tol, threads)
            t_mu, ci_low, ci_high = est.t_mu, est.ci_low, est.ci_high
        rows.append(
            {
                "n": n,
                "params": {
                    "samples": samples,
                    "mean_risk": mean.mean_sq_error,
                    "mean_risk_stderr": mean.stderr,
                },
                "t_mu_hat": t_mu,
                "ci_low": ci_low,
                "ci_high": ci_high,
                "risk": lse.mean_sq_error,
                "risk_stderr": lse.stderr,
            }
        )
    config = {"n_list": sorted(int(n) for n in n_list), "samples": samples, "with_tmu": with_tmu}
    return _finish("counterexample", rows, "n", seed, started, config, slope_of="risk")

"""Estimators of mu from Y = mu + Z and their Monte Carlo risk."""

import json
from dataclasses import dataclass

import numpy as np

from . import rng
from .complexity import batch_mean_stderr
from .errors import DimensionMismatch, ParameterOutOfRange
from .sets import DEFAULT_TOL, ConstraintSet


class Estimator:
    kind = "abstract"

    def apply_many(self, Y):
        raise NotImplementedError

    def __call__(self, y):
        return apply(self, y)


class LSE(Estimator):
    """Least squares under a convex constraint: the projection of Y onto the set."""

    kind = "lse"

    def __init__(self, set, tol=DEFAULT_TOL):
        if not isinstance(set, ConstraintSet):
            raise TypeError("LSE needs a ConstraintSet")
        self.set = set
        self.tol = tol

    @property
    def dim(self):
        return self.set.dim

    def apply_many(self, Y):
        return self.set.project_many(Y, self.tol).points

    def __repr__(self):
        return f"LSE({self.set!r})"


class CoordinateMean(Estimator):
    """Every coordinate replaced by the average of Y."""

    kind = "mean"
    dim = None

    def apply_many(self, Y):
        return np.repeat(Y.mean(axis=1, keepdims=True), Y.shape[1], axis=1)

    def __repr__(self):
        return "CoordinateMean()"


class Identity(Estimator):
    kind = "identity"
    dim = None

    def apply_many(self, Y):
        return Y.copy()

    def __repr__(self):
        return "Identity()"


def _rows(est, Y):
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if est.dim is not None and Y.shape[1] != est.dim:
        raise DimensionMismatch(f"estimator expects dimension {est.dim}, got {Y.shape[1]}")
    return Y


def apply(est, y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DimensionMismatch("apply takes a single point")
    return est.apply_many(_rows(est, y))[0]


@dataclass(frozen=True)
class RiskEstimate:
    mean_sq_error: float
    stderr: float
    n_samples: int
    seed: int

    def to_dict(self):
        return {
            "mse": self.mean_sq_error,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def squared_errors(est, mu, n_samples, seed, chunk=1024):
    mu = np.asarray(mu, dtype=float)
    _rows(est, mu)
    out = np.empty(n_samples)
    for start in range(0, n_samples, chunk):
        count = min(chunk, n_samples - start)
        Y = mu + rng.gaussian_rows(seed, mu.shape[0], count, start)
        diff = est.apply_many(Y) - mu
        out[start : start + count] = np.einsum("ij,ij->i", diff, diff)
    return out


def estimate_risk(est, mu, n_samples, seed):
    """Monte Carlo E|est(mu + Z) - mu|^2 with a 10-batch standard error."""
    if n_samples < 2:
        raise ParameterOutOfRange("n_samples must be at least 2")
    mse, se = batch_mean_stderr(squared_errors(est, mu, n_samples, seed))
    return RiskEstimate(mse, se, n_samples, int(seed))

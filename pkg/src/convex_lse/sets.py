"""Closed convex sets with exact Euclidean projections.

Every set projects a whole batch of points at once (``project_many``, one point
per row); the single-point helpers :func:`project`, :func:`distance_to_set`
and :func:`contains` are thin wrappers. Sets are immutable after construction.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    ConvergenceWarning,
    DimensionMismatch,
    InvalidSet,
    ParameterOutOfRange,
)

__all__ = [
    "ProjectionResult",
    "BatchProjection",
    "ConstraintSet",
    "Subspace",
    "Box",
    "L1Ball",
    "LassoImage",
    "IsotonicCone",
    "CounterexampleSet",
    "project",
    "distance_to_set",
    "contains",
    "make_counterexample_point",
    "project_l1_ball",
    "from_descriptor",
]

DEFAULT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    point: np.ndarray
    distance: float
    iterations: int = 0
    converged: bool = True
    beta: np.ndarray | None = None

    def to_dict(self):
        out = {
            "point": self.point.tolist(),
            "distance": self.distance,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if self.beta is not None:
            out["beta"] = self.beta.tolist()
        return out


@dataclass(frozen=True, eq=False)
class BatchProjection:
    """Row-wise projections. ``state`` carries solver coefficients (lasso) for warm starts."""

    points: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    state: np.ndarray | None = None


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _as_rows(Y, n):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != n:
        raise DimensionMismatch(f"expected points of dimension {n}, got shape {Y.shape}")
    return Y


def _as_point(y, n):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != n:
        raise DimensionMismatch(f"expected a point of dimension {n}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ParameterOutOfRange("point has non-finite entries")
    return y


class ConstraintSet:
    """Base class. Subclasses implement ``_project_rows`` and ``sample``."""

    kind = "abstract"
    bounded = False
    exact_projection = True

    def __init__(self, n):
        n = int(n)
        if n < 1:
            raise InvalidSet("dimension must be at least 1")
        self._n = n

    @property
    def dim(self):
        return self._n

    def __setattr__(self, name, value):
        if getattr(self, "_sealed", False):
            raise AttributeError(f"{type(self).__name__} is immutable")
        object.__setattr__(self, name, value)

    def _seal(self):
        object.__setattr__(self, "_sealed", True)

    def project_many(self, Y, tol=DEFAULT_TOL, warm=None):
        Y = _as_rows(Y, self._n)
        if tol <= 0:
            raise ParameterOutOfRange("tol must be positive")
        return self._project_rows(Y, tol, warm)

    def _project_rows(self, Y, tol, warm):
        raise NotImplementedError

    def project(self, y, tol=DEFAULT_TOL):
        y = _as_point(y, self._n)
        batch = self.project_many(y[None, :], tol)
        point = batch.points[0]
        converged = bool(batch.converged[0])
        if not converged:
            warnings.warn(
                f"{self.kind} projection hit its iteration cap", ConvergenceWarning, stacklevel=2
            )
        beta = None if batch.state is None else batch.state[0]
        return ProjectionResult(
            point=point,
            distance=float(np.linalg.norm(y - point)),
            iterations=int(batch.iterations[0]),
            converged=converged,
            beta=beta,
        )

    def distance(self, y, tol=DEFAULT_TOL):
        return self.project(y, tol).distance

    def contains(self, y, tol=None):
        y = _as_point(y, self._n)
        if tol is None:
            tol = 1e-8 * (1.0 + np.linalg.norm(y))
        return self.distance(y) <= tol

    def sample(self, rng, size):
        """Random members of the set, shape (size, n). Used for certificates and tests."""
        raise NotImplementedError

    def support(self, Z):
        """sup{z . nu : nu in K} for each row of ``Z``; None when the set is unbounded."""
        return None

    def descriptor(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self._n})"


def _converged(rows):
    return np.zeros(rows, dtype=np.int64), np.ones(rows, dtype=bool)


class Subspace(ConstraintSet):
    """Span of the columns of an orthonormal ``basis`` (n x p)."""

    kind = "subspace"

    def __init__(self, basis):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[1] < 1 or basis.shape[1] > basis.shape[0]:
            raise InvalidSet("basis must be an n x p matrix with 1 <= p <= n")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise InvalidSet("basis columns are not orthonormal to 1e-10")
        super().__init__(basis.shape[0])
        self.basis = _frozen(basis)
        self._seal()

    @classmethod
    def random(cls, n, p, seed=0):
        rng = np.random.default_rng(seed)
        q, r = np.linalg.qr(rng.standard_normal((n, p)))
        return cls(q * np.sign(np.diag(r)))

    @classmethod
    def coordinate(cls, n, p):
        """The copy of R^p spanned by the first p coordinate axes."""
        return cls(np.eye(n)[:, :p])

    @property
    def rank(self):
        return self.basis.shape[1]

    def _project_rows(self, Y, tol, warm):
        return BatchProjection((Y @ self.basis) @ self.basis.T, *_converged(len(Y)))

    def sample(self, rng, size):
        return (rng.standard_normal((size, self.rank)) * 3.0) @ self.basis.T

    def descriptor(self):
        return {
            "kind": "subspace",
            "n": self._n,
            "p": self.rank,
            "basis": self.basis.ravel().tolist(),
        }


class Box(ConstraintSet):
    kind = "box"
    bounded = True

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise InvalidSet("lower and upper must be vectors of equal length")
        if np.any(lower > upper) or not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidSet("box requires finite lower <= upper componentwise")
        super().__init__(lower.shape[0])
        self.lower = _frozen(lower)
        self.upper = _frozen(upper)
        self._seal()

    def _project_rows(self, Y, tol, warm):
        return BatchProjection(np.clip(Y, self.lower, self.upper), *_converged(len(Y)))

    def sample(self, rng, size):
        u = rng.uniform(size=(size, self._n))
        # a share of the samples sit on vertices and faces
        u[rng.uniform(size=u.shape) < 0.2] = 0.0
        u[rng.uniform(size=u.shape) < 0.2] = 1.0
        return self.lower + u * (self.upper - self.lower)

    def support(self, Z):
        return np.sum(np.maximum(Z * self.lower, Z * self.upper), axis=1)

    def descriptor(self):
        return {"kind": "box", "n": self._n, "lower": self.lower.tolist(), "upper": self.upper.tolist()}


def project_l1_ball(Y, radius):
    """Row-wise projection onto {x : |x|_1 <= radius} by sort and soft-threshold."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if radius < 0:
        raise ParameterOutOfRange("radius must be nonnegative")
    if radius == 0:
        return np.zeros_like(Y)
    A = np.abs(Y)
    out = Y.copy()
    outside = A.sum(axis=1) > radius
    if not np.any(outside):
        return out
    Ao = A[outside]
    S = -np.sort(-Ao, axis=1)
    cs = np.cumsum(S, axis=1) - radius
    k = np.arange(1, Ao.shape[1] + 1)
    theta_all = cs / k
    rho = np.count_nonzero(S > theta_all, axis=1)
    theta = theta_all[np.arange(len(Ao)), rho - 1]
    out[outside] = np.sign(Y[outside]) * np.maximum(Ao - theta[:, None], 0.0)
    return out


class L1Ball(ConstraintSet):
    kind = "l1ball"
    bounded = True

    def __init__(self, n, radius):
        radius = float(radius)
        if not radius >= 0 or not math.isfinite(radius):
            raise InvalidSet("l1 ball radius must be finite and nonnegative")
        super().__init__(n)
        self.radius = radius
        self._seal()

    def _project_rows(self, Y, tol, warm):
        return BatchProjection(project_l1_ball(Y, self.radius), *_converged(len(Y)))

    def support(self, Z):
        return self.radius * np.max(np.abs(Z), axis=1)

    def sample(self, rng, size):
        x = rng.laplace(size=(size, self._n))
        x *= self.radius / np.abs(x).sum(axis=1, keepdims=True)
        scale = rng.uniform(size=(size, 1)) ** (1.0 / self._n)
        scale[rng.uniform(size=size) < 0.3] = 1.0
        return x * scale

    def descriptor(self):
        return {"kind": "l1ball", "n": self._n, "L": self.radius}


class IsotonicCone(ConstraintSet):
    """Nondecreasing vectors mu_1 <= ... <= mu_n."""

    kind = "isotonic"

    def __init__(self, n):
        super().__init__(n)
        self._seal()

    def _project_rows(self, Y, tol, warm):
        out = np.empty_like(Y)
        _kernels.pava_rows(np.ascontiguousarray(Y), out)
        return BatchProjection(out, *_converged(len(Y)))

    def sample(self, rng, size):
        steps = rng.exponential(size=(size, self._n))
        steps[rng.uniform(size=steps.shape) < 0.4] = 0.0
        return np.cumsum(steps, axis=1) + rng.normal(scale=3.0, size=(size, 1))

    def descriptor(self):
        return {"kind": "isotonic", "n": self._n}


def make_counterexample_point(n, alpha, theta):
    """The point with coordinates alpha * n^(-1/4) + alpha * theta_i * n^(-1/2)."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (int(n),))
    if not 0.0 <= alpha <= 1.0:
        raise ParameterOutOfRange("alpha must lie in [0, 1]")
    if np.any(np.abs(theta) > 1.0):
        raise ParameterOutOfRange("every theta_i must lie in [-1, 1]")
    return alpha * n**-0.25 + alpha * theta * n**-0.5


class CounterexampleSet(ConstraintSet):
    """Union over alpha in [0, 1] of the boxes [alpha*(a - b), alpha*(a + b)]^n,
    a = n^(-1/4), b = n^(-1/2).

    The set is the cone over one box truncated at alpha = 1, hence convex. A
    projection minimizes the convex map alpha -> dist(y, box_alpha)^2 and clamps
    ``y`` into the optimal box. ``method="exact"`` walks the breakpoints of the
    piecewise-linear derivative; ``method="golden"`` runs 200 golden-section steps.
    """

    kind = "counterexample"
    bounded = True
    GOLDEN_ITERATIONS = 200

    def __init__(self, n, method="exact"):
        if method not in ("exact", "golden"):
            raise InvalidSet("method must be 'exact' or 'golden'")
        super().__init__(n)
        self.method = method
        self.center = n**-0.25
        self.halfwidth = n**-0.5
        self._seal()

    @property
    def lo(self):
        return self.center - self.halfwidth

    @property
    def hi(self):
        return self.center + self.halfwidth

    def box_sq_distance(self, Y, alpha):
        Y = np.atleast_2d(Y)
        alpha = np.asarray(alpha, dtype=float).reshape(-1, 1)
        return np.sum((Y - np.clip(Y, alpha * self.lo, alpha * self.hi)) ** 2, axis=1)

    def optimal_alpha(self, Y):
        Y = np.ascontiguousarray(np.atleast_2d(Y), dtype=float)
        if self.method == "exact":
            out = np.empty(len(Y))
            _kernels.scaled_box_alpha_rows(Y, self.lo, self.hi, out)
            return out
        from .search import golden_section_min

        return golden_section_min(
            lambda a: self.box_sq_distance(Y, a),
            np.zeros(len(Y)),
            np.ones(len(Y)),
            iterations=self.GOLDEN_ITERATIONS,
        )

    def _project_rows(self, Y, tol, warm):
        alpha = self.optimal_alpha(Y)[:, None]
        points = np.clip(Y, alpha * self.lo, alpha * self.hi)
        iters = np.full(len(Y), self.GOLDEN_ITERATIONS if self.method == "golden" else 0)
        return BatchProjection(points, iters, np.ones(len(Y), dtype=bool))

    def support(self, Z):
        # alpha * (best corner of the unit box) is linear in alpha, so the sup sits at 0 or 1
        full = np.sum(np.maximum(Z * self.lo, Z * self.hi), axis=1)
        return np.maximum(full, 0.0)

    def sample(self, rng, size):
        alpha = rng.uniform(size=(size, 1))
        alpha[rng.uniform(size=size) < 0.2] = 1.0
        theta = rng.uniform(-1.0, 1.0, size=(size, self._n))
        theta[rng.uniform(size=theta.shape) < 0.2] = 1.0
        return alpha * self.center + alpha * theta * self.halfwidth

    def descriptor(self):
        return {"kind": "counterexample", "n": self._n}


def _power_iteration(G, iterations=50):
    v = np.full(G.shape[0], 1.0 / math.sqrt(G.shape[0]))
    lam = 0.0
    for _ in range(iterations):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam = float(v @ G @ v)
    return lam


class LassoImage(ConstraintSet):
    """{X beta : |beta|_1 <= L}.

    Projection runs accelerated projected gradient on beta (step 1/lambda_max of
    X^T X, function-value restart) and stops once the Frank-Wolfe duality gap
    drops below ``tol * |y|^2 / 2``. The gap bounds the suboptimality, so the
    returned point is within ``sqrt(tol) * |y|`` of the exact projection. When the least squares fit is already
    feasible it is returned directly; small designs get an active-set polish
    that solves the KKT system on the detected support.
    """

    kind = "lasso"
    bounded = True
    exact_projection = False
    MAX_ITER = 20_000
    POLISH_MAX_P = 200
    STEP_SAFETY = 1.05

    def __init__(self, X, radius):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise InvalidSet("design must be an n x p matrix with p >= 1")
        if np.any(np.all(X == 0.0, axis=0)):
            raise InvalidSet("design has an all-zero column")
        radius = float(radius)
        if not radius >= 0 or not math.isfinite(radius):
            raise InvalidSet("lasso radius must be finite and nonnegative")
        super().__init__(X.shape[0])
        self.X = _frozen(X)
        self.radius = radius
        G = X.T @ X
        self._gram = _frozen(G)
        lam = _power_iteration(G)
        self._step = 1.0 / (self.STEP_SAFETY * lam)
        U, svals, Vt = np.linalg.svd(X, full_matrices=False)
        keep = svals > svals[0] * max(X.shape) * np.finfo(float).eps
        self._full_rank = bool(np.all(keep)) and X.shape[1] <= X.shape[0]
        # rows of Y @ _pinv_t are minimum-norm least squares coefficients
        self._pinv_t = _frozen((U[:, keep] / svals[keep]) @ Vt[keep])
        self._seal()

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def sigma(self):
        return self._gram / self._n

    @property
    def ratio(self):
        return self.p / self._n

    def eigen_bounds(self):
        """Smallest and largest eigenvalue of X^T X / n."""
        ev = np.linalg.eigvalsh(self.sigma)
        return float(ev[0]), float(ev[-1])

    def coefficients(self, y, tol=DEFAULT_TOL):
        """beta-hat with X beta-hat the projection of ``y``."""
        return self.project(y, tol).beta

    def _project_rows(self, Y, tol, warm):
        rows, p = len(Y), self.p
        beta = np.zeros((rows, p))
        iters = np.zeros(rows, dtype=np.int64)
        conv = np.ones(rows, dtype=bool)
        if self.radius == 0.0:
            return BatchProjection(np.zeros_like(Y), iters, conv, beta)

        ls = Y @ self._pinv_t
        # rounding puts members of the set a hair outside the radius; let them through
        todo = np.abs(ls).sum(axis=1) > self.radius * (1.0 + 1e-12)
        beta[~todo] = ls[~todo]
        if np.any(todo):
            idx = np.flatnonzero(todo)
            b = Y[idx] @ self.X
            half_yy = 0.5 * np.einsum("ij,ij->i", Y[idx], Y[idx])
            start = None if warm is None else np.asarray(warm, dtype=float)[idx]
            bt, it, cv = self._fista(b, half_yy, start, tol)
            if p <= self.POLISH_MAX_P:
                for k in range(len(idx)):
                    polished = self._polish(b[k], bt[k])
                    if polished is not None:
                        bt[k] = polished
                        cv[k] = True
            beta[idx], iters[idx], conv[idx] = bt, it, cv
        return BatchProjection(beta @ self.X.T, iters, conv, beta)

    def _objective(self, b, beta, gbeta):
        return 0.5 * np.einsum("ij,ij->i", beta, gbeta) - np.einsum("ij,ij->i", b, beta)

    def _fista(self, b, half_yy, start, tol):
        rows, p = b.shape
        G, step, L = self._gram, self._step, self.radius
        x = np.zeros((rows, p)) if start is None else project_l1_ball(start, L)
        gx = x @ G
        obj = self._objective(b, x, gx)
        v, gv = x.copy(), gx.copy()
        t = np.ones(rows)
        iters = np.zeros(rows, dtype=np.int64)
        conv = np.zeros(rows, dtype=bool)
        floor = 1e-300
        active = np.arange(rows)
        for _ in range(self.MAX_ITER):
            if active.size == 0:
                break
            xa, va, gva, ba = x[active], v[active], gv[active], b[active]
            xn = project_l1_ball(va - step * (gva - ba), L)
            gxn = xn @ G
            on = self._objective(ba, xn, gxn)
            oa = obj[active]
            iters[active] += 1
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t[active] ** 2))
            mom = ((t[active] - 1.0) / tn)[:, None]
            restart = on > oa
            mom[restart] = 0.0
            tn[restart] = 1.0
            v[active] = xn + mom * (xn - xa)
            gv[active] = gxn + mom * (gxn - gx[active])
            x[active], gx[active], obj[active], t[active] = xn, gxn, on, tn
            # Frank-Wolfe gap: bounds f(x) - f* and hence |X (x - x*)|^2 / 2
            grad = gxn - ba
            gap = L * np.max(np.abs(grad), axis=1) + np.einsum("ij,ij->i", xn, grad)
            done = gap <= tol * half_yy[active] + floor
            conv[active[done]] = True
            active = active[~done]
        return x, iters, conv

    def _polish(self, b, beta):
        """Solve the KKT system on the support of ``beta``, retrying with
        near-zero entries pruned. Returns None when no candidate is optimal."""
        top = np.max(np.abs(beta))
        if top == 0.0:
            return None
        scale = np.max(np.abs(b)) + 1e-300
        for rel in (0.0, 1e-10, 1e-8, 1e-6):
            out = self._kkt_solve(b, beta, np.flatnonzero(np.abs(beta) > rel * top), scale)
            if out is not None:
                return out
        return None

    def _kkt_solve(self, b, beta, support, scale):
        if support.size == 0 or support.size > self._n:
            return None
        sign = np.sign(beta[support])
        k = support.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = self._gram[np.ix_(support, support)]
        kkt[:k, k] = sign
        kkt[k, :k] = sign
        rhs = np.append(b[support], self.radius)
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        bs, lam = sol[:k], sol[k]
        slack = 1e-9 * scale
        if lam < -slack or np.any(bs * sign <= 0):
            return None
        out = np.zeros_like(beta)
        out[support] = bs
        corr = np.abs(b - self._gram @ out)
        off = np.ones(len(beta), dtype=bool)
        off[support] = False
        if np.any(corr[off] > max(lam, 0.0) + slack):
            return None
        return out

    def support(self, Z):
        return self.radius * np.max(np.abs(Z @ self.X), axis=1)

    def sample(self, rng, size):
        beta = L1Ball(self.p, self.radius).sample(rng, size)
        return beta @ self.X.T

    def descriptor(self):
        return {
            "kind": "lasso",
            "n": self._n,
            "p": self.p,
            "L": self.radius,
            "X": self.X.ravel().tolist(),
        }


def project(set, y, tol=DEFAULT_TOL):
    """Nearest point of ``set`` to ``y``."""
    return set.project(y, tol)


def distance_to_set(set, y, tol=DEFAULT_TOL):
    return set.distance(y, tol)


def contains(set, y, tol=None):
    return set.contains(y, tol)


def _matrix(desc, key, n, p):
    if key not in desc:
        raise InvalidSet(f"descriptor missing '{key}'")
    flat = np.asarray(desc[key], dtype=float).ravel()
    if flat.size != n * p:
        raise InvalidSet(f"'{key}' must hold n*p = {n * p} entries, got {flat.size}")
    return flat.reshape(n, p)


def from_descriptor(desc):
    """Build a set from a JSON descriptor (a dict or a JSON string)."""
    if isinstance(desc, (str, bytes)):
        try:
            desc = json.loads(desc)
        except json.JSONDecodeError as exc:
            raise InvalidSet(f"malformed set descriptor: {exc}") from exc
    if not isinstance(desc, dict) or "kind" not in desc or "n" not in desc:
        raise InvalidSet("descriptor must be an object with 'kind' and 'n'")
    kind, n = desc["kind"], int(desc["n"])
    if kind == "isotonic":
        return IsotonicCone(n)
    if kind == "l1ball":
        return L1Ball(n, desc.get("L", 1.0))
    if kind == "counterexample":
        return CounterexampleSet(n)
    if kind == "box":
        lower = np.asarray(desc.get("lower", np.zeros(n)), dtype=float)
        upper = np.asarray(desc.get("upper", np.ones(n)), dtype=float)
        if lower.shape != (n,) or upper.shape != (n,):
            raise InvalidSet("box bounds must have length n")
        return Box(lower, upper)
    if kind == "subspace":
        p = int(desc.get("p", n))
        if "basis" in desc:
            return Subspace(_matrix(desc, "basis", n, p))
        return Subspace.random(n, p, desc.get("seed", 0))
    if kind == "lasso":
        if "p" not in desc:
            raise InvalidSet("lasso descriptor needs 'p'")
        return LassoImage(_matrix(desc, "X", n, int(desc["p"])), desc.get("L", 1.0))
    raise InvalidSet(f"unknown set kind {kind!r}")

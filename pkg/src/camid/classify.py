"""Softmax regression, k-nearest neighbors and a one-hidden-layer network.

All three standardize features with training statistics first. Training is
full-batch gradient descent with learning-rate halving, fully deterministic
given the seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, GradientCheckFailed, NonFiniteCost, ShapeMismatch

log = logging.getLogger(__name__)

LAMBDA_GRID = (1e1, 1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
KNN_DEFAULT_K = {"lbp": 8, "dwd": 15}
MLP_DEFAULT_HIDDEN = {"lbp": 60, "dwd": 90}
MLP_DEFAULT_LAMBDA = {"lbp": 7e-5, "dwd": 5e-5}

GRAD_CHECK_STEP = 1e-5
GRAD_CHECK_TOL = 1e-4
GRAD_CHECK_WEIGHTS = 20


# --- standardization -----------------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    """z-scores on the kept (non-constant) columns of the training matrix."""

    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray
    n_input: int

    @classmethod
    def fit(cls, X, min_std=1e-12):
        X = np.asarray(X, dtype=float)
        std = X.std(axis=0)
        keep = np.flatnonzero(std > min_std)
        if keep.size < X.shape[1]:
            log.info("dropping %d zero-variance features", X.shape[1] - keep.size)
        return cls(X[:, keep].mean(axis=0), std[keep], keep, X.shape[1])

    @property
    def dropped(self):
        return np.setdiff1d(np.arange(self.n_input), self.keep)

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_input:
            raise DimensionMismatch(f"expected {self.n_input} features, got {X.shape[-1]}")
        return (X[..., self.keep] - self.mean) / self.std

    def inverse(self, Z):
        """Back to the kept columns of the original scale."""
        return np.asarray(Z) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "keep": self.keep.tolist(), "n_input": self.n_input}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float),
                   np.array(d["keep"], dtype=np.intp), int(d["n_input"]))


# --- optimization --------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-6
    seed: int = 0
    grad_check_every: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_iters < 0 or self.tol < 0 or self.grad_check_every < 0:
            raise ValueError(f"invalid training configuration {self}")


@dataclass
class DescentResult:
    theta: np.ndarray
    trace: list          # cost after each accepted step (trace[0] = initial cost)
    iterations: int
    converged: bool


def gradient_descent(cost_grad: Callable, theta0, cfg: TrainConfig,
                     callback: Optional[Callable] = None) -> DescentResult:
    """Plain gradient descent with step rejection.

    A step that raises the cost (or makes it non-finite) is rejected and the
    learning rate halved; after 3 accepted steps in a row it is doubled again,
    never past ``cfg.learning_rate``. Stops when ``max|grad| < tol``.
    ``callback(iteration, theta)`` runs after every accepted step.
    """
    theta = np.array(theta0, dtype=float)
    J, g = cost_grad(theta)
    if not np.isfinite(J) or not np.all(np.isfinite(g)):
        raise NonFiniteCost(f"initial cost is {J}")
    lr = cfg.learning_rate
    trace = [float(J)]
    streak = 0
    it = 0
    converged = False
    while it < cfg.max_iters:
        if np.max(np.abs(g)) < cfg.tol:
            converged = True
            break
        it += 1
        cand = theta - lr * g
        Jc, gc = cost_grad(cand)
        if not np.isfinite(Jc) or Jc > J or not np.all(np.isfinite(gc)):
            lr *= 0.5
            streak = 0
            if lr < cfg.learning_rate * 1e-30:
                raise NonFiniteCost("learning rate collapsed without a descent step")
            continue
        theta, J, g = cand, Jc, gc
        trace.append(float(J))
        streak += 1
        if streak >= 3 and lr < cfg.learning_rate:
            lr = min(2 * lr, cfg.learning_rate)
            streak = 0
        if callback is not None:
            callback(it, theta)
    else:
        converged = bool(np.max(np.abs(g)) < cfg.tol)
    return DescentResult(theta, trace, it, converged)


def numerical_gradient(f: Callable, theta, h=GRAD_CHECK_STEP, indices=None):
    """Central differences of scalar ``f`` at ``theta`` (flat indices optional)."""
    theta = np.array(theta, dtype=float)
    flat = theta.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    out = np.zeros(len(idx) if indices is not None else flat.size)
    for j, i in enumerate(idx):
        old = flat[i]
        flat[i] = old + h
        fp = f(theta)
        flat[i] = old - h
        fm = f(theta)
        flat[i] = old
        out[j] = (fp - fm) / (2 * h)
    return out if indices is not None else out.reshape(theta.shape)


def relative_error(a, b):
    a, b = np.ravel(a), np.ravel(b)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)


# --- softmax regression --------------------------------------------------------------

def _one_hot(y, k):
    y = np.asarray(y, dtype=np.intp)
    out = np.zeros((y.size, k))
    out[np.arange(y.size), y] = 1.0
    return out


def _log_softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_cost_grad(theta, X, y, lam, reg_mask=None):
    """Cross-entropy of the softmax model plus ``lam/(2m) * sum(theta**2)``.

    ``theta`` is K x n (one row per class). ``reg_mask`` (n,) selects the
    regularized columns, e.g. to exempt an intercept column; default all.
    """
    theta = np.asarray(theta, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    m, n = X.shape
    K = theta.shape[0]
    if theta.ndim != 2 or theta.shape[1] != n or y.shape != (m,):
        raise ShapeMismatch(f"theta {theta.shape}, X {X.shape}, y {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= K):
        raise ShapeMismatch(f"labels must lie in 0..{K - 1}")
    logp = _log_softmax(X @ theta.T)
    Y = _one_hot(y, K)
    reg = theta if reg_mask is None else theta * np.asarray(reg_mask, dtype=float)
    J = -np.sum(Y * logp) / m + lam / (2 * m) * np.sum(reg * reg)
    grad = -(Y - np.exp(logp)).T @ X / m + (lam / m) * reg
    return float(J), grad


@dataclass(frozen=True)
class LogRegModel:
    theta: np.ndarray            # K x (n_kept [+ 1 intercept column, last])
    lam: float
    standardizer: Standardizer
    intercept: bool = True

    model_type = "logreg"

    @property
    def n_classes(self):
        return self.theta.shape[0]

    def _design(self, X):
        Z = self.standardizer.transform(np.atleast_2d(X))
        if self.intercept:
            Z = np.hstack([Z, np.ones((Z.shape[0], 1))])
        return Z

    def predict_proba(self, X):
        return np.exp(_log_softmax(self._design(X) @ self.theta.T))

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"theta": self.theta.tolist(), "lambda": self.lam,
                "intercept": self.intercept, "standardizer": self.standardizer.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["theta"], dtype=float), float(d["lambda"]),
                   Standardizer.from_dict(d["standardizer"]), bool(d["intercept"]))


def _check_training_labels(y, n_classes):
    y = np.asarray(y, dtype=np.intp)
    K = int(y.max()) + 1 if n_classes is None else n_classes
    if np.unique(y).size < 2:
        raise ValueError("training needs at least 2 classes present")
    return y, K


def logreg_train(X, y, lam, cfg: TrainConfig = TrainConfig(), n_classes=None,
                 intercept=True) -> LogRegModel:
    y, K = _check_training_labels(y, n_classes)
    std = Standardizer.fit(X)
    Z = std.transform(X)
    mask = None
    if intercept:
        Z = np.hstack([Z, np.ones((Z.shape[0], 1))])
        mask = np.r_[np.ones(Z.shape[1] - 1), 0.0]
    res = gradient_descent(lambda t: softmax_cost_grad(t, Z, y, lam, mask),
                           np.zeros((K, Z.shape[1])), cfg)
    log.debug("logreg lambda=%g: %d iterations, cost %.6g", lam, res.iterations, res.trace[-1])
    return LogRegModel(res.theta, float(lam), std, intercept)


def logreg_predict_proba(model: LogRegModel, x):
    x = np.asarray(x, dtype=float)
    p = model.predict_proba(x)
    return p[0] if x.ndim == 1 else p


# --- k nearest neighbors -------------------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    reference: np.ndarray    # standardized, m x n_kept
    labels: np.ndarray
    k: int
    standardizer: Standardizer
    n_classes: int

    model_type = "knn"

    def __post_init__(self):
        if not 1 <= self.k <= len(self.labels):
            raise ValueError(f"k={self.k} outside 1..{len(self.labels)}")

    def predict(self, X):
        Z = self.standardizer.transform(np.atleast_2d(X))
        return np.array([_vote(self.reference, self.labels, self.k, z, self.n_classes) for z in Z])

    def predict_proba(self, X):
        """Neighbor vote fractions."""
        Z = self.standardizer.transform(np.atleast_2d(X))
        out = np.zeros((Z.shape[0], self.n_classes))
        for i, z in enumerate(Z):
            near = _nearest(self.reference, z, self.k)
            out[i] = np.bincount(self.labels[near], minlength=self.n_classes) / self.k
        return out

    def to_dict(self):
        return {"k": self.k, "n_classes": self.n_classes, "labels": self.labels.tolist(),
                "reference": self.reference.tolist(), "standardizer": self.standardizer.to_dict()}

    @classmethod
    def from_dict(cls, d):
        std = Standardizer.from_dict(d["standardizer"])
        ref = np.array(d["reference"], dtype=float).reshape(len(d["labels"]), std.keep.size)
        return cls(ref, np.array(d["labels"], dtype=np.intp), int(d["k"]), std, int(d["n_classes"]))


def _nearest(reference, z, k):
    d2 = np.sum((reference - z) ** 2, axis=1)
    return np.argsort(d2, kind="stable")[:k]


def _vote(reference, labels, k, z, n_classes):
    near = _nearest(reference, z, k)
    votes = np.bincount(labels[near], minlength=n_classes)
    tied = np.flatnonzero(votes == votes.max())
    if tied.size == 1:
        return int(tied[0])
    # neighbors are in distance order: first tied class to appear wins
    for j in near:
        if labels[j] in tied:
            return int(labels[j])


def knn_train(X, y, k, n_classes=None) -> KnnModel:
    y, K = _check_training_labels(y, n_classes)
    std = Standardizer.fit(X)
    return KnnModel(std.transform(X), y, int(k), std, K)


def knn_predict(model: KnnModel, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.standardizer.n_input:
        raise DimensionMismatch(f"expected {model.standardizer.n_input} features, got {x.shape[-1]}")
    pred = model.predict(x)
    return int(pred[0]) if x.ndim == 1 else pred


# --- one-hidden-layer network --------------------------------------------------------

_sigmoid = expit


def _add_bias(a):
    return np.hstack([np.ones((a.shape[0], 1)), a])


def mlp_forward(theta1, theta2, X):
    """Returns (hidden pre-activations, hidden activations with bias, output)."""
    a1 = _add_bias(np.asarray(X, dtype=float))
    z2 = a1 @ theta1.T
    a2 = _add_bias(_sigmoid(z2))
    z3 = a2 @ theta2.T
    return a1, z2, a2, z3


def mlp_cost_grad(theta1, theta2, X, Y, lam):
    """Per-output cross-entropy of sigmoid units plus L2 on non-bias weights.

    ``Y`` is the m x K one-hot target. Returns (J, (grad1, grad2)).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    m = X.shape[0]
    if theta1.shape[1] != X.shape[1] + 1 or theta2.shape[1] != theta1.shape[0] + 1 \
            or Y.shape != (m, theta2.shape[0]):
        raise ShapeMismatch(f"theta1 {theta1.shape}, theta2 {theta2.shape}, X {X.shape}, Y {Y.shape}")
    a1, z2, a2, z3 = mlp_forward(theta1, theta2, X)
    # log(h) = -log(1 + e^-z), log(1 - h) = -log(1 + e^z)
    J = np.sum(Y * np.logaddexp(0, -z3) + (1 - Y) * np.logaddexp(0, z3)) / m
    J += lam / (2 * m) * (np.sum(theta1[:, 1:] ** 2) + np.sum(theta2[:, 1:] ** 2))
    d3 = _sigmoid(z3) - Y
    s2 = a2[:, 1:]
    d2 = (d3 @ theta2[:, 1:]) * s2 * (1 - s2)
    g1 = d2.T @ a1 / m
    g2 = d3.T @ a2 / m
    g1[:, 1:] += lam / m * theta1[:, 1:]
    g2[:, 1:] += lam / m * theta2[:, 1:]
    return float(J), (g1, g2)


@dataclass(frozen=True)
class MlpModel:
    theta1: np.ndarray   # hidden x (n_kept + 1)
    theta2: np.ndarray   # K x (hidden + 1)
    lam: float
    standardizer: Standardizer

    model_type = "mlp"

    @property
    def hidden_units(self):
        return self.theta1.shape[0]

    @property
    def n_classes(self):
        return self.theta2.shape[0]

    def output(self, X):
        *_, z3 = mlp_forward(self.theta1, self.theta2, self.standardizer.transform(np.atleast_2d(X)))
        return _sigmoid(z3)

    def predict_proba(self, X):
        """Sigmoid outputs rescaled to sum to one."""
        h = self.output(X)
        return h / h.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.output(X), axis=1)

    def to_dict(self):
        return {"theta1": self.theta1.tolist(), "theta2": self.theta2.tolist(),
                "lambda": self.lam, "hidden_units": self.hidden_units,
                "standardizer": self.standardizer.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["theta1"], dtype=float), np.array(d["theta2"], dtype=float),
                   float(d["lambda"]), Standardizer.from_dict(d["standardizer"]))


def init_weights(rng, fan_out, fan_in):
    """Uniform in [-eps, eps], eps = sqrt(6 / (fan_in + fan_out)); bias column included."""
    eps = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-eps, eps, size=(fan_out, fan_in + 1))


@dataclass
class _Packer:
    shape1: tuple
    shape2: tuple
    split: int = field(init=False)

    def __post_init__(self):
        self.split = int(np.prod(self.shape1))

    def pack(self, t1, t2):
        return np.concatenate([t1.ravel(), t2.ravel()])

    def unpack(self, flat):
        return flat[: self.split].reshape(self.shape1), flat[self.split:].reshape(self.shape2)


def mlp_train(X, y, hidden_units, lam, cfg: TrainConfig = TrainConfig(), n_classes=None) -> MlpModel:
    if hidden_units < 1:
        raise ValueError("hidden_units must be >= 1")
    y, K = _check_training_labels(y, n_classes)
    std = Standardizer.fit(X)
    Z = std.transform(X)
    Y = _one_hot(y, K)
    rng = np.random.default_rng(cfg.seed)
    t1 = init_weights(rng, hidden_units, Z.shape[1])
    t2 = init_weights(rng, K, hidden_units)
    packer = _Packer(t1.shape, t2.shape)

    def cost_grad(flat):
        J, (g1, g2) = mlp_cost_grad(*packer.unpack(flat), Z, Y, lam)
        return J, packer.pack(g1, g2)

    check_rng = np.random.default_rng([cfg.seed, 1])

    def grad_check(it, flat):
        if not cfg.grad_check_every or it % cfg.grad_check_every:
            return
        idx = check_rng.choice(flat.size, size=min(GRAD_CHECK_WEIGHTS, flat.size), replace=False)
        analytic = cost_grad(flat)[1][idx]
        numeric = numerical_gradient(lambda f: cost_grad(f)[0], flat, indices=idx)
        err = relative_error(analytic, numeric)
        log.debug("gradient check at iteration %d: relative error %.2e", it, err)
        if err > GRAD_CHECK_TOL:
            raise GradientCheckFailed(f"iteration {it}: relative error {err:.3g}")

    res = gradient_descent(cost_grad, packer.pack(t1, t2), cfg, callback=grad_check)
    t1, t2 = packer.unpack(res.theta)
    return MlpModel(t1, t2, float(lam), std)


MODEL_TYPES = {cls.model_type: cls for cls in (LogRegModel, KnnModel, MlpModel)}

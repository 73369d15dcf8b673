"""Small numpy classifiers that output k-class logits.

All fits are deterministic functions of the training data and the
classifier spec. Only ``tiny-mlp`` consumes ``init_seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..generators import log_softmax, logsumexp, softmax
from .tasks import Dataset, stream

KINDS = ("logistic", "knn", "gaussian-naive-bayes", "tiny-mlp")

DEFAULTS = {
    "logistic": {"l2": 1e-2, "max_iter": 100, "tol": 1e-6},
    "knn": {"k": 5, "pseudo_count": 1.0},
    "gaussian-naive-bayes": {"var_smoothing": 1e-9, "pseudo_count": 1.0},
    "tiny-mlp": {"hidden": 8, "epochs": 400, "lr": 0.5, "weight_decay": 1e-4},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "logistic"
    hyperparams: dict = field(default_factory=dict)
    init_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier {self.kind!r}; choose from {KINDS}")
        unknown = set(self.hyperparams) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        hp = self.params
        if self.kind == "knn" and not (isinstance(hp["k"], int) and hp["k"] >= 1):
            raise ValueError("knn k must be a positive integer")
        if self.kind == "tiny-mlp":
            if not 1 <= hp["hidden"] <= 1024:
                raise ValueError("hidden units must lie in [1, 1024]")
            if hp["epochs"] < 1 or hp["lr"] <= 0 or hp["weight_decay"] < 0:
                raise ValueError("need epochs >= 1, lr > 0, weight_decay >= 0")
        if self.kind == "logistic" and hp["l2"] < 0:
            raise ValueError("l2 must be >= 0")
        if "pseudo_count" in hp and hp["pseudo_count"] <= 0:
            raise ValueError("pseudo_count must be > 0")

    @property
    def params(self) -> dict:
        return {**DEFAULTS[self.kind], **self.hyperparams}

    @property
    def uses_init_seed(self) -> bool:
        return self.kind == "tiny-mlp"

    def with_seed(self, init_seed: int) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, dict(self.hyperparams), init_seed)


def _n_classes(y: np.ndarray) -> int:
    return max(2, int(y.max()) + 1)


# --------------------------------------------------------------------------
# logistic regression (multinomial, last class as reference), Newton's method
# --------------------------------------------------------------------------


def _design(X):
    return np.column_stack([X, np.ones(X.shape[0])])


@dataclass
class LogisticModel:
    W: np.ndarray  # (k-1, d+1), bias last
    n_iter: int
    grad_norm: float

    def logits(self, X) -> np.ndarray:
        z = _design(np.asarray(X, float)) @ self.W.T
        return np.column_stack([z, np.zeros(z.shape[0])])


def _logistic_objective(w, Phi, Y, l2, k):
    n, p = Phi.shape
    W = w.reshape(k - 1, p)
    z = np.column_stack([Phi @ W.T, np.zeros(n)])
    logp = log_softmax(z)
    reg = W[:, :-1]
    loss = -np.sum(Y * logp) / n + 0.5 * l2 * np.sum(reg**2)
    P = np.exp(logp)[:, :-1]
    G = (P - Y[:, :-1]).T @ Phi / n
    G[:, :-1] += l2 * reg
    # Hessian of the multinomial NLL: sum_i (diag(p) - p p^T) kron x x^T
    S = np.einsum("ia,ab->iab", P, np.eye(k - 1)) - np.einsum("ia,ib->iab", P, P)
    H = np.einsum("iab,ic,id->acbd", S, Phi, Phi).reshape((k - 1) * p, (k - 1) * p) / n
    penal = np.tile(np.r_[np.full(p - 1, l2), 0.0], k - 1)
    H += np.diag(penal)
    return loss, G.reshape(-1), H


def fit_logistic(spec: ClassifierSpec, data: Dataset) -> LogisticModel:
    hp = spec.params
    k = _n_classes(data.y)
    Phi = _design(data.X)
    Y = np.eye(k)[data.y]
    w = np.zeros((k - 1) * Phi.shape[1])
    loss, g, H = _logistic_objective(w, Phi, Y, hp["l2"], k)
    it = 0
    for it in range(1, hp["max_iter"] + 1):
        if np.linalg.norm(g) < hp["tol"]:
            break
        # tiny ridge keeps the unregularised-bias Hessian invertible on separable data
        step = np.linalg.solve(H + 1e-12 * np.eye(H.shape[0]), g)
        t = 1.0
        while True:
            cand = w - t * step
            new_loss, new_g, new_H = _logistic_objective(cand, Phi, Y, hp["l2"], k)
            if new_loss <= loss + 1e-4 * t * (g @ -step) or t < 1e-10:
                break
            t *= 0.5
        w, loss, g, H = cand, new_loss, new_g, new_H
    return LogisticModel(w.reshape(k - 1, -1), it, float(np.linalg.norm(g)))


# --------------------------------------------------------------------------
# k-nearest neighbours and Gaussian naive Bayes
# --------------------------------------------------------------------------


@dataclass
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    n_classes: int
    pseudo_count: float

    def logits(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        d2 = np.sum((X[:, None, :] - self.X[None, :, :]) ** 2, axis=-1)
        k = min(self.k, self.X.shape[0])
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        counts = np.zeros((X.shape[0], self.n_classes))
        np.add.at(counts, (np.repeat(np.arange(X.shape[0]), k), self.y[nearest].ravel()), 1.0)
        probs = (counts + self.pseudo_count) / (k + self.n_classes * self.pseudo_count)
        return np.log(probs)


@dataclass
class GaussianNBModel:
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k, d)
    log_prior: np.ndarray  # (k,)

    def logits(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        ll = -0.5 * np.sum(
            np.log(2.0 * np.pi * self.variances)[None]
            + (X[:, None, :] - self.means[None]) ** 2 / self.variances[None],
            axis=-1,
        )
        return log_softmax(ll + self.log_prior)


def fit_gnb(spec: ClassifierSpec, data: Dataset) -> GaussianNBModel:
    hp = spec.params
    k = _n_classes(data.y)
    eps = hp["var_smoothing"] * float(np.var(data.X, axis=0).max())
    means = np.zeros((k, data.X.shape[1]))
    variances = np.ones((k, data.X.shape[1]))
    counts = np.bincount(data.y, minlength=k).astype(float)
    for c in range(k):
        Xc = data.X[data.y == c]
        if Xc.shape[0]:
            means[c] = Xc.mean(axis=0)
            variances[c] = Xc.var(axis=0) + eps
    variances = np.maximum(variances, 1e-12)
    prior = (counts + hp["pseudo_count"]) / (counts.sum() + k * hp["pseudo_count"])
    return GaussianNBModel(means, variances, np.log(prior))


# --------------------------------------------------------------------------
# one-hidden-layer tanh network
# --------------------------------------------------------------------------


def mlp_shapes(d: int, hidden: int, k: int):
    return [(d, hidden), (hidden,), (hidden, k), (k,)]


def unpack(theta: np.ndarray, shapes):
    out, i = [], 0
    for s in shapes:
        size = int(np.prod(s))
        out.append(theta[i:i + size].reshape(s))
        i += size
    return out


def mlp_forward(theta, shapes, X):
    W1, b1, W2, b2 = unpack(theta, shapes)
    H = np.tanh(X @ W1 + b1)
    return H @ W2 + b2, H


def mlp_loss_and_grad(theta, shapes, X, y, weight_decay=0.0):
    """Mean cross-entropy plus L2 on the weight matrices, and its gradient."""
    W1, b1, W2, b2 = unpack(theta, shapes)
    n = X.shape[0]
    H = np.tanh(X @ W1 + b1)
    Z = H @ W2 + b2
    lse = logsumexp(Z)
    loss = float(np.mean(lse - Z[np.arange(n), y]))
    loss += 0.5 * weight_decay * (np.sum(W1**2) + np.sum(W2**2))
    dZ = softmax(Z)
    dZ[np.arange(n), y] -= 1.0
    dZ /= n
    gW2 = H.T @ dZ + weight_decay * W2
    gb2 = dZ.sum(axis=0)
    dA = (dZ @ W2.T) * (1.0 - H**2)
    gW1 = X.T @ dA + weight_decay * W1
    gb1 = dA.sum(axis=0)
    return loss, np.concatenate([g.ravel() for g in (gW1, gb1, gW2, gb2)])


def mlp_init(shapes, seed: int) -> np.ndarray:
    rng = stream(seed)
    parts = []
    for s in shapes:
        if len(s) == 2:
            parts.append(rng.standard_normal(s).ravel() / np.sqrt(s[0]))
        else:
            parts.append(np.zeros(s))
    return np.concatenate(parts)


@dataclass
class MLPModel:
    theta: np.ndarray
    shapes: list
    loss_history: list

    def logits(self, X) -> np.ndarray:
        return mlp_forward(self.theta, self.shapes, np.asarray(X, float))[0]


def fit_mlp(spec: ClassifierSpec, data: Dataset) -> MLPModel:
    """Full-batch gradient descent; a step that raises the loss is undone and lr halved."""
    hp = spec.params
    k = _n_classes(data.y)
    shapes = mlp_shapes(data.X.shape[1], hp["hidden"], k)
    theta = mlp_init(shapes, spec.init_seed)
    lr = hp["lr"]
    loss, grad = mlp_loss_and_grad(theta, shapes, data.X, data.y, hp["weight_decay"])
    history = [loss]
    for _ in range(hp["epochs"]):
        cand = theta - lr * grad
        new_loss, new_grad = mlp_loss_and_grad(cand, shapes, data.X, data.y, hp["weight_decay"])
        if new_loss > loss:
            lr *= 0.5
            continue
        theta, loss, grad = cand, new_loss, new_grad
        history.append(loss)
    return MLPModel(theta, shapes, history)


# --------------------------------------------------------------------------


def fit_classifier(spec: ClassifierSpec, train: Dataset):
    """Fit ``spec`` on ``train``; the result has ``.logits(X) -> (n, k)``."""
    y = np.asarray(train.y)
    if y.size == 0:
        raise ValueError("empty training set")
    if np.unique(y).size < 2:
        raise ValueError("training data contains a single class")
    if spec.kind == "logistic":
        return fit_logistic(spec, train)
    if spec.kind == "knn":
        hp = spec.params
        return KNNModel(np.asarray(train.X, float), y, hp["k"], _n_classes(y), hp["pseudo_count"])
    if spec.kind == "gaussian-naive-bayes":
        return fit_gnb(spec, train)
    return fit_mlp(spec, train)

"""Exponential families and closed-form NLL bias-variance decompositions.

The decomposition of the expected negative log-likelihood of an
exponential-family prediction with random natural parameter ``theta_hat``
reads

    NLL = noise + B_A[theta_hat] + d_A(theta, E[theta_hat])

with ``theta = grad A*(E[T(Y)])``. Classification is the categorical
special case written directly in logit space with LogSumExp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DimensionError, DomainError
from .generators import (
    DiscreteDistribution,
    Generator,
    as_distribution,
    bregman_divergence,
    bregman_information,
    log_softmax,
    logsumexp,
    lse_generator,
    softmax,
    softplus_generator,
)

DUALITY_TOL = 1e-8
PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ExponentialFamily:
    """Log-partition bundle of one exponential family.

    ``mean_inside`` tells whether a mean statistic lies in the interior of
    the mean parameter space, where ``gradAstar`` is defined.
    """

    name: str
    natural_dim: int
    A: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradA: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    Astar: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradAstar: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sufficient_statistic: Callable = field(repr=False)
    log_h: Callable = field(repr=False)
    mean_inside: Callable[[np.ndarray], bool] = field(repr=False, default=lambda m: True)
    fixed_params: dict = field(default_factory=dict)

    def generator(self) -> Generator:
        return Generator("custom-family-log-partition", self.natural_dim, self.A, self.gradA)


# --------------------------------------------------------------------------
# registered families
# --------------------------------------------------------------------------


def _append_zero(theta):
    theta = np.asarray(theta, dtype=float)
    return np.concatenate([theta, np.zeros(theta.shape[:-1] + (1,))], axis=-1)


def _categorical_mean_inside(mu) -> bool:
    mu = np.asarray(mu, dtype=float)
    return bool(np.all(mu > 0) and np.all(1.0 - mu.sum(axis=-1) > 0))


def _categorical_astar(mu):
    mu = np.asarray(mu, dtype=float)
    rest = 1.0 - mu.sum(axis=-1)
    return np.sum(mu * np.log(mu), axis=-1) + rest * np.log(rest)


def _categorical_grad_astar(mu):
    mu = np.asarray(mu, dtype=float)
    rest = 1.0 - mu.sum(axis=-1, keepdims=True)
    return np.log(mu) - np.log(rest)


def categorical(k: int) -> ExponentialFamily:
    """Categorical over classes ``0..k-1``; class ``k-1`` is the reference.

    Natural parameters are ``(k-1)``-dimensional and the sufficient
    statistic is the dummy encoding (all zeros for the reference class).
    """
    if k < 2:
        raise DimensionError("categorical family needs k >= 2")

    def T(y):
        y = np.asarray(y, dtype=int)
        if np.any((y < 0) | (y >= k)):
            raise DomainError(f"class label outside [0, {k})")
        return np.eye(k)[y][..., : k - 1]

    return ExponentialFamily(
        name="categorical",
        natural_dim=k - 1,
        A=lambda th: logsumexp(_append_zero(th)),
        gradA=lambda th: softmax(_append_zero(th))[..., :-1],
        Astar=_categorical_astar,
        gradAstar=_categorical_grad_astar,
        sufficient_statistic=T,
        log_h=lambda y: np.zeros(np.shape(y)),
        mean_inside=_categorical_mean_inside,
        fixed_params={"k": k},
    )


def normal(sigma: float = 1.0) -> ExponentialFamily:
    """Normal with known standard deviation; natural parameter mu / sigma."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    log_norm = math.log(math.sqrt(2.0 * math.pi) * sigma)
    return ExponentialFamily(
        name="normal",
        natural_dim=1,
        A=lambda th: 0.5 * np.sum(np.square(th), axis=-1),
        gradA=lambda th: np.asarray(th, dtype=float),
        Astar=lambda mu: 0.5 * np.sum(np.square(mu), axis=-1),
        gradAstar=lambda mu: np.asarray(mu, dtype=float),
        sufficient_statistic=lambda y: np.asarray(y, dtype=float)[..., None] / sigma,
        log_h=lambda y: -np.square(y) / (2.0 * sigma**2) - log_norm,
        mean_inside=lambda mu: bool(np.all(np.isfinite(mu))),
        fixed_params={"sigma": sigma},
    )


def check_family_duality(family: ExponentialFamily, n_points: int = 32, seed: int = 0,
                         tol: float = DUALITY_TOL) -> None:
    """Raise ``ValueError`` unless gradA* inverts gradA and Fenchel equality holds."""
    rng = np.random.default_rng(seed)
    for theta in rng.normal(size=(n_points, family.natural_dim)):
        mu = family.gradA(theta)
        back = family.gradAstar(mu)
        if not np.allclose(back, theta, rtol=0.0, atol=tol):
            raise ValueError(f"{family.name}: gradAstar(gradA(theta)) != theta at {theta}")
        gap = float(family.Astar(mu) + family.A(theta) - theta @ mu)
        if abs(gap) > tol:
            raise ValueError(f"{family.name}: Fenchel equality off by {gap:g} at {theta}")


_REGISTRY: dict[str, Callable[..., ExponentialFamily]] = {
    "categorical": categorical,
    "normal": normal,
}


def register_family(name: str, factory: Callable[..., ExponentialFamily], **probe_params) -> None:
    """Add a family factory after testing both duality invariants on it."""
    check_family_duality(factory(**probe_params))
    _REGISTRY[name] = factory


def get_family(name: str, **params) -> ExponentialFamily:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; registered: {sorted(_REGISTRY)}") from None
    return factory(**params)


def registered_families() -> list[str]:
    return sorted(_REGISTRY)


# --------------------------------------------------------------------------
# decompositions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionResult:
    total: float
    noise: float
    bias: float
    variance_bi: float
    residual: float

    @classmethod
    def from_terms(cls, total, noise, bias, variance_bi) -> "DecompositionResult":
        total, noise, bias, variance_bi = map(float, (total, noise, bias, variance_bi))
        return cls(total, noise, bias, variance_bi, total - noise - bias - variance_bi)


def natural_from_mean(family: ExponentialFamily, mean_statistic) -> np.ndarray:
    """theta = grad A*(E[T(Y)])."""
    mu = np.atleast_1d(np.asarray(mean_statistic, dtype=float))
    if mu.shape[-1] != family.natural_dim:
        raise DimensionError(f"mean statistic must have length {family.natural_dim}")
    if not np.all(np.isfinite(mu)) or not family.mean_inside(mu):
        raise DomainError(f"mean statistic {mu} is not interior to the {family.name} mean space")
    return family.gradAstar(mu)


def nll_decompose(family: ExponentialFamily, target_mean_statistic, theta_hat_dist,
                  expected_log_h: float) -> DecompositionResult:
    """Noise / variance / bias split of E[-ln p_theta_hat(Y)].

    ``target_mean_statistic`` is E[T(Y)] under the target and
    ``expected_log_h`` is E[ln h(Y)]; both describe the target only
    through these two moments. The total is evaluated directly from the
    density, E[A(theta_hat)] - <E[theta_hat], E[T(Y)]> - E[ln h(Y)].
    """
    theta_hat_dist = as_distribution(theta_hat_dist)
    mu = np.atleast_1d(np.asarray(target_mean_statistic, dtype=float))
    theta = natural_from_mean(family, mu)
    gen = family.generator()
    if theta_hat_dist.dim != family.natural_dim:
        raise DimensionError("theta_hat atoms do not match the natural dimension")
    mean_theta = theta_hat_dist.mean()
    variance = bregman_information(gen, theta_hat_dist)
    bias = bregman_divergence(gen, theta, mean_theta)
    noise = -float(family.Astar(mu)) - expected_log_h
    total = float(theta_hat_dist.probs @ family.A(theta_hat_dist.atoms)) - float(mean_theta @ mu) - expected_log_h
    return DecompositionResult.from_terms(total, noise, bias, variance)


class MSEDecomposition(NamedTuple):
    noise: float
    variance: float
    bias_sq: float
    expected_mse: float


def _scalar_dist(mu_hat_dist) -> DiscreteDistribution:
    dist = as_distribution(mu_hat_dist)
    if dist.dim != 1:
        raise DimensionError("mean predictions must be scalar")
    return dist


def mse_decompose(sigma: float, mu_true: float, mu_hat_dist) -> MSEDecomposition:
    """Textbook split E[(Y - mu_hat)^2] = sigma^2 + V[mu_hat] + bias^2 for Y ~ N(mu, sigma^2)."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    sigma, mu_true = float(sigma), float(mu_true)
    dist = _scalar_dist(mu_hat_dist)
    mu_hat = dist.atoms[:, 0]
    mean_hat = float(dist.probs @ mu_hat)
    variance = float(dist.probs @ (mu_hat - mean_hat) ** 2)
    # E_Y[(Y - m)^2] = sigma^2 + (mu - m)^2, then average over mu_hat
    expected = sigma**2 + float(dist.probs @ (mu_true - mu_hat) ** 2)
    return MSEDecomposition(sigma**2, variance, (mu_true - mean_hat) ** 2, expected)


def mse_decompose_via_nll(sigma: float, mu_true: float, mu_hat_dist) -> MSEDecomposition:
    """The same split obtained from the normal-family NLL decomposition.

    Subtracts ln(sqrt(2 pi) sigma) and rescales by 2 sigma^2.
    """
    dist = _scalar_dist(mu_hat_dist)
    fam = normal(sigma)
    log_norm = math.log(math.sqrt(2.0 * math.pi) * sigma)
    e_log_h = -(sigma**2 + mu_true**2) / (2.0 * sigma**2) - log_norm
    res = nll_decompose(fam, [mu_true / sigma], dist.map(lambda a: a / sigma), e_log_h)
    scale = 2.0 * sigma**2
    return MSEDecomposition(
        (res.noise - log_norm) * scale,
        res.variance_bi * scale,
        res.bias * scale,
        (res.total - log_norm) * scale,
    )


def _check_probability_vector(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 1 or Q.shape[0] < 2:
        raise DimensionError("need a probability vector with at least 2 entries")
    if not np.all(np.isfinite(Q)) or np.any(Q <= 0):
        raise DomainError("probability vector must be strictly positive (inverse softmax undefined at 0)")
    if abs(Q.sum() - 1.0) > PROB_SUM_TOL:
        raise DomainError(f"probabilities sum to {Q.sum()!r}")
    return Q


def softmax_inverse(Q) -> np.ndarray:
    """Canonical logits of Q: (ln(Q_1/Q_k), ..., ln(Q_{k-1}/Q_k), 0)."""
    Q = _check_probability_vector(Q)
    z = np.log(Q) - np.log(Q[-1])
    z[-1] = 0.0
    return z


def shannon_entropy(Q) -> float:
    Q = np.asarray(Q, dtype=float)
    return float(-np.sum(Q * np.log(Q)))


def logit_ensemble(atoms, probs=None) -> DiscreteDistribution:
    """Distribution of a logit prediction; equal weights unless given."""
    return as_distribution(atoms, probs)


def classification_nll_decompose(Q, zhat_dist) -> DecompositionResult:
    """Classification NLL split in logit space with LogSumExp.

    noise = H(Q), variance = B_LSE[z_hat], bias = d_LSE(sm^-1(Q), E[z_hat]);
    the total enumerates every (atom, class) pair.
    """
    Q = _check_probability_vector(Q)
    zhat_dist = as_distribution(zhat_dist)
    k = Q.shape[0]
    if zhat_dist.dim != k:
        raise DimensionError(f"logits have {zhat_dist.dim} classes, Q has {k}")
    gen = lse_generator(k)
    nll = -log_softmax(zhat_dist.atoms) @ Q
    total = float(zhat_dist.probs @ nll)
    variance = bregman_information(gen, zhat_dist)
    bias = bregman_divergence(gen, softmax_inverse(Q), zhat_dist.mean())
    return DecompositionResult.from_terms(total, shannon_entropy(Q), bias, variance)


def logits_to_natural(zhat_dist) -> DiscreteDistribution:
    """theta_i = z_i - z_k: logit distribution in categorical natural parameters."""
    zhat_dist = as_distribution(zhat_dist)
    return zhat_dist.map(lambda z: z[:, :-1] - z[:, -1:])


def binary_bi_reduction(zhat_dist) -> float:
    """B_LSE of a 2-class logit distribution via softplus on z_2 - z_1."""
    zhat_dist = as_distribution(zhat_dist)
    if zhat_dist.dim != 2:
        raise DimensionError("binary reduction needs k = 2")
    diffs = zhat_dist.map(lambda z: z[:, 1:2] - z[:, 0:1])
    return bregman_information(softplus_generator(), diffs)

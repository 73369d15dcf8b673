"""The log score on a finite support {0, ..., s-1}.

Distributions are plain probability vectors. The negative entropy of
the log score is sum q ln q, its subgradient is ``ln``, and its convex
conjugate on log-densities is ln sum exp(f).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError
from .families import DecompositionResult, shannon_entropy
from .generators import DiscreteDistribution, as_distribution, clamp_nonnegative, logsumexp


def _positive(p, name="p") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.shape[0] == 0:
        raise DimensionError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise DomainError(f"{name} must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def _pair(p, q):
    p, q = _positive(p, "p"), _positive(q, "q")
    if p.shape != q.shape:
        raise DimensionError("p and q have different lengths")
    return p, q


def kl_divergence(p, q) -> float:
    """d_{G,S}(p, q) = sum q ln(q / p): the log-score divergence of predicting p under q."""
    p, q = _pair(p, q)
    return clamp_nonnegative(float(np.sum(q * (np.log(q) - np.log(p)))))


def log_partition_conjugate(f) -> float:
    """H*(f) = ln sum exp(f_i)."""
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise DimensionError("empty support")
    if not np.all(np.isfinite(f)):
        raise DomainError("non-finite log-density")
    return float(logsumexp(f))


def dual_flip_check(p, q) -> tuple[float, float]:
    """Both sides of d_{G,S}(p, q) = d_{G*,S^-1}(ln q, ln p).

    The dual side is H*(ln p) - H*(ln q) - <ln p - ln q, q>, evaluated
    without using that H*(ln p) vanishes.
    """
    p, q = _pair(p, q)
    primal = kl_divergence(p, q)
    lp, lq = np.log(p), np.log(q)
    dual = log_partition_conjugate(lp) - log_partition_conjugate(lq) - float((lp - lq) @ q)
    return primal, dual


def log_score_decompose(Q, density_ensemble) -> DecompositionResult:
    """Error = noise + variance + bias for the log score on a finite support.

    ``density_ensemble`` is a distribution over strictly positive
    probability vectors p_hat. With m = E[ln p_hat]:
    variance = -H*(m), bias = H*(m) - <m - ln Q, Q>, noise = H(Q).
    """
    Q = _positive(Q, "Q")
    ens: DiscreteDistribution = as_distribution(density_ensemble)
    if ens.dim != Q.shape[0]:
        raise DimensionError("ensemble atoms and Q differ in support size")
    for atom in ens.atoms:
        _positive(atom, "ensemble atom")
    logs = np.log(ens.atoms)
    mean_log = ens.probs @ logs
    h_star = log_partition_conjugate(mean_log)
    total = -float(ens.probs @ (logs @ Q))
    variance = clamp_nonnegative(-h_star)
    bias = clamp_nonnegative(h_star - float((mean_log - np.log(Q)) @ Q))
    return DecompositionResult.from_terms(total, shannon_entropy(Q), bias, variance)

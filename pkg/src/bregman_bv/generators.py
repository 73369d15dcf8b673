"""Convex generators, Bregman divergences and exact Bregman Information.

Everything here works on finite discrete distributions by exact
enumeration, so that identities such as the two equivalent forms of the
Bregman Information or the law of total variance can be checked to
floating point precision.

Points are numpy arrays whose last axis is the generator dimension. A
one-dimensional generator (softplus, scalar squared norm) also accepts
plain scalars.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DomainError, EnumerationBudgetError, NumericalError

#: Negative results above ``-NEG_TOL * max(1, scale)`` are rounding noise.
NEG_TOL = 1e-12
#: Agreement required between the Jensen-gap and expected-divergence forms.
TWO_FORM_TOL = 1e-10
ENUMERATION_BUDGET = 10**6

_SOFTPLUS_CUT = 30.0


# --------------------------------------------------------------------------
# scalar / vector primitives
# --------------------------------------------------------------------------


def logsumexp(z, axis: int = -1) -> np.ndarray:
    """ln sum exp(z) along ``axis`` with the max-shift rewrite."""
    z = np.asarray(z, dtype=float)
    m = np.max(z, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def softmax(z, axis: int = -1) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(z, axis: int = -1) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return z - np.expand_dims(logsumexp(z, axis=axis), axis)


def softplus(x) -> np.ndarray:
    """ln(1 + e^x); exact asymptotes outside [-30, 30]."""
    x = np.asarray(x, dtype=float)
    mid = np.clip(x, -_SOFTPLUS_CUT, _SOFTPLUS_CUT)
    return np.where(
        x > _SOFTPLUS_CUT, x, np.where(x < -_SOFTPLUS_CUT, np.exp(mid), np.log1p(np.exp(mid)))
    )


def sigmoid(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log(safe), 0.0)


def clamp_nonnegative(value: float, scale: float = 1.0) -> float:
    """Clamp rounding-level negatives to zero, raise on real negatives."""
    if value >= 0:
        return float(value)
    if value >= -NEG_TOL * max(1.0, abs(scale)):
        return 0.0
    raise NumericalError(f"quantity that must be >= 0 evaluated to {value!r}")


# --------------------------------------------------------------------------
# Generator
# --------------------------------------------------------------------------


def _always_inside(x: np.ndarray) -> bool:
    return True


@dataclass(frozen=True)
class Generator:
    """A differentiable convex function together with its gradient.

    ``value``, ``gradient`` and ``conjugate`` are vectorised over leading
    axes: an input of shape ``(..., dim)`` gives ``(...)`` (or
    ``(..., dim)`` for the gradient).
    """

    kind: str
    dim: int
    _value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _grad: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _conj: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    _inside: Callable[[np.ndarray], bool] = field(default=_always_inside, repr=False)
    strictly_convex: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("generator dimension must be positive")

    def points(self, x) -> np.ndarray:
        """Validate and coerce ``x`` to an array with last axis ``dim``."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            if self.dim != 1:
                raise DimensionError(f"scalar given to a {self.dim}-dimensional generator")
            arr = arr.reshape(1)
        if arr.shape[-1] != self.dim:
            raise DimensionError(f"expected last axis {self.dim}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite input")
        if not self._inside(arr):
            raise DomainError(f"point outside the domain of {self.kind}")
        return arr

    def value(self, x) -> np.ndarray:
        return self._value(self.points(x))

    def gradient(self, x) -> np.ndarray:
        return self._grad(self.points(x))

    def conjugate(self, y) -> np.ndarray:
        if self._conj is None:
            raise NotImplementedError(f"no closed-form conjugate for {self.kind}")
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            y = y.reshape(1)
        return self._conj(y)


def squared_norm(dim: int = 1) -> Generator:
    return Generator(
        "squared-norm",
        dim,
        lambda x: np.sum(x * x, axis=-1),
        lambda x: 2.0 * x,
        lambda y: np.sum(y * y, axis=-1) / 4.0,
    )


def _softplus_conj(y):
    y = y[..., 0]
    inside = (y >= 0) & (y <= 1)
    return np.where(inside, _xlogx(y) + _xlogx(1.0 - y), np.inf)


def softplus_generator() -> Generator:
    return Generator(
        "softplus",
        1,
        lambda x: softplus(x[..., 0]),
        sigmoid,
        _softplus_conj,
    )


def _lse_conj(y):
    # negative Shannon entropy on the simplex, +inf elsewhere
    on_simplex = np.all(y >= 0, axis=-1) & (np.abs(np.sum(y, axis=-1) - 1.0) < 1e-12)
    return np.where(on_simplex, np.sum(_xlogx(y), axis=-1), np.inf)


def lse_generator(k: int) -> Generator:
    """LogSumExp on R^k. Convex but flat along the all-ones direction."""
    return Generator(
        "log-sum-exp",
        k,
        logsumexp,
        softmax,
        _lse_conj,
        strictly_convex=False,
    )


def neg_entropy_generator(k: int) -> Generator:
    """sum p ln p on the open positive orthant."""
    return Generator(
        "neg-shannon-entropy",
        k,
        lambda p: np.sum(p * np.log(p), axis=-1),
        lambda p: np.log(p) + 1.0,
        lambda y: np.sum(np.exp(y - 1.0), axis=-1),
        lambda p: bool(np.all(p > 0)),
    )


# --------------------------------------------------------------------------
# discrete distributions
# --------------------------------------------------------------------------


def _as_atoms(atoms) -> np.ndarray:
    arr = np.array(atoms, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"atoms must be a list of vectors, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many distinct atoms in R^d with their probabilities."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        atoms = _as_atoms(self.atoms)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if atoms.shape[0] == 0:
            raise DimensionError("empty distribution")
        if probs.shape[0] != atoms.shape[0]:
            raise DimensionError("atoms and probs differ in length")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {probs.sum()!r}, not 1")
        if np.unique(atoms, axis=0).shape[0] != atoms.shape[0]:
            raise DomainError("atoms must be pairwise distinct")
        atoms.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_samples(cls, samples, weights=None) -> "DiscreteDistribution":
        """Empirical distribution; repeated samples are merged."""
        samples = _as_atoms(samples)
        if samples.shape[0] == 0:
            raise DimensionError("empty distribution")
        if weights is None:
            weights = np.full(samples.shape[0], 1.0 / samples.shape[0])
        weights = np.asarray(weights, dtype=float)
        uniq, inverse = np.unique(samples, axis=0, return_inverse=True)
        merged = np.bincount(inverse.reshape(-1), weights=weights, minlength=uniq.shape[0])
        return cls(uniq, merged / merged.sum())

    @classmethod
    def point_mass(cls, atom) -> "DiscreteDistribution":
        return cls(np.atleast_1d(np.asarray(atom, dtype=float))[None, :], [1.0])

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms

    def shifted(self, offset) -> "DiscreteDistribution":
        return DiscreteDistribution(self.atoms + np.asarray(offset, dtype=float), self.probs)

    def map(self, fn) -> "DiscreteDistribution":
        """Push the distribution forward through ``fn`` (row-wise)."""
        return DiscreteDistribution.from_samples(fn(self.atoms), self.probs)


@dataclass(frozen=True)
class JointDiscreteDistribution:
    """A discrete outer variable Y and, per outcome, the law of X given Y."""

    outer_atoms: tuple
    conditional: tuple
    outer_probs: np.ndarray

    def __post_init__(self):
        outer = tuple(self.outer_atoms)
        cond = tuple(self.conditional)
        probs = np.array(self.outer_probs, dtype=float).reshape(-1)
        if not cond:
            raise DimensionError("empty joint distribution")
        if not (len(outer) == len(cond) == probs.shape[0]):
            raise DimensionError("outer atoms, conditionals and probs differ in length")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError("outer probabilities must be nonnegative and sum to 1")
        if any(not isinstance(c, DiscreteDistribution) for c in cond):
            raise TypeError("every conditional must be a DiscreteDistribution")
        if len({c.dim for c in cond}) != 1:
            raise DimensionError("conditionals live in different dimensions")
        probs.setflags(write=False)
        object.__setattr__(self, "outer_atoms", outer)
        object.__setattr__(self, "conditional", cond)
        object.__setattr__(self, "outer_probs", probs)

    def marginal(self) -> DiscreteDistribution:
        atoms = np.concatenate([c.atoms for c in self.conditional])
        weights = np.concatenate([p * c.probs for p, c in zip(self.outer_probs, self.conditional)])
        return DiscreteDistribution.from_samples(atoms, weights)

    def conditional_means(self) -> DiscreteDistribution:
        means = np.stack([c.mean() for c in self.conditional])
        return DiscreteDistribution.from_samples(means, self.outer_probs)


# --------------------------------------------------------------------------
# divergences and Bregman Information
# --------------------------------------------------------------------------


def _divergence(gen: Generator, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return gen._value(y) - gen._value(x) - np.sum(gen._grad(x) * (y - x), axis=-1)


def bregman_divergence(gen: Generator, x, y):
    """phi(y) - phi(x) - <grad phi(x), y - x>.

    Broadcasts over leading axes; returns a float for single points.
    """
    x = gen.points(x)
    y = gen.points(y)
    d = _divergence(gen, x, y)
    scale = np.maximum(np.abs(gen._value(y)), np.abs(gen._value(x)))
    if np.ndim(d) == 0:
        return clamp_nonnegative(float(d), float(scale))
    floor = -NEG_TOL * np.maximum(1.0, scale)
    if np.any(d < floor):
        raise NumericalError(f"divergence evaluated to {d.min()!r}")
    return np.maximum(d, 0.0)


def bregman_information(gen: Generator, dist: DiscreteDistribution) -> float:
    """Exact E[phi(X)] - phi(E[X]) over the atoms of ``dist``."""
    atoms = gen.points(dist.atoms)
    mean = dist.probs @ atoms
    phis = gen._value(atoms)
    e_phi = float(dist.probs @ phis)
    jensen = e_phi - float(gen._value(mean))
    expected_div = float(dist.probs @ _divergence(gen, np.broadcast_to(mean, atoms.shape), atoms))
    scale = max(1.0, float(np.max(np.abs(phis))))
    if abs(jensen - expected_div) > TWO_FORM_TOL * scale:
        raise NumericalError(
            f"Jensen-gap ({jensen!r}) and expected-divergence ({expected_div!r}) forms disagree"
        )
    return clamp_nonnegative(jensen, scale)


def conditional_bregman_information(gen: Generator, joint: JointDiscreteDistribution) -> np.ndarray:
    """B[X | Y = y] for every outer atom, in the order of ``joint.outer_atoms``."""
    return np.array([bregman_information(gen, c) for c in joint.conditional])


class TotalVariance(NamedTuple):
    expected_conditional_bi: float
    bi_of_conditional_means: float
    total_bi: float


def total_variance_decompose(gen: Generator, joint: JointDiscreteDistribution) -> TotalVariance:
    """B[X] = E[B[X|Y]] + B[E[X|Y]], each term computed separately."""
    cond = conditional_bregman_information(gen, joint)
    return TotalVariance(
        float(joint.outer_probs @ cond),
        bregman_information(gen, joint.conditional_means()),
        bregman_information(gen, joint.marginal()),
    )


def iid_average_bi(gen: Generator, dist: DiscreteDistribution, n_copies: int) -> float:
    """BI of the average of ``n_copies`` i.i.d. copies of X, by enumeration."""
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    n_atoms = dist.atoms.shape[0]
    if n_atoms**n_copies > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"{n_atoms}^{n_copies} product atoms exceed the budget of {ENUMERATION_BUDGET}"
        )
    sums = dist.atoms
    probs = dist.probs
    for _ in range(n_copies - 1):
        sums = (sums[:, None, :] + dist.atoms[None, :, :]).reshape(-1, dist.dim)
        probs = np.outer(probs, dist.probs).reshape(-1)
    avg = DiscreteDistribution.from_samples(sums / n_copies, probs)
    return bregman_information(gen, avg)


def as_distribution(atoms: Sequence | np.ndarray | DiscreteDistribution, probs=None) -> DiscreteDistribution:
    """Accept a distribution or (atoms, probs); equal weights by default."""
    if isinstance(atoms, DiscreteDistribution):
        return atoms
    return DiscreteDistribution.from_samples(atoms, probs)

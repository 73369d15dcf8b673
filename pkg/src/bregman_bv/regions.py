"""Markov-bound confidence regions around a mean prediction.

For any convex generator G, Markov's inequality applied to the
divergence d_G(E[X], X) gives a set

    {x : d_G(E[X], x) <= B_G[X] / alpha}

that contains X with probability at least 1 - alpha.

LogSumExp regions are handled in the sum-zero plane: d_LSE does not
change along the all-ones direction, so the raw region is a cylinder and
only its cross-section (equivalently its image in the simplex) carries
information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .generators import (
    DiscreteDistribution,
    Generator,
    _divergence,
    as_distribution,
    bregman_divergence,
    bregman_information,
    softmax,
)

BISECTION_TOL = 1e-9
MAX_BISECTION_ITER = 200
MEMBERSHIP_SLACK = 1e-12
# rays are refined well past BISECTION_TOL so endpoints are reproducible
_STOP_TOL = 1e-3 * BISECTION_TOL


@dataclass(frozen=True)
class ConfidenceRegion:
    generator: Generator
    center: np.ndarray
    bi: float
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if self.bi < 0:
            raise DomainError("Bregman Information must be nonnegative")
        object.__setattr__(self, "center", self.generator.points(self.center).copy())

    @property
    def bound(self) -> float:
        return self.bi / self.alpha


def region_from_distribution(gen: Generator, dist, alpha: float) -> ConfidenceRegion:
    dist = as_distribution(dist)
    return ConfidenceRegion(gen, dist.mean(), bregman_information(gen, dist), alpha)


def region_contains(region: ConfidenceRegion, x) -> bool:
    return bregman_divergence(region.generator, region.center, x) <= region.bound + MEMBERSHIP_SLACK


def _solve_on_ray(gen: Generator, center: np.ndarray, direction: np.ndarray, bound: float) -> float:
    """Step t > 0 with d(center, center + t*direction) = bound, by bisection.

    The divergence is increasing in t along a ray from the center.
    """
    def f(t):
        return float(_divergence(gen, center, center + t * direction)) - bound

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("region is unbounded along this ray")
    lo = 0.0
    for _ in range(MAX_BISECTION_ITER):
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if abs(val) <= _STOP_TOL or hi - lo < 1e-15 * max(1.0, hi):
            return mid
        if val < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binary_region_interval(region: ConfidenceRegion) -> tuple[float, float]:
    """Endpoints (lo, hi) of a one-dimensional (softplus logit) region."""
    if region.generator.dim != 1:
        raise DimensionError("interval extraction needs a scalar generator")
    c = region.center
    if region.bound == 0:
        return float(c[0]), float(c[0])
    one = np.ones(1)
    hi = _solve_on_ray(region.generator, c, one, region.bound)
    lo = _solve_on_ray(region.generator, c, -one, region.bound)
    return float(c[0] - lo), float(c[0] + hi)


def quotient_center(z) -> np.ndarray:
    """Representative of a logit vector with coordinates summing to zero."""
    z = np.asarray(z, dtype=float)
    return z - z.mean(axis=-1, keepdims=True)


def simplex_region_boundary(region: ConfidenceRegion, n_points: int = 64) -> np.ndarray:
    """Boundary of a 3-class LogSumExp region mapped into the simplex.

    Rays leave the center at evenly spaced angles inside the sum-zero
    plane; each is cut where the divergence reaches the bound. Returns an
    ``(n_points, 3)`` array of probability vectors.
    """
    gen = region.generator
    if gen.dim != 3:
        raise DimensionError("simplex boundary needs k = 3")
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    c = quotient_center(region.center)
    if region.bound == 0:
        return np.tile(softmax(c), (n_points, 1))
    u = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    v = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    angles = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    points = []
    for a in angles:
        d = np.cos(a) * u + np.sin(a) * v
        t = _solve_on_ray(gen, c, d, region.bound)
        points.append(c + t * d)
    return softmax(np.array(points))


def region_coverage_exact(gen: Generator, dist, alpha: float) -> float:
    """Probability mass of the atoms of ``dist`` inside its own region."""
    dist: DiscreteDistribution = as_distribution(dist)
    region = region_from_distribution(gen, dist, alpha)
    d = bregman_divergence(gen, np.broadcast_to(region.center, dist.atoms.shape), dist.atoms)
    inside = np.atleast_1d(d) <= region.bound + MEMBERSHIP_SLACK
    return float(dist.probs[inside].sum())

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bregman_bv.discrete_scores import (
    dual_flip_check,
    kl_divergence,
    log_partition_conjugate,
    log_score_decompose,
)
from bregman_bv.errors import DimensionError, DomainError
from bregman_bv.families import classification_nll_decompose
from bregman_bv.generators import DiscreteDistribution, softmax

from conftest import random_logit_ensemble, random_simplex

simplex = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(lambda w: np.array(w) / sum(w))


def kl_oracle(p, q):
    return sum(b * math.log(b / a) for a, b in zip(p, q))


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert kl_divergence([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.1308121, abs=1e-7)
    expected = 0.75 * math.log(3) + 0.25 * math.log(1 / 3)
    assert kl_divergence([0.25, 0.75], [0.75, 0.25]) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.5493061, abs=1e-7)


def test_kl_errors():
    with pytest.raises(DomainError):
        kl_divergence([1.0, 0.0], [0.5, 0.5])
    with pytest.raises(DimensionError):
        kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])


def test_log_partition_conjugate_examples(rng):
    assert log_partition_conjugate([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)
    assert log_partition_conjugate([1.0, 0.0]) == pytest.approx(1.3132617, abs=1e-7)
    for _ in range(100):
        p = random_simplex(rng, int(rng.integers(2, 8)))
        assert abs(log_partition_conjugate(np.log(p))) < 1e-12
    with pytest.raises(DimensionError):
        log_partition_conjugate([])


def test_dual_flip_examples():
    assert dual_flip_check([0.4, 0.6], [0.4, 0.6]) == pytest.approx((0.0, 0.0), abs=1e-15)
    primal, dual = dual_flip_check([0.5, 0.5], [0.75, 0.25])
    assert primal == pytest.approx(0.1308121, abs=1e-7)
    assert dual == pytest.approx(0.1308121, abs=1e-7)


@given(simplex, st.integers(0, 2**32 - 1))
def test_dual_flip_property(p, seed):
    q = random_simplex(np.random.default_rng(seed), len(p))
    primal, dual = dual_flip_check(p, q)
    assert abs(primal - kl_oracle(p, q)) < 1e-12
    assert abs(primal - dual) < 1e-10


@given(simplex, st.integers(0, 2**32 - 1))
def test_strict_propriety(Q, seed):
    P = random_simplex(np.random.default_rng(seed), len(Q))
    if np.max(np.abs(P - Q)) > 1e-6:
        assert Q @ np.log(P) < Q @ np.log(Q)


def test_log_score_examples():
    Q = np.array([0.75, 0.25])
    res = log_score_decompose(Q, DiscreteDistribution.point_mass(Q))
    assert res.bias == pytest.approx(0.0, abs=1e-15)
    assert res.variance_bi == pytest.approx(0.0, abs=1e-15)
    assert res.total == pytest.approx(res.noise, abs=1e-15)
    uni = np.full(3, 1 / 3)
    res = log_score_decompose(uni, DiscreteDistribution.point_mass(uni))
    assert res.total == pytest.approx(math.log(3), abs=1e-15)
    assert res.noise == pytest.approx(math.log(3), abs=1e-15)


def test_log_score_matches_worked_example():
    p2 = [math.exp(2) / (1 + math.exp(2)), 1 / (1 + math.exp(2))]
    res = log_score_decompose([0.75, 0.25], DiscreteDistribution([[0.5, 0.5], p2], [0.5, 0.5]))
    expected = (0.6600376, 0.5623351, 0.0967759, 0.0009265)
    assert (res.total, res.noise, res.variance_bi, res.bias) == pytest.approx(expected, abs=1e-7)
    assert abs(res.residual) < 1e-10


def test_log_score_equals_classification(rng):
    for _ in range(200):
        k = int(rng.integers(2, 6))
        Q = random_simplex(rng, k)
        atoms, probs = random_logit_ensemble(rng, k)
        a = classification_nll_decompose(Q, DiscreteDistribution(atoms, probs))
        b = log_score_decompose(Q, DiscreteDistribution(softmax(atoms), probs))
        for name in ("total", "noise", "variance_bi", "bias"):
            assert abs(getattr(a, name) - getattr(b, name)) < 1e-9
        assert abs(b.residual) < 1e-10


def test_log_score_rejects_zero():
    with pytest.raises(DomainError):
        log_score_decompose([0.5, 0.5], DiscreteDistribution([[1.0, 0.0]], [1.0]))

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bregman_bv.errors import DimensionError, DomainError
from bregman_bv.estimators import LogitEnsembleSet
from bregman_bv.ood import (
    BI,
    CONFIDENCE,
    Decision,
    LabeledPredictionSet,
    ThresholdModel,
    classify_with_threshold,
    discard_curve,
    fit_threshold,
    labeled_predictions,
)

values = st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50)
quantile = st.floats(0.0, 1.0)


def oracle_threshold(u, q):
    s = sorted(u)
    r = max(1, math.ceil(round(q * len(s), 9)))
    return s[min(r, len(s)) - 1]


def test_fit_examples():
    bis = [round(0.1 * i, 1) for i in range(1, 11)]
    assert fit_threshold(bis, 0.9).threshold == 0.9
    assert fit_threshold(bis, 1.0).threshold == 1.0
    assert fit_threshold(bis, 0.0).threshold == 0.1
    for q in (0.01, 0.5, 1.0):
        assert fit_threshold([0.3] * 7, q).threshold == 0.3


def test_fit_errors():
    with pytest.raises(DimensionError):
        fit_threshold([], 0.5)
    with pytest.raises(DomainError):
        fit_threshold([1.0], 1.5)
    with pytest.raises(ValueError):
        fit_threshold([1.0], 0.5, "entropy")


@given(values, quantile)
def test_fit_matches_sort_oracle(u, q):
    assert fit_threshold(u, q).threshold == oracle_threshold(u, q)


def test_classify_examples():
    model = fit_threshold([round(0.1 * i, 1) for i in range(1, 11)], 0.9)
    assert classify_with_threshold(model, 0.95) is Decision.OOD
    assert classify_with_threshold(model, 0.9) is Decision.KEPT
    conf = ThresholdModel(CONFIDENCE, 0.9, 0.8, "reject-below")
    assert classify_with_threshold(conf, 0.95) is Decision.KEPT
    assert classify_with_threshold(conf, 0.5) is Decision.OOD
    assert Decision.OOD.value == "OOD"


def test_model_direction_enforced():
    with pytest.raises(ValueError):
        ThresholdModel(BI, 0.5, 1.0, "reject-below")
    m = fit_threshold([1.0, 2.0], 0.5, CONFIDENCE)
    assert ThresholdModel.from_dict(m.to_dict()) == m


@given(st.lists(st.floats(0, 10), min_size=1, max_size=40, unique=True), quantile)
def test_self_consistency(u, q):
    kept = fit_threshold(u, q).keep_mask(u).mean()
    n = len(u)
    assert kept == max(1, math.ceil(round(q * n, 9))) / n
    assert q - 1 / n <= kept <= 1


@given(values, quantile)
def test_mode_symmetry(u, q):
    bi_keep = fit_threshold(u, q, BI).keep_mask(u)
    neg = -np.asarray(u)
    conf_keep = fit_threshold(neg, q, CONFIDENCE).keep_mask(neg)
    np.testing.assert_array_equal(bi_keep, conf_keep)


def _prediction_set(rng, n):
    y = rng.integers(0, 3, n)
    pred = np.where(rng.uniform(size=n) < 0.7, y, (y + 1) % 3)
    return LabeledPredictionSet(rng.exponential(size=n), pred, y, rng.exponential(size=n))


@pytest.mark.parametrize("measure", [BI, CONFIDENCE])
def test_curve_monotone_retention(rng, measure):
    test = _prediction_set(rng, 200)
    rows = discard_curve(rng.exponential(size=150), test, np.linspace(0, 1, 21), measure)
    kept = [r.kept_fraction for r in rows]
    assert all(b >= a for a, b in zip(kept, kept[1:]))


def test_curve_against_oracle(rng):
    test = _prediction_set(rng, 100)
    val = rng.exponential(size=80)
    for row in discard_curve(val, test, [0.3, 0.9, 1.0]):
        t = oracle_threshold(list(val), row.quantile)
        keep = [i for i in range(100) if test.uncertainty[i] <= t]
        assert row.kept_fraction == len(keep) / 100
        assert row.accuracy == pytest.approx(np.mean([test.predicted_class[i] == test.true_class[i] for i in keep]))
        assert row.mean_nll == pytest.approx(np.mean([test.nll_contribution[i] for i in keep]))


def test_curve_same_distribution_keeps_all_at_q1(rng):
    u = rng.exponential(size=1000)
    test = LabeledPredictionSet(u[500:], np.zeros(500, int), np.zeros(500, int), np.zeros(500))
    assert discard_curve(u[:500], test, [1.0])[0].kept_fraction >= 0.99


def test_curve_empty_kept_set_is_nan():
    test = LabeledPredictionSet([5.0, 6.0], [0, 1], [0, 0], [0.1, 0.2])
    row = discard_curve([1.0, 2.0], test, [0.0])[0]
    assert row.kept_fraction == 0.0
    assert math.isnan(row.accuracy) and math.isnan(row.mean_nll)


def test_prediction_set_validation():
    with pytest.raises(DimensionError):
        LabeledPredictionSet([1.0], [0, 1], [0], [0.1])
    with pytest.raises(DomainError):
        LabeledPredictionSet([1.0], [0], [0], [-0.1])


def test_labeled_predictions_use_selected_member():
    ens = LogitEnsembleSet([[[2.0, 0.0], [0.0, 3.0]], [[0.0, 1.0], [0.0, 1.0]]])
    preds = labeled_predictions(ens, [1, 1])
    np.testing.assert_array_equal(preds.predicted_class, [0, 1])
    assert preds.nll_contribution[0] == pytest.approx(math.log1p(math.exp(2.0)))
    assert preds.uncertainty[1] == 0.0
    conf = labeled_predictions(ens, [1, 1], CONFIDENCE, 1)
    assert conf.uncertainty[0] == pytest.approx(1 / (1 + math.exp(-3.0)))
    with pytest.raises(DomainError):
        labeled_predictions(ens, [0, 2])

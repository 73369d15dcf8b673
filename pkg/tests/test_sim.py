import math

import numpy as np
import pytest

from bregman_bv.estimators import LogitEnsembleSet, bi_per_instance, ensemble_mean_logits
from bregman_bv.ood import BI
from bregman_bv.sim import (
    ClassifierSpec,
    Dataset,
    GridSpec,
    ToyTaskSpec,
    bi_map,
    drift_benchmark,
    drift_task,
    fit_classifier,
    member_models,
    sample_toy_task,
    sample_validation,
)
from bregman_bv.sim.classifiers import mlp_init, mlp_loss_and_grad, mlp_shapes
from bregman_bv.sim.experiments import ensemble_logits, grid_axes


# --- tasks -----------------------------------------------------------------------


@pytest.mark.parametrize("shape", ["moons", "circles", "linear-blobs", "drift-blobs"])
def test_task_determinism(shape):
    a = sample_toy_task(ToyTaskSpec(shape, seed=11))
    b = sample_toy_task(ToyTaskSpec(shape, seed=11))
    c = sample_toy_task(ToyTaskSpec(shape, seed=12))
    np.testing.assert_array_equal(a.train.X, b.train.X)
    np.testing.assert_array_equal(a.test.y, b.test.y)
    assert not np.array_equal(a.train.X, c.train.X)
    assert len(a.train) == 300 and len(a.test) == 200


def test_noiseless_moons_on_arcs():
    data = sample_toy_task(ToyTaskSpec("moons", noise_scale=0.0, seed=3)).train
    upper = data.X[data.y == 0]
    lower = data.X[data.y == 1]
    assert np.allclose(np.hypot(*upper.T), 1.0)
    assert np.allclose(np.hypot(lower[:, 0] - 1.0, lower[:, 1] - 0.5), 1.0)
    assert np.all(upper[:, 1] >= 0) and np.all(lower[:, 1] <= 0.5)


def test_drift_offset_moves_test_only():
    base = ToyTaskSpec("drift-blobs", seed=5)
    moved = ToyTaskSpec("drift-blobs", drift_offset=(3.0, 0.0), seed=5)
    a, b = sample_toy_task(base), sample_toy_task(moved)
    np.testing.assert_array_equal(a.train.X, b.train.X)
    diff = b.test.X.mean(axis=0) - a.test.X.mean(axis=0)
    se = b.test.X.std(axis=0) / math.sqrt(len(b.test))
    assert np.all(np.abs(diff - [3.0, 0.0]) <= 3 * se)
    np.testing.assert_array_equal(sample_validation(moved).X, sample_validation(base).X)


def test_task_validation():
    with pytest.raises(ValueError):
        ToyTaskSpec("spirals")
    with pytest.raises(ValueError):
        ToyTaskSpec(n_train=5)
    with pytest.raises(ValueError):
        ToyTaskSpec(noise_scale=-1)


# --- classifiers ------------------------------------------------------------------


def _separable():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(80, 2))
    X = X[np.abs(X[:, 0] + X[:, 1]) > 0.3]
    return Dataset(X, (X[:, 0] + X[:, 1] > 0).astype(int))


def _accuracy(model, data):
    return float(np.mean(np.argmax(model.logits(data.X), axis=1) == data.y))


def test_logistic_separable():
    data = _separable()
    model = fit_classifier(ClassifierSpec("logistic"), data)
    assert _accuracy(model, data) == 1.0
    assert model.grad_norm < 1e-6 or model.n_iter == 100


def test_logistic_against_gradient_oracle():
    # at the optimum the penalized gradient vanishes; check with finite differences
    data = sample_toy_task(ToyTaskSpec("moons", seed=1)).train
    model = fit_classifier(ClassifierSpec("logistic", {"l2": 0.1}), data)
    W = model.W.copy()

    def objective(w):
        w = w.reshape(W.shape)  # (k-1, d+1), bias last, last class fixed at 0
        Z = np.column_stack([data.X, np.ones(len(data))]) @ w.T
        Z = np.column_stack([Z, np.zeros(len(data))])
        lse = np.log(np.exp(Z).sum(axis=1))
        return float(np.mean(lse - Z[np.arange(len(data)), data.y])) + 0.05 * np.sum(w[:, :-1] ** 2)

    h = 1e-6
    grad = [(objective(W.ravel() + h * e) - objective(W.ravel() - h * e)) / (2 * h) for e in np.eye(W.size)]
    assert np.max(np.abs(grad)) < 1e-5


def test_knn_one_neighbour_memorizes():
    data = sample_toy_task(ToyTaskSpec("moons", noise_scale=0.3, seed=2)).train
    assert _accuracy(fit_classifier(ClassifierSpec("knn", {"k": 1}), data), data) == 1.0


def test_knn_and_gnb_logits_are_log_probabilities():
    data = sample_toy_task(ToyTaskSpec("circles", seed=2))
    for kind in ("knn", "gaussian-naive-bayes"):
        logits = fit_classifier(ClassifierSpec(kind), data.train).logits(data.test.X)
        assert np.all(np.isfinite(logits))
        assert np.allclose(np.exp(logits).sum(axis=1), 1.0)
    knn = fit_classifier(ClassifierSpec("knn"), data.train).logits(data.test.X)
    # 5 votes with pseudo-count 1 over 2 classes: probabilities are multiples of 1/7
    assert np.allclose(np.exp(knn) * 7, np.round(np.exp(knn) * 7))


def test_single_class_rejected():
    with pytest.raises(ValueError):
        fit_classifier(ClassifierSpec("logistic"), Dataset(np.zeros((10, 2)), np.zeros(10, int)))


def test_spec_validation():
    with pytest.raises(ValueError):
        ClassifierSpec("svm")
    with pytest.raises(ValueError):
        ClassifierSpec("knn", {"k": 0})
    with pytest.raises(ValueError):
        ClassifierSpec("logistic", {"hidden": 3})


def test_mlp_gradient_finite_differences():
    data = sample_toy_task(ToyTaskSpec("moons", seed=4)).train
    shapes = mlp_shapes(2, 8, 2)
    theta = mlp_init(shapes, 9) + 0.1
    _, grad = mlp_loss_and_grad(theta, shapes, data.X, data.y, 1e-3)
    rng = np.random.default_rng(0)
    h = 1e-6
    for i in rng.choice(theta.size, 5, replace=False):
        e = np.zeros_like(theta)
        e[i] = h
        fd = (mlp_loss_and_grad(theta + e, shapes, data.X, data.y, 1e-3)[0]
              - mlp_loss_and_grad(theta - e, shapes, data.X, data.y, 1e-3)[0]) / (2 * h)
        assert abs(grad[i] - fd) / max(abs(fd), 1e-8) < 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mlp_loss_non_increasing(seed):
    data = sample_toy_task(ToyTaskSpec("moons", seed=seed)).train
    model = fit_classifier(ClassifierSpec("tiny-mlp", {"lr": 5.0}, init_seed=seed), data)
    hist = np.array(model.loss_history)
    assert np.all(np.diff(hist) <= 0)
    assert hist[-1] < hist[0]


def test_fits_are_deterministic():
    data = sample_toy_task(ToyTaskSpec("moons", seed=0))
    for kind in ("logistic", "knn", "gaussian-naive-bayes", "tiny-mlp"):
        a = fit_classifier(ClassifierSpec(kind, init_seed=3), data.train).logits(data.test.X)
        b = fit_classifier(ClassifierSpec(kind, init_seed=3), data.train).logits(data.test.X)
        np.testing.assert_array_equal(a, b)


# --- BI maps --------------------------------------------------------------------------


SMALL = GridSpec(24, 24)


def test_identical_models_give_zero_map():
    m = bi_map(ClassifierSpec("logistic"), ToyTaskSpec("moons", seed=0), "bootstrap", 4, SMALL,
               bootstrap_resample=False)
    np.testing.assert_array_equal(m.values, 0.0)


def test_reinit_needs_seeded_fit():
    with pytest.raises(ValueError):
        bi_map(ClassifierSpec("knn"), ToyTaskSpec("moons"), "reinit-ensemble", 4, SMALL)
    with pytest.raises(ValueError):
        bi_map(ClassifierSpec("logistic"), ToyTaskSpec("moons"), "resample-truth", 1, SMALL)


def test_map_shape_metadata_and_sign():
    m = bi_map(ClassifierSpec("knn"), ToyTaskSpec("circles", seed=1), "bootstrap", 6, GridSpec(10, 8))
    assert m.values.shape == (8, 10) and m.points().shape == (80, 2)
    assert np.all(m.values >= 0)
    assert m.metadata["pseudo_count"] == 1.0
    m2 = bi_map(ClassifierSpec("knn"), ToyTaskSpec("circles", seed=1), "bootstrap", 6, GridSpec(10, 8))
    np.testing.assert_array_equal(m.values, m2.values)


def test_reinit_members_differ_only_by_seed():
    task = ToyTaskSpec("moons", seed=0)
    clf = ClassifierSpec("tiny-mlp", {"epochs": 50})
    models = member_models(clf, task, "reinit-ensemble", 3)
    X = sample_toy_task(task).test.X
    assert not np.allclose(models[0].logits(X), models[1].logits(X))
    again = member_models(clf, task, "reinit-ensemble", 3)
    np.testing.assert_array_equal(models[2].logits(X), again[2].logits(X))


def _boundary_cells(diff):
    sign = diff > 0
    cells = np.zeros_like(sign)
    cells[:, 1:] |= sign[:, 1:] != sign[:, :-1]
    cells[:, :-1] |= sign[:, 1:] != sign[:, :-1]
    cells[1:, :] |= sign[1:, :] != sign[:-1, :]
    cells[:-1, :] |= sign[1:, :] != sign[:-1, :]
    return np.argwhere(cells)


@pytest.mark.parametrize("seed", range(5))
def test_bi_peaks_at_decision_boundary(seed):
    task = ToyTaskSpec("moons", seed=seed)
    clf = ClassifierSpec("logistic")
    m = bi_map(clf, task, "resample-truth", 64)
    assert np.all(m.values >= 0)
    # reference boundary: where the softmax of the mean ground-truth logit is uniform
    z = ensemble_mean_logits(ensemble_logits(member_models(clf, task, "resample-truth", 64), m.points()))
    boundary = _boundary_cells((z[:, 1] - z[:, 0]).reshape(m.values.shape))
    peak = np.array(np.unravel_index(np.argmax(m.values), m.values.shape))
    assert np.min(np.max(np.abs(boundary - peak), axis=1)) <= 2


def test_resample_truth_stabilizes():
    task = ToyTaskSpec("moons", seed=0)
    clf = ClassifierSpec("logistic")
    m32 = bi_map(clf, task, "resample-truth", 32)
    m64 = bi_map(clf, task, "resample-truth", 64)
    a, b = np.abs(m32.values).mean(), np.abs(m64.values).mean()
    assert abs(b - a) / b < 0.2


def test_linear_blobs_mirror_symmetry():
    # the task is symmetric under x0 -> -x0 with labels swapped; BI ignores class order
    task = ToyTaskSpec("linear-blobs", noise_scale=0.6, seed=0)
    models = member_models(ClassifierSpec("logistic"), task, "resample-truth", 64)
    probes = np.array([[0.3, 0.5], [0.8, -0.4], [1.5, 1.0]])
    mirror = probes * [-1, 1]
    z = ensemble_logits(models, np.vstack([probes, mirror])).values
    n = len(models)
    jack = []
    for i in range(n):
        b = bi_per_instance(LogitEnsembleSet(np.delete(z, i, axis=1)))
        jack.append(b[:3] - b[3:])
    jack = np.array(jack)
    full = bi_per_instance(ensemble_logits(models, np.vstack([probes, mirror])))
    diff = full[:3] - full[3:]
    se = np.sqrt((n - 1) / n * np.sum((jack - jack.mean(axis=0)) ** 2, axis=0))
    assert np.all(np.abs(diff) <= 3 * se + 1e-12)


def test_grid_axes_expand():
    xs, ys = grid_axes(np.array([[0.0, 0.0], [1.0, 2.0]]), GridSpec(5, 3, 0.5))
    assert xs[0] == -0.5 and xs[-1] == 1.5 and ys[0] == -1.0 and ys[-1] == 3.0


# --- drift benchmark ----------------------------------------------------------------------


MLP16 = ClassifierSpec("tiny-mlp")


@pytest.fixture(scope="module")
def no_drift_runs():
    return [drift_benchmark(drift_task(seed, drifted=False), MLP16.with_seed(seed)) for seed in range(20)]


def test_zero_drift_keeps_about_q(no_drift_runs):
    kept = [r.row(BI, 0.9).kept_fraction for r in no_drift_runs]
    assert abs(np.mean(kept) - 0.9) < 0.05


def test_q_one_keeps_everything_means_plain_accuracy(no_drift_runs):
    full = 0
    for r in no_drift_runs:
        row = r.row(BI, 1.0)
        if row.kept_fraction == 1.0:
            full += 1
            assert row.accuracy == r.test_accuracy
    assert full >= 10


def test_curves_have_both_measures(no_drift_runs):
    r = no_drift_runs[0]
    assert set(r.curves) == {"bregman-information", "confidence"}
    assert [row.quantile for row in r.curves[BI]] == [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def test_drift_benchmark_requires_drift_blobs():
    with pytest.raises(ValueError):
        drift_benchmark(ToyTaskSpec("moons"), MLP16)

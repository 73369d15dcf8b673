"""BI maps over the input plane and the synthetic drift benchmark.

Three ways of sampling a classifier's prediction at a point:

* ``resample-truth``: fresh training sets from the task (ground truth),
* ``bootstrap``: resamples of one training set, with replacement,
* ``reinit-ensemble``: refits on one training set with new init seeds.

Member ``i`` always draws from a stream keyed by ``(base_seed, i)`` so
the ensemble is identical however the fits are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..estimators import LogitEnsembleSet, bi_per_instance
from ..ood import BI, CONFIDENCE, CurveRow, discard_curve, labeled_predictions
from .classifiers import ClassifierSpec, fit_classifier
from .tasks import (
    BLOB_SEPARATION,
    Dataset,
    ToyTaskSpec,
    derive_seed,
    sample_toy_task,
    sample_validation,
    stream,
)

METHODS = ("resample-truth", "bootstrap", "reinit-ensemble")
_BOOTSTRAP_STREAM = 7

# Drift benchmark setting. The class-separation scale is the distance from a
# blob centre to the decision boundary (BLOB_SEPARATION / 2); the test set
# moves three of those perpendicular to the class axis, so drifted points
# stay roughly on the boundary line but leave the training support.
DRIFT_SCALE = BLOB_SEPARATION / 2
DRIFT_OFFSET = (0.0, 3.0 * DRIFT_SCALE)
DRIFT_NOISE = 0.7


@dataclass(frozen=True)
class GridSpec:
    nx: int = 60
    ny: int = 60
    expand: float = 0.3  # fraction of the data range added on every side


@dataclass(frozen=True)
class BiMap:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (ny, nx)
    method: str
    n_samples: int
    metadata: dict = field(default_factory=dict)

    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


def grid_axes(X: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = grid.expand * (hi - lo)
    return (np.linspace(lo[0] - pad[0], hi[0] + pad[0], grid.nx),
            np.linspace(lo[1] - pad[1], hi[1] + pad[1], grid.ny))


def _bootstrap(train: Dataset, seed: int, member: int) -> Dataset:
    rng = stream(seed, _BOOTSTRAP_STREAM, member)
    n = len(train)
    while True:
        idx = rng.integers(0, n, n)
        if np.unique(train.y[idx]).size > 1:
            return Dataset(train.X[idx], train.y[idx])


def member_models(classifier: ClassifierSpec, task: ToyTaskSpec, method: str, n_samples: int,
                  bootstrap_resample: bool = True) -> list:
    """Fitted models of an ensemble drawn by ``method``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if method == "reinit-ensemble" and not classifier.uses_init_seed:
        raise ValueError(f"reinit-ensemble needs a seeded fit; {classifier.kind} ignores init_seed")
    train = sample_toy_task(task).train
    models = []
    for i in range(n_samples):
        spec = classifier
        data = train
        if method == "resample-truth":
            data = sample_toy_task(replace(task, seed=derive_seed(task.seed, i))).train
            if classifier.uses_init_seed:
                spec = classifier.with_seed(derive_seed(classifier.init_seed, i))
        elif method == "bootstrap":
            if bootstrap_resample:
                data = _bootstrap(train, task.seed, i)
        else:
            spec = classifier.with_seed(derive_seed(classifier.init_seed, i))
        models.append(fit_classifier(spec, data))
    return models


def ensemble_logits(models, X) -> LogitEnsembleSet:
    return LogitEnsembleSet(np.stack([m.logits(X) for m in models], axis=1))


def bi_map(classifier: ClassifierSpec, task: ToyTaskSpec, method: str, n_samples: int = 64,
           grid: GridSpec = GridSpec(), bootstrap_resample: bool = True) -> BiMap:
    """Per-cell BI estimate over a lattice around the task's data."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    data = sample_toy_task(task)
    xs, ys = grid_axes(np.vstack([data.train.X, data.test.X]), grid)
    models = member_models(classifier, task, method, n_samples, bootstrap_resample)
    gx, gy = np.meshgrid(xs, ys)
    bis = bi_per_instance(ensemble_logits(models, np.column_stack([gx.ravel(), gy.ravel()])))
    meta = {"classifier": classifier.kind, "task": task.shape, "seed": task.seed}
    if "pseudo_count" in classifier.params:
        meta["pseudo_count"] = classifier.params["pseudo_count"]
    return BiMap(xs, ys, bis.reshape(gy.shape), method, n_samples, meta)


def drift_task(seed: int, drifted: bool = True, noise_scale: float = DRIFT_NOISE) -> ToyTaskSpec:
    offset = DRIFT_OFFSET if drifted else (0.0, 0.0)
    return ToyTaskSpec("drift-blobs", noise_scale=noise_scale, drift_offset=offset, seed=seed)


@dataclass(frozen=True)
class DriftBenchmarkResult:
    curves: dict  # measure -> list[CurveRow]
    test_accuracy: float
    val_bi: np.ndarray
    test_bi: np.ndarray

    def row(self, measure: str, q: float) -> CurveRow:
        for r in self.curves[measure]:
            if abs(r.quantile - q) < 1e-12:
                return r
        raise KeyError(q)


def drift_benchmark(task: ToyTaskSpec, classifier: ClassifierSpec,
                    ensemble_method: str = "reinit-ensemble", q_grid=(0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
                    n_members: int = 16, model_member: int = 0) -> DriftBenchmarkResult:
    """Discard curves on the (possibly drifted) test set for BI and confidence.

    Thresholds are fitted on an undrifted validation set of ``n_test``
    points. Predictions come from the single member ``model_member``;
    the ensemble only supplies the BI.
    """
    if task.shape != "drift-blobs":
        raise ValueError("the drift benchmark runs on drift-blobs tasks")
    models = member_models(classifier, task, ensemble_method, n_members)
    val = sample_validation(task)
    test = sample_toy_task(task).test
    val_set = ensemble_logits(models, val.X)
    test_set = ensemble_logits(models, test.X)
    curves = {}
    for measure in (BI, CONFIDENCE):
        val_pred = labeled_predictions(val_set, val.y, measure, model_member)
        test_pred = labeled_predictions(test_set, test.y, measure, model_member)
        curves[measure] = discard_curve(val_pred.uncertainty, test_pred, q_grid, measure)
    test_pred = labeled_predictions(test_set, test.y, BI, model_member)
    return DriftBenchmarkResult(
        curves,
        float(test_pred.correct.mean()),
        bi_per_instance(val_set),
        test_pred.uncertainty,
    )

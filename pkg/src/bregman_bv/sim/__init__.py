"""Toy tasks, small classifiers and BI experiments."""

from .classifiers import ClassifierSpec, fit_classifier
from .experiments import (
    DRIFT_OFFSET,
    BiMap,
    GridSpec,
    bi_map,
    drift_benchmark,
    drift_task,
    member_models,
)
from .tasks import BLOB_SEPARATION, Dataset, ToyDataset, ToyTaskSpec, sample_toy_task, sample_validation

__all__ = [
    "BLOB_SEPARATION", "DRIFT_OFFSET", "BiMap", "ClassifierSpec", "Dataset", "GridSpec", "ToyDataset",
    "ToyTaskSpec", "bi_map", "drift_benchmark", "drift_task", "fit_classifier", "member_models",
    "sample_toy_task", "sample_validation",
]

"""Uncertainty thresholds for selective classification and discard curves.

A threshold is fitted on in-domain validation uncertainties at a
retention level ``q`` and then applied to test instances. Two measures
are supported:

* ``"bregman-information"``: large values are uncertain, instances above
  the threshold are flagged OOD. The threshold is the nearest-rank
  q-quantile, the ceil(q*n)-th smallest validation value.
* ``"confidence"``: small values are uncertain, instances below the
  threshold are flagged OOD. The threshold is the ceil(q*n)-th largest
  validation confidence, so that ``q`` means the same retained fraction
  in both modes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError
from .estimators import LogitEnsembleSet, bi_per_instance, confidence_per_instance, selected_logits
from .generators import log_softmax

BI = "bregman-information"
CONFIDENCE = "confidence"
MEASURES = (BI, CONFIDENCE)
_DIRECTION = {BI: "reject-above", CONFIDENCE: "reject-below"}


class Decision(enum.Enum):
    KEPT = "Kept"
    OOD = "OOD"


@dataclass(frozen=True)
class ThresholdModel:
    measure_kind: str
    q: float
    threshold: float
    direction: str

    def __post_init__(self):
        if self.measure_kind not in MEASURES:
            raise ValueError(f"unknown measure {self.measure_kind!r}")
        if self.direction != _DIRECTION[self.measure_kind]:
            raise ValueError(f"{self.measure_kind} requires direction {_DIRECTION[self.measure_kind]}")

    def keep_mask(self, uncertainties) -> np.ndarray:
        u = np.asarray(uncertainties, dtype=float)
        if self.direction == "reject-above":
            return u <= self.threshold
        return u >= self.threshold

    def to_dict(self) -> dict:
        return {"measure_kind": self.measure_kind, "q": self.q,
                "threshold": self.threshold, "direction": self.direction}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdModel":
        return cls(d["measure_kind"], float(d["q"]), float(d["threshold"]), d["direction"])


def nearest_rank(q: float, n: int) -> int:
    """ceil(q*n) clipped to [1, n]; guards against q*n landing a hair above an integer."""
    return min(n, max(1, math.ceil(q * n - 1e-9)))


def fit_threshold(uncertainties, q: float, measure_kind: str = BI) -> ThresholdModel:
    u = np.asarray(uncertainties, dtype=float).reshape(-1)
    if u.size == 0:
        raise DimensionError("cannot fit a threshold on an empty vector")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if measure_kind not in MEASURES:
        raise ValueError(f"unknown measure {measure_kind!r}")
    if not np.all(np.isfinite(u)):
        raise DomainError("uncertainties must be finite")
    ranked = np.sort(u)
    r = nearest_rank(q, u.size)
    threshold = ranked[r - 1] if measure_kind == BI else ranked[u.size - r]
    return ThresholdModel(measure_kind, float(q), float(threshold), _DIRECTION[measure_kind])


def classify_with_threshold(model: ThresholdModel, uncertainty: float) -> Decision:
    """Values equal to the threshold are kept."""
    return Decision.KEPT if bool(model.keep_mask(uncertainty)) else Decision.OOD


@dataclass(frozen=True)
class LabeledPredictionSet:
    """Per-instance uncertainty, prediction, label and NLL of the true class."""

    uncertainty: np.ndarray
    predicted_class: np.ndarray
    true_class: np.ndarray
    nll_contribution: np.ndarray

    def __post_init__(self):
        arrays = [np.array(a) for a in (self.uncertainty, self.predicted_class,
                                        self.true_class, self.nll_contribution)]
        n = arrays[0].shape[0] if arrays[0].ndim == 1 else -1
        if n < 0 or any(a.shape != (n,) for a in arrays):
            raise DimensionError("all per-instance arrays must be 1-d with equal length")
        if np.any(arrays[3] < 0):
            raise DomainError("nll contributions must be nonnegative")
        for name, a in zip(("uncertainty", "predicted_class", "true_class", "nll_contribution"), arrays):
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.uncertainty.shape[0]

    @property
    def correct(self) -> np.ndarray:
        return self.predicted_class == self.true_class


class CurveRow(NamedTuple):
    quantile: float
    kept_fraction: float
    accuracy: float
    mean_nll: float


def discard_curve(val_uncertainties, test: LabeledPredictionSet, quantiles,
                  measure_kind: str = BI) -> list[CurveRow]:
    """Kept fraction, accuracy and mean NLL over kept test instances per q.

    Undefined metrics (nothing kept) are NaN; writers render them as NA.
    """
    if len(test) == 0:
        raise DimensionError("empty test set")
    rows = []
    for q in quantiles:
        model = fit_threshold(val_uncertainties, float(q), measure_kind)
        keep = model.keep_mask(test.uncertainty)
        n_kept = int(keep.sum())
        if n_kept:
            acc = float(test.correct[keep].mean())
            nll = float(test.nll_contribution[keep].mean())
        else:
            acc = nll = math.nan
        rows.append(CurveRow(float(q), n_kept / len(test), acc, nll))
    return rows


def uncertainty_scores(ens: LogitEnsembleSet, measure_kind: str = BI, reduce: int | str = 0) -> np.ndarray:
    """Ensemble BI per instance, or the classifier's top softmax probability."""
    if measure_kind == BI:
        return bi_per_instance(ens)
    if measure_kind == CONFIDENCE:
        return confidence_per_instance(ens, reduce)
    raise ValueError(f"unknown measure {measure_kind!r}")


def labeled_predictions(ens: LogitEnsembleSet, labels, measure_kind: str = BI,
                        reduce: int | str = 0) -> LabeledPredictionSet:
    """Predictions of a single classifier (member ``reduce`` or the mean) with uncertainties.

    The ensemble only supplies the uncertainty; predictions and NLL come
    from the selected classifier.
    """
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (ens.n_instances,):
        raise DimensionError("need one label per instance")
    if np.any((labels < 0) | (labels >= ens.n_classes)):
        raise DomainError(f"labels must lie in [0, {ens.n_classes})")
    logp = log_softmax(selected_logits(ens, reduce))
    return LabeledPredictionSet(
        uncertainty_scores(ens, measure_kind, reduce),
        np.argmax(logp, axis=-1),
        labels,
        -logp[np.arange(labels.size), labels],
    )

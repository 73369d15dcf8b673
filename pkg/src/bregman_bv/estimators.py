"""Sample-based Bregman Information and per-instance ensemble statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .generators import clamp_nonnegative, logsumexp, softmax


@dataclass(frozen=True)
class LogitEnsembleSet:
    """Logits of ``m`` ensemble members for ``n`` instances and ``k`` classes.

    ``values`` has shape ``(n_instances, n_members, n_classes)``.
    ``instance_ids`` defaults to ``0..n-1``.
    """

    values: np.ndarray
    instance_ids: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3:
            raise DimensionError(f"expected (instances, members, classes), got {values.shape}")
        n, m, k = values.shape
        if n == 0:
            raise DimensionError("empty logit set")
        if m < 1:
            raise DimensionError("need at least one member")
        if k < 2:
            raise DimensionError("need at least two classes")
        if not np.all(np.isfinite(values)):
            raise DomainError("logits must be finite")
        ids = np.arange(n) if self.instance_ids is None else np.array(self.instance_ids, dtype=int)
        if ids.shape != (n,):
            raise DimensionError("instance_ids must have one entry per instance")
        values.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "instance_ids", ids)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_members(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.values.shape[2]


def _lse_gap(logits: np.ndarray) -> np.ndarray:
    # mean_i LSE(z_i) - LSE(mean_i z_i), over the member axis (-2)
    return logsumexp(logits).mean(axis=-1) - logsumexp(logits.mean(axis=-2))


def bi_lse_estimate(logits) -> float:
    """Plug-in LogSumExp Bregman Information of ``m`` member logit vectors.

    (1/m) sum LSE(z_i) - LSE((1/m) sum z_i). Equals the exact BI of the
    empirical distribution; biased low for the population quantity.
    """
    z = np.asarray(logits, dtype=float)
    if z.ndim != 2 or z.shape[0] < 1:
        raise DimensionError("logits must be a (members, classes) array")
    if not np.all(np.isfinite(z)):
        raise DomainError("logits must be finite")
    return clamp_nonnegative(float(_lse_gap(z)), float(np.max(np.abs(z))))


def bi_per_instance(ens: LogitEnsembleSet) -> np.ndarray:
    """BI estimate for every instance, in instance order."""
    gaps = _lse_gap(ens.values)
    scale = np.maximum(1.0, np.abs(ens.values).max(axis=(1, 2)))
    return np.array([clamp_nonnegative(g, s) for g, s in zip(gaps, scale)])


def ensemble_mean_logits(ens: LogitEnsembleSet) -> np.ndarray:
    return ens.values.mean(axis=1)


def selected_logits(ens: LogitEnsembleSet, reduce: int | str = 0) -> np.ndarray:
    """Logits of one member (by index) or of the member mean (``"mean"``)."""
    if isinstance(reduce, str):
        if reduce != "mean":
            raise ValueError(f"reduce must be a member index or 'mean', got {reduce!r}")
        return ensemble_mean_logits(ens)
    if not 0 <= reduce < ens.n_members:
        raise IndexError(f"member index {reduce} out of range for {ens.n_members} members")
    return ens.values[:, reduce, :]


def confidence_per_instance(ens: LogitEnsembleSet, reduce: int | str = 0) -> np.ndarray:
    """Largest softmax probability per instance.

    The default uses member 0 as the single classifier; ``"mean"`` uses
    the logit-space ensemble mean.
    """
    return softmax(selected_logits(ens, reduce)).max(axis=-1)


def predicted_class(ens: LogitEnsembleSet, reduce: int | str = 0) -> np.ndarray:
    # np.argmax breaks ties toward the lowest index
    return np.argmax(selected_logits(ens, reduce), axis=-1)

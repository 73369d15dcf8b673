"""Two-dimensional toy classification tasks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHAPES = ("moons", "circles", "linear-blobs", "drift-blobs")
#: Distance between the two blob centres, the class-separation scale.
BLOB_SEPARATION = 2.0

# independent RNG streams per purpose
_TRAIN, _TEST, _VALIDATION = 0, 1, 2


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(base, *keys)``."""
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1, np.uint64)[0])


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *map(int, keys)])


@dataclass(frozen=True)
class ToyTaskSpec:
    shape: str = "moons"
    n_train: int = 300
    n_test: int = 200
    noise_scale: float = 0.2
    drift_offset: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown task shape {self.shape!r}; choose from {SHAPES}")
        if self.n_train < 10:
            raise ValueError("n_train must be >= 10")
        if self.n_test < 1:
            raise ValueError("n_test must be >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        object.__setattr__(self, "drift_offset", tuple(float(v) for v in self.drift_offset))
        if len(self.drift_offset) != 2:
            raise ValueError("drift_offset must be a 2-vector")


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class ToyDataset:
    train: Dataset
    test: Dataset


def sample_points(shape: str, n: int, noise_scale: float, rng: np.random.Generator) -> Dataset:
    """``n`` labelled points, classes balanced up to one instance."""
    n0 = n // 2
    n1 = n - n0
    if shape == "moons":
        t0 = rng.uniform(0.0, np.pi, n0)
        t1 = rng.uniform(0.0, np.pi, n1)
        x0 = np.column_stack([np.cos(t0), np.sin(t0)])
        x1 = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
        X = np.vstack([x0, x1]) + noise_scale * rng.standard_normal((n, 2))
    elif shape == "circles":
        t = rng.uniform(0.0, 2.0 * np.pi, n)
        radius = np.concatenate([np.ones(n0), np.full(n1, 0.5)])
        X = radius[:, None] * np.column_stack([np.cos(t), np.sin(t)])
        X = X + noise_scale * rng.standard_normal((n, 2))
    else:
        centers = np.array([[-BLOB_SEPARATION / 2, 0.0], [BLOB_SEPARATION / 2, 0.0]])
        labels = np.concatenate([np.zeros(n0, int), np.ones(n1, int)])
        X = centers[labels] + noise_scale * rng.standard_normal((n, 2))
    y = np.concatenate([np.zeros(n0, int), np.ones(n1, int)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order])


def sample_toy_task(spec: ToyTaskSpec) -> ToyDataset:
    """Train and test sets; for drift-blobs only the test set is shifted."""
    train = sample_points(spec.shape, spec.n_train, spec.noise_scale, stream(spec.seed, _TRAIN))
    test = sample_points(spec.shape, spec.n_test, spec.noise_scale, stream(spec.seed, _TEST))
    if spec.shape == "drift-blobs":
        test = Dataset(test.X + np.asarray(spec.drift_offset), test.y)
    return ToyDataset(train, test)


def sample_validation(spec: ToyTaskSpec, n: int | None = None) -> Dataset:
    """Held-out in-domain (never drifted) data from an independent stream."""
    n = spec.n_test if n is None else n
    return sample_points(spec.shape, n, spec.noise_scale, stream(spec.seed, _VALIDATION))

"""
In-memory datasets for the federated simulation.

A ``Dataset`` holds a feature matrix scaled to [0, 1] (synthetic data is
unscaled Gaussian features) together with integer class labels. Client shards
are index arrays into a shared dataset; minibatches are drawn from a shard
uniformly with replacement.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionError, ParameterError, StateError
from core.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus labels.

    Attributes:
        features: Array of shape (num_samples, feature_dim), float64
        labels: Array of shape (num_samples,), integer class ids in [0, num_classes)
        num_classes: Number of classes C
        image_shape: (rows, cols) of the source images, when the data came from IDX files
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    image_shape: Optional[Tuple[int, int]] = field(default=None, compare=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DimensionError(f"Features must be a matrix, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DimensionError(f"Label count {labels.shape} does not match feature rows {features.shape[0]}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ParameterError(f"Labels must lie in [0, {self.num_classes})")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def class_indices(self, label: int) -> np.ndarray:
        """Indices of all samples with the given label, in ascending order."""
        return np.flatnonzero(self.labels == label)

    def subset(self, indices: Sequence[int]) -> "Batch":
        indices = np.asarray(indices, dtype=np.int64)
        return Batch(self.features[indices], self.labels[indices])


@dataclass(frozen=True)
class Batch:
    """A view of selected samples: features (b, dim) and labels (b,)."""

    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]


def sample_minibatch(ds: Dataset, indices: np.ndarray, batch: int, rng: RngStream) -> Batch:
    """Draw ``batch`` samples uniformly with replacement from a client shard.

    Raises:
        StateError: If the shard is empty
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise StateError("Cannot sample a minibatch from an empty shard")
    if batch < 1:
        raise ParameterError(f"Batch size must be at least 1, got {batch}")
    picks = rng.generator.integers(0, indices.size, size=batch)
    return ds.subset(indices[picks])


def synthetic_two_gaussians(n_per_class: int,
                            feature_dim: int,
                            separation: float,
                            rng: RngStream) -> Dataset:
    """Two isotropic unit-variance Gaussian classes with means at +-(separation/2) e_1.

    Class 0 is centred at -(separation/2) e_1 and class 1 at +(separation/2) e_1.
    Samples are stored class 0 first, then class 1.
    """
    if n_per_class < 1:
        raise ParameterError(f"n_per_class must be at least 1, got {n_per_class}")
    if feature_dim < 1:
        raise ParameterError(f"feature_dim must be at least 1, got {feature_dim}")
    generator = rng.generator
    offset = np.zeros(feature_dim)
    offset[0] = separation / 2.0
    noise = generator.standard_normal((2 * n_per_class, feature_dim))
    features = noise
    features[:n_per_class] -= offset
    features[n_per_class:] += offset
    labels = np.repeat(np.arange(2), n_per_class)
    logger.debug(f"Generated two-Gaussian dataset: {2 * n_per_class} samples, dim={feature_dim}, "
                 f"separation={separation}")
    return Dataset(features, labels, num_classes=2)

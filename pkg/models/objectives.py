"""
Local objectives f_i seen by simulated clients.

The federated algorithms only need stochastic and full-shard losses and
gradients at a flat parameter vector, so clients hold a ``LocalObjective``:

- ``ShardObjective``: a classifier evaluated on the client's shard of a dataset
- ``QuadraticObjective``: f(w) = 1/2 ||w - a||^2, the closed-form toy client used
  for oracle and convergence checks
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from core.exceptions import StateError
from core.rng import RngStream
from data.datasets import Batch, Dataset, sample_minibatch
from .classifiers import Classifier, LossGrad, estimate_smoothness


class LocalObjective(ABC):
    """A client's loss function."""

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @property
    @abstractmethod
    def is_convex(self) -> bool:
        pass

    @property
    @abstractmethod
    def num_samples(self) -> int:
        pass

    @abstractmethod
    def stochastic_loss_grad(self, w: np.ndarray, rng: RngStream, batch: int) -> LossGrad:
        """Loss and gradient on a fresh minibatch drawn from ``rng``."""
        pass

    @abstractmethod
    def stochastic_loss(self, w: np.ndarray, rng: RngStream, batch: int) -> float:
        pass

    @abstractmethod
    def full_loss(self, w: np.ndarray) -> float:
        pass

    @abstractmethod
    def full_gradient(self, w: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def smoothness(self) -> float:
        """An upper bound on the gradient Lipschitz constant."""
        pass


class ShardObjective(LocalObjective):
    """Mean cross-entropy of a classifier over one client shard.

    Args:
        classifier: Architecture to evaluate
        dataset: Shared dataset
        indices: The client's sample indices into ``dataset``
    """

    def __init__(self, classifier: Classifier, dataset: Dataset, indices: np.ndarray):
        self.classifier = classifier
        self.dataset = dataset
        self.indices = np.asarray(indices, dtype=np.int64)
        if self.indices.size == 0:
            raise StateError("Client shard is empty")
        self._shard: Optional[Batch] = None
        self._smoothness: Optional[float] = None

    @property
    def shard(self) -> Batch:
        if self._shard is None:
            self._shard = self.dataset.subset(self.indices)
        return self._shard

    @property
    def dim(self) -> int:
        return self.classifier.shape.param_count

    @property
    def is_convex(self) -> bool:
        return self.classifier.is_convex

    @property
    def num_samples(self) -> int:
        return int(self.indices.size)

    def stochastic_loss_grad(self, w, rng, batch):
        return self.classifier.loss_grad(w, sample_minibatch(self.dataset, self.indices, batch, rng))

    def stochastic_loss(self, w, rng, batch):
        return self.classifier.loss(w, sample_minibatch(self.dataset, self.indices, batch, rng))

    def full_loss(self, w):
        return self.classifier.loss(w, self.shard)

    def full_gradient(self, w):
        return self.classifier.loss_grad(w, self.shard).grad

    def accuracy(self, w) -> float:
        predictions = self.classifier.predict(w, self.shard.features)
        return float(np.mean(predictions == self.shard.labels))

    def smoothness(self):
        if self._smoothness is None:
            self._smoothness = estimate_smoothness(self.shard.features)
        return self._smoothness


class QuadraticObjective(LocalObjective):
    """f(w) = 1/2 ||w - center||^2 with optional Gaussian gradient noise.

    With ``noise_std == 0`` every "stochastic" evaluation is exact, which is
    what the scalar-oracle and unbiasedness checks rely on.
    """

    def __init__(self, center, noise_std: float = 0.0, num_samples: int = 1):
        self.center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        self.noise_std = float(noise_std)
        self._num_samples = num_samples

    @property
    def dim(self):
        return self.center.size

    @property
    def is_convex(self):
        return True

    @property
    def num_samples(self):
        return self._num_samples

    def full_loss(self, w):
        diff = np.asarray(w, dtype=np.float64) - self.center
        return 0.5 * float(diff @ diff)

    def full_gradient(self, w):
        return np.asarray(w, dtype=np.float64) - self.center

    def stochastic_loss_grad(self, w, rng, batch):
        grad = self.full_gradient(w)
        if self.noise_std > 0:
            grad = grad + self.noise_std * rng.generator.standard_normal(grad.size) / np.sqrt(batch)
        return LossGrad(self.full_loss(w), grad)

    def stochastic_loss(self, w, rng, batch):
        return self.full_loss(w)

    def smoothness(self):
        return 1.0

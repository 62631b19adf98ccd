"""
Differentiable classifiers with analytic gradients.

Two architectures share one flat-parameter representation:

- linear softmax regression: logits = W x + b
- one-hidden-layer ReLU network: logits = W2 relu(W1 x + b1) + b2

Parameters are flattened weights-then-bias per layer, weights row-major.
The loss is mean cross-entropy over a batch.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special

from core.exceptions import DimensionError, StateError
from core.rng import RngStream
from data.datasets import Batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelShape:
    """Architecture descriptor.

    Attributes:
        input_dim: Feature dimension
        num_classes: Number of output classes C
        hidden_dim: Width of the ReLU layer, or None for the linear model
    """

    input_dim: int
    num_classes: int
    hidden_dim: Optional[int] = None

    @property
    def is_linear(self) -> bool:
        return self.hidden_dim is None

    @property
    def param_count(self) -> int:
        if self.is_linear:
            return self.num_classes * (self.input_dim + 1)
        return (self.hidden_dim * (self.input_dim + 1)
                + self.num_classes * (self.hidden_dim + 1))

    def header(self) -> str:
        hidden = "none" if self.hidden_dim is None else str(self.hidden_dim)
        return f"input_dim={self.input_dim} hidden_dim={hidden} num_classes={self.num_classes}"

    @classmethod
    def from_header(cls, line: str) -> "ModelShape":
        fields = dict(item.split("=", 1) for item in line.split())
        hidden = fields["hidden_dim"]
        return cls(int(fields["input_dim"]), int(fields["num_classes"]),
                   None if hidden == "none" else int(hidden))


@dataclass(frozen=True)
class ModelParams:
    """Flat parameter vector with its architecture."""

    flat: np.ndarray
    shape: ModelShape

    def __post_init__(self):
        flat = np.asarray(self.flat, dtype=np.float64)
        if flat.ndim != 1 or flat.size != self.shape.param_count:
            raise DimensionError(f"Parameter vector of length {flat.size} does not fit {self.shape}")
        object.__setattr__(self, "flat", flat)

    def scaled(self, factor: float) -> "ModelParams":
        return ModelParams(self.flat * factor, self.shape)


@dataclass(frozen=True)
class LossGrad:
    """Loss value and its gradient with respect to the flat parameters."""

    loss: float
    grad: np.ndarray


class Classifier(ABC):
    """Base class for the supported architectures."""

    def __init__(self, shape: ModelShape):
        self.shape = shape

    @property
    @abstractmethod
    def is_convex(self) -> bool:
        """Whether the batch loss is convex in the parameters."""
        pass

    @abstractmethod
    def logits(self, flat: np.ndarray, features: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def loss_grad(self, flat: np.ndarray, batch: Batch) -> LossGrad:
        pass

    @abstractmethod
    def init_params(self, rng: RngStream) -> np.ndarray:
        pass

    def _check_batch(self, batch: Batch):
        if batch.features.ndim != 2 or batch.features.shape[1] != self.shape.input_dim:
            raise DimensionError(f"Batch features have shape {batch.features.shape}, "
                                 f"model expects dimension {self.shape.input_dim}")
        if len(batch) == 0:
            raise StateError("Empty batch")

    def loss(self, flat: np.ndarray, batch: Batch) -> float:
        self._check_batch(batch)
        log_probs = special.log_softmax(self.logits(flat, batch.features), axis=1)
        return float(-log_probs[np.arange(len(batch)), batch.labels].mean())

    def predict(self, flat: np.ndarray, features: np.ndarray) -> np.ndarray:
        """Argmax class per row; ties go to the lowest class id."""
        return np.argmax(self.logits(flat, features), axis=1)

    def _softmax_residual(self, logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
        """Mean cross-entropy and d(loss)/d(logits)."""
        n = labels.shape[0]
        log_probs = special.log_softmax(logits, axis=1)
        loss = float(-log_probs[np.arange(n), labels].mean())
        residual = np.exp(log_probs)
        residual[np.arange(n), labels] -= 1.0
        return loss, residual / n


class LinearSoftmax(Classifier):
    """Multinomial logistic regression; initialised at zero."""

    @property
    def is_convex(self) -> bool:
        return True

    def _unpack(self, flat: np.ndarray):
        c, d = self.shape.num_classes, self.shape.input_dim
        return flat[:c * d].reshape(c, d), flat[c * d:]

    def logits(self, flat, features):
        weights, bias = self._unpack(flat)
        return features @ weights.T + bias

    def loss_grad(self, flat, batch):
        self._check_batch(batch)
        loss, residual = self._softmax_residual(self.logits(flat, batch.features), batch.labels)
        grad_w = residual.T @ batch.features
        grad_b = residual.sum(axis=0)
        return LossGrad(loss, np.concatenate([grad_w.ravel(), grad_b]))

    def init_params(self, rng):
        return np.zeros(self.shape.param_count)


class MLPClassifier(Classifier):
    """One hidden ReLU layer. The ReLU subgradient at zero is taken as zero."""

    @property
    def is_convex(self) -> bool:
        return False

    def _unpack(self, flat):
        d, h, c = self.shape.input_dim, self.shape.hidden_dim, self.shape.num_classes
        cursor = 0
        w1 = flat[cursor:cursor + h * d].reshape(h, d)
        cursor += h * d
        b1 = flat[cursor:cursor + h]
        cursor += h
        w2 = flat[cursor:cursor + c * h].reshape(c, h)
        cursor += c * h
        b2 = flat[cursor:cursor + c]
        return w1, b1, w2, b2

    def logits(self, flat, features):
        w1, b1, w2, b2 = self._unpack(flat)
        hidden = np.maximum(features @ w1.T + b1, 0.0)
        return hidden @ w2.T + b2

    def loss_grad(self, flat, batch):
        self._check_batch(batch)
        w1, b1, w2, b2 = self._unpack(flat)
        pre = batch.features @ w1.T + b1
        hidden = np.maximum(pre, 0.0)
        loss, residual = self._softmax_residual(hidden @ w2.T + b2, batch.labels)
        grad_w2 = residual.T @ hidden
        grad_b2 = residual.sum(axis=0)
        back = (residual @ w2) * (pre > 0)
        grad_w1 = back.T @ batch.features
        grad_b1 = back.sum(axis=0)
        return LossGrad(loss, np.concatenate([grad_w1.ravel(), grad_b1, grad_w2.ravel(), grad_b2]))

    def init_params(self, rng):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases."""
        d, h, c = self.shape.input_dim, self.shape.hidden_dim, self.shape.num_classes
        generator = rng.generator
        bound1 = 1.0 / np.sqrt(d)
        bound2 = 1.0 / np.sqrt(h)
        w1 = generator.uniform(-bound1, bound1, size=h * d)
        w2 = generator.uniform(-bound2, bound2, size=c * h)
        return np.concatenate([w1, np.zeros(h), w2, np.zeros(c)])


def classifier_for(shape: ModelShape) -> Classifier:
    """Return the classifier implementing ``shape``."""
    if shape.is_linear:
        return LinearSoftmax(shape)
    return MLPClassifier(shape)


def forward_loss(p: ModelParams, batch: Batch) -> float:
    """Mean cross-entropy of ``p`` on ``batch``."""
    return classifier_for(p.shape).loss(p.flat, batch)


def loss_grad(p: ModelParams, batch: Batch) -> LossGrad:
    """Mean cross-entropy and its analytic gradient."""
    return classifier_for(p.shape).loss_grad(p.flat, batch)


def full_gradient(p: ModelParams, shard: Batch) -> np.ndarray:
    """Exact mean gradient over an entire client shard.

    Raises:
        StateError: If the shard is empty
    """
    if len(shard) == 0:
        raise StateError("Cannot compute the gradient of an empty shard")
    return loss_grad(p, shard).grad


def accuracy(p: ModelParams, data: Batch) -> float:
    """Fraction of samples whose argmax logit equals the label.

    Raises:
        StateError: If the evaluation set is empty
    """
    if len(data) == 0:
        raise StateError("Cannot evaluate accuracy on an empty set")
    predictions = classifier_for(p.shape).predict(p.flat, data.features)
    return float(np.mean(predictions == data.labels))


def estimate_smoothness(features: np.ndarray) -> float:
    """Smoothness bound for mean cross-entropy of a linear model.

    The softmax Hessian is bounded by 1/2 times the largest eigenvalue of the
    bias-augmented second-moment matrix of the features.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        raise StateError("Cannot estimate smoothness from an empty feature matrix")
    augmented = np.hstack([features, np.ones((features.shape[0], 1))])
    gram = augmented.T @ augmented / features.shape[0]
    return 0.5 * float(np.linalg.eigvalsh(gram)[-1])

"""
Dense numerical utilities shared by every module.

Vectors are one-dimensional float64 numpy arrays; matrices are two-dimensional
float64 arrays in row-major order. All functions are pure.
"""

from typing import Callable

import numpy as np
from scipy import special

from .exceptions import DimensionError, InvariantViolation, ParameterError

DenseVector = np.ndarray
DenseMatrix = np.ndarray


def as_vector(values) -> DenseVector:
    """Return ``values`` as a one-dimensional float64 array."""
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionError(f"Expected a vector, got array with shape {vector.shape}")
    return vector


def _check_same_length(a: DenseVector, b: DenseVector):
    if a.shape != b.shape:
        raise DimensionError(f"Length mismatch: {a.shape[0] if a.ndim else a.shape} vs "
                             f"{b.shape[0] if b.ndim else b.shape}")


def dot(a: DenseVector, b: DenseVector) -> float:
    """Inner product of two equal-length vectors."""
    a = as_vector(a)
    b = as_vector(b)
    _check_same_length(a, b)
    return float(np.dot(a, b))


def axpy(alpha: float, x: DenseVector, y: DenseVector) -> DenseVector:
    """Return ``alpha * x + y`` as a new vector."""
    x = as_vector(x)
    y = as_vector(y)
    _check_same_length(x, y)
    return alpha * x + y


def l2_norm(x: DenseVector) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(as_vector(x)))


def stable_softmax(logits: DenseVector) -> DenseVector:
    """Softmax with max-subtraction, safe for large logits.

    Raises:
        DimensionError: If ``logits`` is empty
    """
    logits = as_vector(logits)
    if logits.size == 0:
        raise DimensionError("softmax of an empty vector")
    return special.softmax(logits)


def finite_difference_gradient(f: Callable[[DenseVector], float],
                               x: DenseVector,
                               h: float = 1e-5) -> DenseVector:
    """Central-difference gradient of a scalar function.

    Args:
        f: Scalar-valued function of a vector
        x: Point at which to differentiate
        h: Step size, must be positive

    Returns:
        Vector of (f(x + h e_k) - f(x - h e_k)) / 2h for every coordinate k
    """
    if h <= 0:
        raise ParameterError(f"Finite-difference step must be positive, got {h}")
    x = as_vector(x).copy()
    grad = np.zeros_like(x)
    for k in range(x.size):
        original = x[k]
        x[k] = original + h
        forward = f(x)
        x[k] = original - h
        backward = f(x)
        x[k] = original
        grad[k] = (forward - backward) / (2.0 * h)
    return grad


def require_finite(x: DenseVector, what: str = "vector") -> DenseVector:
    """Raise if ``x`` contains NaN or infinity, otherwise return it."""
    if not np.all(np.isfinite(x)):
        raise InvariantViolation(f"Non-finite entries in {what}")
    return x

"""
Feasible-set projections and the sampling primitives of the training loop.

The dual variable lives on the probability simplex; model parameters live in an
origin-centred L2 ball. Client sampling, uniform subset sampling and snapshot
index sampling all draw from caller-supplied ``RngStream`` objects.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import DimensionError, InvariantViolation, ParameterError
from .numerics import DenseVector, as_vector, require_finite
from .rng import RngStream

# Sum tolerance below which a non-negative vector is treated as already on the simplex.
_SIMPLEX_EXACT_TOL = 1e-12
SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class SimplexPoint:
    """A point of the probability simplex (the dual variable)."""

    weights: DenseVector

    def __post_init__(self):
        weights = as_vector(self.weights)
        if weights.size == 0:
            raise DimensionError("Simplex point must be non-empty")
        require_finite(weights, "simplex point")
        if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > SIMPLEX_TOL:
            raise InvariantViolation(f"Not a simplex point: sum={weights.sum()!r}, min={weights.min()!r}")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, n: int) -> "SimplexPoint":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size

    def __eq__(self, other) -> bool:
        return isinstance(other, SimplexPoint) and np.array_equal(self.weights, other.weights)

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in self.weights)


@dataclass(frozen=True)
class BallConstraint:
    """Origin-centred L2 ball; its diameter is ``2 * radius``."""

    radius: float = 1e6

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ParameterError(f"Ball radius must be finite and positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


def project_simplex(x: DenseVector) -> SimplexPoint:
    """Euclidean projection onto the unit simplex (sort-then-threshold).

    Feasible inputs are returned unchanged, which makes the projection exactly
    idempotent.
    """
    x = as_vector(x)
    if x.size == 0:
        raise DimensionError("Cannot project an empty vector onto the simplex")
    require_finite(x, "simplex projection input")
    if np.all(x >= 0) and abs(float(x.sum()) - 1.0) <= _SIMPLEX_EXACT_TOL:
        return SimplexPoint(x.copy())

    u = np.sort(x)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, x.size + 1)
    positive = u - cumulative / ranks > 0
    rho = int(np.nonzero(positive)[0][-1])
    theta = cumulative[rho] / (rho + 1)
    return SimplexPoint(np.maximum(x - theta, 0.0))


def project_ball(x: DenseVector, constraint: BallConstraint) -> DenseVector:
    """Project onto the L2 ball: interior points pass through, others are rescaled."""
    x = as_vector(x)
    require_finite(x, "ball projection input")
    norm = float(np.linalg.norm(x))
    # The tolerance keeps already-projected points fixed despite rounding in the norm.
    if norm <= constraint.radius * (1.0 + 1e-12):
        return x
    return x * (constraint.radius / norm)


def sample_participants(lam: SimplexPoint, m: int, rng: RngStream) -> Tuple[int, ...]:
    """Draw ``m`` clients independently with replacement, client i with probability lam_i."""
    if m < 1:
        raise ParameterError(f"Participant count must be at least 1, got {m}")
    weights = lam.weights
    total = float(weights.sum())
    if total <= 0:
        raise InvariantViolation("Dual variable has no probability mass")
    draws = rng.generator.choice(weights.size, size=m, replace=True, p=weights / total)
    return tuple(int(i) for i in draws)


def sample_uniform_subset(n: int, m: int, rng: RngStream) -> Tuple[int, ...]:
    """Uniformly random size-``m`` subset of ``range(n)``, returned in ascending order."""
    if not 1 <= m <= n:
        raise ParameterError(f"Subset size must satisfy 1 <= m <= n, got m={m}, n={n}")
    chosen = rng.generator.choice(n, size=m, replace=False)
    return tuple(sorted(int(i) for i in chosen))


def sample_snapshot_index(s: int, tau: int, rng: RngStream) -> int:
    """Uniform snapshot iteration in [s*tau + 1, (s+1)*tau]."""
    if tau < 1:
        raise ParameterError(f"tau must be at least 1, got {tau}")
    return int(rng.generator.integers(s * tau + 1, (s + 1) * tau, endpoint=True))

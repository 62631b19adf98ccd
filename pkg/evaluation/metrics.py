"""
Per-round fairness metrics.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import StateError
from models.objectives import LocalObjective

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsRow:
    """Test accuracy of the global model across clients after one round.

    Attributes:
        round: Rounds completed (0 = initial model)
        avg_acc: Mean per-client test accuracy
        worst_acc: Minimum per-client test accuracy
        std_acc: Population standard deviation of the per-client accuracies
        lam: Dual variable weights after the round
        cumulative_energy: Joules spent by participants so far
        per_client_acc: The per-client accuracies themselves
    """

    round: int
    avg_acc: float
    worst_acc: float
    std_acc: float
    lam: Tuple[float, ...] = ()
    cumulative_energy: float = 0.0
    per_client_acc: Tuple[float, ...] = field(default=(), compare=False)

    @classmethod
    def from_accuracies(cls, round_index: int, per_client_acc: Sequence[float],
                        lam: Sequence[float] = (), cumulative_energy: float = 0.0) -> "MetricsRow":
        avg, worst, std = aggregate_metrics(per_client_acc)
        return cls(round_index, avg, worst, std, tuple(float(x) for x in lam),
                   float(cumulative_energy), tuple(float(a) for a in per_client_acc))


def aggregate_metrics(per_client_acc: Sequence[float]) -> Tuple[float, float, float]:
    """(mean, min, population std) of per-client accuracies."""
    values = np.asarray(per_client_acc, dtype=np.float64)
    if values.size == 0:
        raise StateError("No per-client accuracies to aggregate")
    return float(values.mean()), float(values.min()), float(values.std(ddof=0))


def rounds_to_target(history: Sequence[MetricsRow], target_worst_acc: float) -> Optional[int]:
    """First round whose worst-case accuracy reaches the target, or None if never reached."""
    for row in history:
        if row.worst_acc >= target_worst_acc:
            return row.round
    return None


def weighted_average_loss(objectives: Sequence[LocalObjective], w: np.ndarray) -> float:
    """f(w) = sum_i (d_i / d) f_i(w), weights proportional to shard sizes."""
    if len(objectives) == 0:
        raise StateError("Empty fleet")
    sizes = np.array([obj.num_samples for obj in objectives], dtype=np.float64)
    losses = np.array([obj.full_loss(w) for obj in objectives])
    return float(sizes @ losses / sizes.sum())

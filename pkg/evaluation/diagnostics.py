"""
Heterogeneity and optimality diagnostics.

- ``gamma_dissimilarity``: max_i sum_j p_j ||grad f_i(w) - grad f_j(w)||^2 at a given (w, p)
- ``duality_gap``: max_i f_i(w) minus min_w' sum_i lambda_i f_i(w'), convex objectives only
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from core.exceptions import StateError, UnsupportedConfigurationError
from core.geometry import BallConstraint, SimplexPoint, project_ball
from models.objectives import LocalObjective

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DualityGapEstimate:
    """Primal and dual values at a candidate pair and their difference."""

    gap: float
    primal_value: float
    dual_value: float
    oracle_steps_used: int = 0


def _gradients(objectives: Sequence[LocalObjective], w: np.ndarray) -> np.ndarray:
    if len(objectives) == 0:
        raise StateError("Empty fleet")
    return np.vstack([obj.full_gradient(w) for obj in objectives])


def gamma_dissimilarity(objectives: Sequence[LocalObjective], w: np.ndarray, p: SimplexPoint) -> float:
    """Pointwise gradient dissimilarity of the fleet at (w, p)."""
    grads = _gradients(objectives, w)
    sq_norms = np.einsum("ij,ij->i", grads, grads)
    # ||g_i - g_j||^2 for every pair, clipped at 0 against cancellation.
    pairwise = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * grads @ grads.T, 0.0)
    return float((pairwise @ p.weights).max())


def gamma_dissimilarity_sweep(objectives: Sequence[LocalObjective], ws: Sequence[np.ndarray],
                              p: SimplexPoint) -> float:
    """Largest pointwise dissimilarity over a grid of models."""
    if len(ws) == 0:
        raise StateError("Empty model grid")
    return max(gamma_dissimilarity(objectives, w, p) for w in ws)


def duality_gap(w: np.ndarray, lam: SimplexPoint, objectives: Sequence[LocalObjective],
                oracle_steps: int = 2000, oracle_lr: Optional[float] = None,
                ball: Optional[BallConstraint] = None, tol: float = 1e-10) -> DualityGapEstimate:
    """Duality gap of (w, lambda) for convex client objectives.

    The primal value is the largest client loss at w. The dual value is found by
    full-batch projected gradient descent on sum_i lambda_i f_i starting from w,
    with step ``oracle_lr`` (default 1 / max_i L_i). A step that would increase
    the objective is retried at half the rate, so the oracle sequence never
    increases; it stops once a step decreases the objective by less than ``tol``.

    Raises:
        UnsupportedConfigurationError: If any objective is non-convex
    """
    if len(objectives) == 0:
        raise StateError("Empty fleet")
    if not all(obj.is_convex for obj in objectives):
        raise UnsupportedConfigurationError("Duality gap certification requires convex client objectives")
    ball = ball or BallConstraint()
    weights = lam.weights

    def weighted(v):
        return float(sum(weight * obj.full_loss(v) for weight, obj in zip(weights, objectives) if weight > 0))

    def weighted_grad(v):
        grad = np.zeros_like(v)
        for weight, obj in zip(weights, objectives):
            if weight > 0:
                grad += weight * obj.full_gradient(v)
        return grad

    w = np.asarray(w, dtype=np.float64)
    primal = max(obj.full_loss(w) for obj in objectives)
    lr = oracle_lr if oracle_lr is not None else 1.0 / max(obj.smoothness() for obj in objectives)

    current = project_ball(w.copy(), ball)
    value = weighted(current)
    steps = 0
    for steps in range(1, oracle_steps + 1):
        step_lr = lr
        grad = weighted_grad(current)
        candidate = project_ball(current - step_lr * grad, ball)
        candidate_value = weighted(candidate)
        while candidate_value > value and step_lr > 1e-12 * lr:
            step_lr *= 0.5
            candidate = project_ball(current - step_lr * grad, ball)
            candidate_value = weighted(candidate)
        if candidate_value > value:
            break
        decrease = value - candidate_value
        current, value = candidate, candidate_value
        if decrease < tol:
            break
    gap = primal - value
    if gap < -GAP_TOLERANCE:
        logger.warning(f"Duality gap {gap:.3e} is below the weak-duality tolerance")
    return DualityGapEstimate(gap, primal, value, steps)

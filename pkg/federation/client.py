"""
Client-side state and the local update steps.

A client keeps its last local model, its gradient memory h_i and, for
SCAFFOLD, its control variate. Local updates are computed as pure functions of
the state at the start of a round; the round function commits the results
after every participant has finished, so client-parallel and sequential
schedules produce the same bits.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from core.exceptions import DimensionError, ParameterError
from core.geometry import BallConstraint, project_ball
from core.rng import RngStream
from models.objectives import LocalObjective
from .hyperparams import HyperParams

logger = logging.getLogger(__name__)

# (batch_grad, w_i) -> step direction
DirectionFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
# (batch_grad, memory, w_bar, w_i, mu) -> step direction
GradientRule = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class ClientState:
    """One simulated client.

    Attributes:
        client_id: Index in the fleet
        objective: The client's local loss f_i
        w: Local model after the client's last participation
        memory: Gradient memory h_i
        control: SCAFFOLD control variate c_i (None until first used)
    """

    client_id: int
    objective: LocalObjective
    w: np.ndarray
    memory: np.ndarray
    control: Optional[np.ndarray] = None

    @classmethod
    def create(cls, client_id: int, objective: LocalObjective, w0: np.ndarray) -> "ClientState":
        w0 = np.asarray(w0, dtype=np.float64)
        if w0.size != objective.dim:
            raise DimensionError(f"Initial model has {w0.size} parameters, client {client_id} "
                                 f"expects {objective.dim}")
        return cls(client_id, objective, w0.copy(), np.zeros_like(w0))

    def snapshot(self):
        """Copies of the mutable arrays, used to check staleness."""
        control = None if self.control is None else self.control.copy()
        return self.w.copy(), self.memory.copy(), control


@dataclass(frozen=True)
class LocalUpdate:
    """Result of one participant slot's local steps."""

    client_id: int
    w_final: np.ndarray
    w_snapshot: np.ndarray


def _check_lengths(*vectors: np.ndarray):
    sizes = {np.asarray(v).size for v in vectors}
    if len(sizes) != 1:
        raise DimensionError(f"Vector lengths differ: {sorted(sizes)}")


def drift_corrected_gradient(batch_grad: np.ndarray, memory: np.ndarray, w_bar: np.ndarray,
                             w_i: np.ndarray, mu: float) -> np.ndarray:
    """Local step direction: batch_grad - memory - mu * (w_bar - w_i)."""
    _check_lengths(batch_grad, memory, w_bar, w_i)
    return batch_grad - memory - mu * (w_bar - w_i)


def local_update_steps(client: ClientState, w_bar: np.ndarray, hp: HyperParams, round_index: int,
                       snapshot_t: Optional[int], rng: RngStream, ball: BallConstraint,
                       direction: Optional[DirectionFn] = None) -> LocalUpdate:
    """Run ``hp.tau`` projected local steps starting from the broadcast model.

    Step k of round s produces iterate s*tau + k + 1; the model right
    after the step producing ``snapshot_t`` is returned as the snapshot. The
    client state is read but not modified.

    Args:
        client: Participating client
        w_bar: Broadcast global model
        hp: Hyperparameters
        round_index: Round s
        snapshot_t: Iteration index t' in [s*tau + 1, (s+1)*tau], or None when no snapshot is needed
        rng: The slot's minibatch stream
        ball: Feasible set for the local iterates
        direction: Maps (batch_grad, w_i) to the step direction; defaults to the
            drift-corrected gradient with the client's memory and ``hp.mu``
    """
    first = round_index * hp.tau + 1
    if snapshot_t is not None and not first <= snapshot_t <= first + hp.tau - 1:
        raise ParameterError(f"Snapshot index {snapshot_t} outside round {round_index} "
                             f"range [{first}, {first + hp.tau - 1}]")
    if direction is None:
        memory, mu = client.memory, hp.mu

        def direction(batch_grad, w):
            return drift_corrected_gradient(batch_grad, memory, w_bar, w, mu)

    w = np.array(w_bar, dtype=np.float64, copy=True)
    w_snapshot = None
    for k in range(hp.tau):
        batch_grad = client.objective.stochastic_loss_grad(w, rng, hp.batch).grad
        w = project_ball(w - hp.eta * direction(batch_grad, w), ball)
        if snapshot_t is not None and round_index * hp.tau + k + 1 == snapshot_t:
            w_snapshot = w
    return LocalUpdate(client.client_id, w, w if w_snapshot is None else w_snapshot)


def update_gradient_memory(memory: np.ndarray, w_final: np.ndarray, w_bar: np.ndarray,
                           mu: float) -> np.ndarray:
    """h <- h - mu * (w_final - w_bar)."""
    _check_lengths(memory, w_final, w_bar)
    return memory - mu * (w_final - w_bar)

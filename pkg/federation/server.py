"""
Server-side state, round planning and the server reductions.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionError, InvariantViolation, ParameterError
from core.geometry import (SimplexPoint, project_simplex, sample_participants,
                           sample_snapshot_index, sample_uniform_subset)
from core.numerics import require_finite
from core.rng import StreamFactory
from .client import ClientState, LocalUpdate, update_gradient_memory
from .hyperparams import C_UPDATE_MODES, HyperParams

logger = logging.getLogger(__name__)


@dataclass
class ServerState:
    """Global model, correction state, dual variable and round counter.

    SCAFFOLD keeps its global control variate in ``c``.
    """

    w_bar: np.ndarray
    c: np.ndarray
    lam: SimplexPoint
    round: int = 0

    @classmethod
    def initial(cls, w0: np.ndarray, n_clients: int) -> "ServerState":
        """c = 0 and uniform lambda."""
        w0 = np.asarray(w0, dtype=np.float64)
        return cls(w0.copy(), np.zeros_like(w0), SimplexPoint.uniform(n_clients), 0)

    def copy(self) -> "ServerState":
        return ServerState(self.w_bar.copy(), self.c.copy(), self.lam, self.round)

    def check(self):
        if self.c.size != self.w_bar.size:
            raise InvariantViolation(f"Correction state has {self.c.size} entries, "
                                     f"model has {self.w_bar.size}")
        # Re-validating raises if lambda left the simplex.
        SimplexPoint(self.lam.weights)


@dataclass(frozen=True)
class RoundPlan:
    """Server draws for one round.

    Attributes:
        participants: Sampled multiset of size m, in draw order
        snapshot_t: Snapshot iteration t', or None for algorithms without a dual step
        dual_eval_set: Distinct clients evaluating the dual loss, ascending
    """

    participants: Tuple[int, ...]
    snapshot_t: Optional[int] = None
    dual_eval_set: Tuple[int, ...] = ()


@dataclass
class RoundTranscript:
    """Everything exchanged in one round plus the resulting server state."""

    round: int
    plan: RoundPlan
    uploads: List[LocalUpdate]
    dual_losses: Dict[int, float]
    snapshot_model: Optional[np.ndarray]
    server: ServerState
    extras: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.uploads) != len(self.plan.participants):
            raise InvariantViolation(f"Round {self.round} has {len(self.uploads)} uploads for "
                                     f"{len(self.plan.participants)} participant slots")


def plan_round(lam: SimplexPoint, s: int, hp: HyperParams, n_total: int,
               streams: StreamFactory) -> RoundPlan:
    """Draw participants by lambda, the snapshot index, and the uniform dual set."""
    participants = sample_participants(lam, hp.m, streams.stream("participants", round=s))
    snapshot_t = sample_snapshot_index(s, hp.tau, streams.stream("snapshot", round=s))
    dual_eval_set = sample_uniform_subset(n_total, hp.m, streams.stream("dual_set", round=s))
    return RoundPlan(participants, snapshot_t, dual_eval_set)


def plan_uniform_round(s: int, hp: HyperParams, n_total: int, streams: StreamFactory) -> RoundPlan:
    """Uniform participants without replacement and no dual step."""
    return RoundPlan(sample_uniform_subset(n_total, hp.m, streams.stream("participants", round=s)))


def slot_occurrences(participants: Sequence[int]) -> List[int]:
    """For each slot, how many earlier slots hold the same client."""
    seen: Dict[int, int] = {}
    occurrences = []
    for client_id in participants:
        occurrences.append(seen.get(client_id, 0))
        seen[client_id] = seen.get(client_id, 0) + 1
    return occurrences


def _stack(uploads: Sequence[np.ndarray], like: Optional[np.ndarray] = None) -> np.ndarray:
    if len(uploads) == 0:
        raise ParameterError("At least one upload is required")
    sizes = {np.asarray(u).size for u in uploads}
    if like is not None:
        sizes.add(np.asarray(like).size)
    if len(sizes) != 1:
        raise DimensionError(f"Upload lengths differ: {sorted(sizes)}")
    return np.vstack(uploads)


def server_update_c(c: np.ndarray, uploads: Sequence[np.ndarray], w_bar: np.ndarray, mu: float,
                    n_total: int, mode: str = "per_round_w_bar") -> np.ndarray:
    """Correction-state update from the uploaded models.

    ``per_round_w_bar``: c - (mu/N) * (sum(uploads) - w_bar), the broadcast
    model subtracted once. ``per_client_w_bar``: c - (mu/N) * sum(uploads - w_bar).
    """
    stacked = _stack(uploads, like=w_bar)
    if np.asarray(c).size != stacked.shape[1]:
        raise DimensionError(f"Correction state has {np.asarray(c).size} entries, "
                             f"uploads have {stacked.shape[1]}")
    if mode == "per_round_w_bar":
        displacement = stacked.sum(axis=0) - w_bar
    elif mode == "per_client_w_bar":
        displacement = (stacked - w_bar).sum(axis=0)
    else:
        raise ParameterError(f"c-update mode must be one of {C_UPDATE_MODES}, got {mode!r}")
    return c - (mu / n_total) * displacement


def server_aggregate(uploads: Sequence[np.ndarray], c_new: np.ndarray, mu: float,
                     m: Optional[int] = None) -> np.ndarray:
    """Mean of the uploads minus c_new / mu; the plain mean when mu == 0."""
    stacked = _stack(uploads, like=c_new)
    if m is not None and stacked.shape[0] != m:
        raise ParameterError(f"Expected {m} uploads, got {stacked.shape[0]}")
    mean = stacked.mean(axis=0)
    if mu == 0:
        return mean
    return mean - c_new / mu


def dual_gradient(snapshot_model: np.ndarray, clients: Sequence[ClientState],
                  dual_eval_set: Sequence[int], hp: HyperParams, round_index: int,
                  streams: StreamFactory) -> Tuple[np.ndarray, Dict[int, float]]:
    """Stochastic dual gradient v: v_i = (N/m) * loss_i on a fresh minibatch for i in U, else 0.

    Returns:
        (v, reported losses keyed by client id)
    """
    if len(dual_eval_set) == 0:
        raise ParameterError("Dual evaluation set is empty")
    n_total = len(clients)
    scale = n_total / len(dual_eval_set)
    v = np.zeros(n_total)
    losses: Dict[int, float] = {}
    for client_id in dual_eval_set:
        stream = streams.stream("dual_eval", client=client_id, round=round_index)
        loss = clients[client_id].objective.stochastic_loss(snapshot_model, stream, hp.batch)
        losses[client_id] = loss
        v[client_id] = scale * loss
    return v, losses


def dual_variable_update(lam: SimplexPoint, snapshot_model: np.ndarray, clients: Sequence[ClientState],
                         plan: RoundPlan, hp: HyperParams, round_index: int,
                         streams: StreamFactory) -> Tuple[SimplexPoint, Dict[int, float]]:
    """lambda <- project_simplex(lambda + tau * gamma * v)."""
    if len(set(plan.dual_eval_set)) != len(plan.dual_eval_set):
        raise ParameterError(f"Dual evaluation set has repeated clients: {plan.dual_eval_set}")
    v, losses = dual_gradient(snapshot_model, clients, plan.dual_eval_set, hp, round_index, streams)
    require_finite(v, f"dual losses of round {round_index}")
    return project_simplex(lam.weights + hp.tau * hp.gamma * v), losses


def commit_local_updates(clients: Sequence[ClientState], updates: Sequence[LocalUpdate],
                         w_bar: np.ndarray, mu: Optional[float] = None):
    """Apply slot results in slot order.

    With ``mu`` given, each slot updates the gradient memory on top of the
    previous slot of the same client. A client keeps the model of its last slot.
    """
    for update in updates:
        client = clients[update.client_id]
        if mu is not None:
            client.memory = update_gradient_memory(client.memory, update.w_final, w_bar, mu)
        client.w = update.w_final

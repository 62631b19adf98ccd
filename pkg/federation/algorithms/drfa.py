"""
Distributionally robust federated averaging.

Same sampling, snapshotting and dual step as DRDM, but clients run plain local
SGD and the server takes the plain mean of the uploads.
"""

import logging
from typing import Optional, Sequence

from core.geometry import BallConstraint
from core.rng import StreamFactory
from ..base_algorithm import FederatedAlgorithm, MapFn, register_algorithm, sequential_map
from ..client import ClientState, local_update_steps
from ..hyperparams import HyperParams
from ..server import (RoundTranscript, ServerState, commit_local_updates, dual_variable_update,
                      plan_round, server_aggregate, slot_occurrences)

logger = logging.getLogger(__name__)


def _plain_sgd(batch_grad, w):
    return batch_grad


def run_round_drfa(server: ServerState, clients: Sequence[ClientState], hp: HyperParams,
                   streams: StreamFactory, ball: Optional[BallConstraint] = None,
                   map_fn: Optional[MapFn] = None) -> RoundTranscript:
    """One DRFA round; ``hp.mu`` is ignored and the correction state stays as it is."""
    ball = ball or BallConstraint()
    map_fn = map_fn or sequential_map
    s = server.round
    plan = plan_round(server.lam, s, hp, len(clients), streams)
    w_bar = server.w_bar

    def run_slot(slot):
        client_id, occurrence = slot
        rng = streams.stream("local_steps", client=client_id, round=s, substream=occurrence)
        return local_update_steps(clients[client_id], w_bar, hp, s, plan.snapshot_t, rng, ball, _plain_sgd)

    updates = map_fn(run_slot, list(zip(plan.participants, slot_occurrences(plan.participants))))
    commit_local_updates(clients, updates, w_bar)

    snapshot_model = server_aggregate([u.w_snapshot for u in updates], server.c, 0.0, hp.m)
    w_bar_new = server_aggregate([u.w_final for u in updates], server.c, 0.0, hp.m)
    lam_new, losses = dual_variable_update(server.lam, snapshot_model, clients, plan, hp, s, streams)
    logger.debug(f"drfa round {s}: participants={plan.participants} t'={plan.snapshot_t}")
    return RoundTranscript(s, plan, list(updates), losses, snapshot_model,
                           ServerState(w_bar_new, server.c.copy(), lam_new, s + 1))


@register_algorithm("drfa")
class DRFAAlgorithm(FederatedAlgorithm):
    uses_dual = True

    def run_round(self, server, clients, streams):
        return run_round_drfa(server, clients, self.hp, streams, self.ball, self.map_fn)

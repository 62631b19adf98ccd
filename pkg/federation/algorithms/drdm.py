"""
Distributionally robust training with client-drift correction.

Participants are drawn by the dual variable, run drift-corrected local steps
and upload both their final and snapshot models. The server folds the uploads
into the correction state, forms the new global model and the snapshot model,
and takes a projected dual step from losses evaluated at the snapshot.
"""

import logging
from typing import Optional, Sequence

from core.geometry import BallConstraint
from core.rng import StreamFactory
from ..base_algorithm import FederatedAlgorithm, MapFn, register_algorithm, sequential_map
from ..client import ClientState, GradientRule, drift_corrected_gradient, local_update_steps
from ..hyperparams import HyperParams
from ..server import (RoundTranscript, ServerState, commit_local_updates, dual_variable_update,
                      plan_round, server_aggregate, server_update_c, slot_occurrences)

logger = logging.getLogger(__name__)


def run_round_drdm(server: ServerState, clients: Sequence[ClientState], hp: HyperParams,
                   streams: StreamFactory, ball: Optional[BallConstraint] = None,
                   map_fn: Optional[MapFn] = None,
                   gradient_rule: GradientRule = drift_corrected_gradient) -> RoundTranscript:
    """One round of DRDM.

    Args:
        server: State at the start of the round; not modified
        clients: Whole fleet; participants are updated in place
        hp: Hyperparameters (``hp.c_update`` selects the correction-state form)
        streams: Stream factory of the run
        ball: Feasible set of the local iterates
        map_fn: Ordered map over participant slots
        gradient_rule: Local direction rule, (batch_grad, memory, w_bar, w_i, mu) -> d
    """
    ball = ball or BallConstraint()
    map_fn = map_fn or sequential_map
    s = server.round
    n_total = len(clients)
    plan = plan_round(server.lam, s, hp, n_total, streams)
    w_bar = server.w_bar

    def run_slot(slot):
        client_id, occurrence = slot
        client = clients[client_id]
        memory = client.memory

        def direction(batch_grad, w):
            return gradient_rule(batch_grad, memory, w_bar, w, hp.mu)

        rng = streams.stream("local_steps", client=client_id, round=s, substream=occurrence)
        return local_update_steps(client, w_bar, hp, s, plan.snapshot_t, rng, ball, direction)

    slots = list(zip(plan.participants, slot_occurrences(plan.participants)))
    updates = map_fn(run_slot, slots)
    commit_local_updates(clients, updates, w_bar, mu=hp.mu)

    finals = [u.w_final for u in updates]
    snapshots = [u.w_snapshot for u in updates]
    c_snapshot = server_update_c(server.c, snapshots, w_bar, hp.mu, n_total, mode=hp.c_update)
    c_new = server_update_c(server.c, finals, w_bar, hp.mu, n_total, mode=hp.c_update)
    snapshot_model = server_aggregate(snapshots, c_snapshot, hp.mu, hp.m)
    w_bar_new = server_aggregate(finals, c_new, hp.mu, hp.m)
    lam_new, losses = dual_variable_update(server.lam, snapshot_model, clients, plan, hp, s, streams)

    new_server = ServerState(w_bar_new, c_new, lam_new, s + 1)
    logger.debug(f"drdm round {s}: participants={plan.participants} t'={plan.snapshot_t} "
                 f"max lambda={lam_new.weights.max():.4f}")
    return RoundTranscript(s, plan, list(updates), losses, snapshot_model, new_server)


@register_algorithm("drdm")
class DRDMAlgorithm(FederatedAlgorithm):
    uses_dual = True

    def __init__(self, hp: HyperParams, ball: Optional[BallConstraint] = None,
                 map_fn: Optional[MapFn] = None, gradient_rule: GradientRule = drift_corrected_gradient):
        super().__init__(hp, ball, map_fn)
        self.gradient_rule = gradient_rule

    def run_round(self, server, clients, streams):
        return run_round_drdm(server, clients, self.hp, streams, self.ball, self.map_fn,
                              self.gradient_rule)

"""
Federated averaging: uniform participants, local SGD, plain mean.
"""

import logging
from typing import Optional, Sequence

from core.geometry import BallConstraint
from core.rng import StreamFactory
from ..base_algorithm import FederatedAlgorithm, MapFn, register_algorithm, sequential_map
from ..client import ClientState, local_update_steps
from ..hyperparams import HyperParams
from ..server import (RoundTranscript, ServerState, commit_local_updates, plan_uniform_round,
                      server_aggregate)

logger = logging.getLogger(__name__)


def run_round_fedavg(server: ServerState, clients: Sequence[ClientState], hp: HyperParams,
                     streams: StreamFactory, ball: Optional[BallConstraint] = None,
                     map_fn: Optional[MapFn] = None) -> RoundTranscript:
    """One FedAvg round. Lambda is carried through unchanged."""
    ball = ball or BallConstraint()
    map_fn = map_fn or sequential_map
    s = server.round
    plan = plan_uniform_round(s, hp, len(clients), streams)
    w_bar = server.w_bar

    def run_slot(client_id):
        rng = streams.stream("local_steps", client=client_id, round=s)
        return local_update_steps(clients[client_id], w_bar, hp, s, None, rng, ball,
                                  lambda batch_grad, w: batch_grad)

    updates = map_fn(run_slot, list(plan.participants))
    commit_local_updates(clients, updates, w_bar)
    w_bar_new = server_aggregate([u.w_final for u in updates], server.c, 0.0, hp.m)
    logger.debug(f"fedavg round {s}: participants={plan.participants}")
    return RoundTranscript(s, plan, list(updates), {}, None,
                           ServerState(w_bar_new, server.c.copy(), server.lam, s + 1))


@register_algorithm("fedavg")
class FedAvgAlgorithm(FederatedAlgorithm):

    def run_round(self, server, clients, streams):
        return run_round_fedavg(server, clients, self.hp, streams, self.ball, self.map_fn)

"""
SCAFFOLD with the difference-based client control update.

Local direction: g - c_i + c. After tau steps from x the client sets
c_i+ = c_i - c + (x - y_i) / (tau * eta). The server takes the plain mean of
the models and adds (1/N) * sum(c_i+ - c_i) to its control c, which is the
mean control delta scaled by m/N.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from core.exceptions import ParameterError
from core.geometry import BallConstraint
from core.rng import StreamFactory
from ..base_algorithm import FederatedAlgorithm, MapFn, register_algorithm, sequential_map
from ..client import ClientState, local_update_steps
from ..hyperparams import HyperParams
from ..server import RoundTranscript, ServerState, plan_uniform_round, server_aggregate

logger = logging.getLogger(__name__)


def run_round_scaffold(server: ServerState, clients: Sequence[ClientState], hp: HyperParams,
                       streams: StreamFactory, ball: Optional[BallConstraint] = None,
                       map_fn: Optional[MapFn] = None) -> RoundTranscript:
    """One SCAFFOLD round; ``server.c`` holds the global control variate."""
    if hp.eta <= 0:
        raise ParameterError("SCAFFOLD's control update needs a positive step size")
    ball = ball or BallConstraint()
    map_fn = map_fn or sequential_map
    s = server.round
    n_total = len(clients)
    plan = plan_uniform_round(s, hp, n_total, streams)
    x, c = server.w_bar, server.c

    def run_slot(client_id):
        client = clients[client_id]
        c_i = client.control if client.control is not None else np.zeros_like(x)
        rng = streams.stream("local_steps", client=client_id, round=s)
        update = local_update_steps(client, x, hp, s, None, rng, ball,
                                    lambda batch_grad, w: batch_grad - c_i + c)
        c_i_new = c_i - c + (x - update.w_final) / (hp.tau * hp.eta)
        return update, c_i_new - c_i

    results = map_fn(run_slot, list(plan.participants))
    updates = [update for update, _ in results]
    control_deltas = [delta for _, delta in results]
    for update, delta in results:
        client = clients[update.client_id]
        client.control = (client.control if client.control is not None else np.zeros_like(x)) + delta
        client.w = update.w_final

    w_bar_new = server_aggregate([u.w_final for u in updates], c, 0.0, hp.m)
    c_new = c + np.vstack(control_deltas).sum(axis=0) / n_total
    logger.debug(f"scaffold round {s}: participants={plan.participants}")
    return RoundTranscript(s, plan, updates, {}, None, ServerState(w_bar_new, c_new, server.lam, s + 1),
                           extras={"control_deltas": np.vstack(control_deltas)})


@register_algorithm("scaffold")
class ScaffoldAlgorithm(FederatedAlgorithm):

    def run_round(self, server, clients, streams):
        return run_round_scaffold(server, clients, self.hp, streams, self.ball, self.map_fn)

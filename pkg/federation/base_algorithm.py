"""
Base class and registry for federated training algorithms.
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Type

from core.exceptions import ParameterError
from core.geometry import BallConstraint
from core.rng import StreamFactory
from .client import ClientState
from .hyperparams import HyperParams
from .server import RoundTranscript, ServerState

logger = logging.getLogger(__name__)

# Ordered map used to run participant slots; results must come back in input order.
MapFn = Callable[[Callable, Iterable], List]

_REGISTRY: Dict[str, Type["FederatedAlgorithm"]] = {}


def sequential_map(fn: Callable, items: Iterable) -> List:
    return [fn(item) for item in items]


def register_algorithm(name: str):
    """Class decorator adding an algorithm under ``name``."""
    def decorator(cls):
        cls.name = name
        _REGISTRY[name] = cls
        return cls
    return decorator


def algorithm_names() -> List[str]:
    return sorted(_REGISTRY)


def get_algorithm(name: str) -> Type["FederatedAlgorithm"]:
    if name not in _REGISTRY:
        raise ParameterError(f"Unknown algorithm '{name}', expected one of {algorithm_names()}")
    return _REGISTRY[name]


class FederatedAlgorithm(ABC):
    """One round-based training algorithm over a simulated fleet.

    Args:
        hp: Hyperparameters
        ball: Feasible set of the local iterates
        map_fn: Ordered map over participant slots (sequential by default)
    """

    name = "base"
    uses_dual = False

    def __init__(self, hp: HyperParams, ball: Optional[BallConstraint] = None,
                 map_fn: Optional[MapFn] = None):
        self.hp = hp
        self.ball = ball or BallConstraint()
        self.map_fn = map_fn or sequential_map

    @abstractmethod
    def run_round(self, server: ServerState, clients: Sequence[ClientState],
                  streams: StreamFactory) -> RoundTranscript:
        """Execute round ``server.round`` and return its transcript.

        Participating clients are updated in place; stale clients are untouched.
        """
        pass

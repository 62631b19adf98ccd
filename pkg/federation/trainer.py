"""
The training loop: build a fleet from a config, run rounds, record metrics.
"""

import functools
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.config import ExperimentConfig
from core.event_bus import RUN_FINISHED, RUN_STARTED, ROUND_COMPLETED, EventBus
from core.geometry import BallConstraint
from core.rng import StreamFactory
from data.connectors.idx_connector import load_idx
from data.datasets import Dataset, synthetic_two_gaussians
from data.partition import PartitionSpec, dirichlet_class_mixtures, partition_dataset
from evaluation.energy import total_energy
from evaluation.metrics import MetricsRow
from models.classifiers import Classifier, ModelShape, classifier_for
from models.objectives import ShardObjective
from . import algorithms  # noqa: F401  registers the round implementations
from .base_algorithm import FederatedAlgorithm, MapFn, get_algorithm
from .client import ClientState
from .server import ServerState

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=4)
def _cached_idx(images_path: str, labels_path: str) -> Dataset:
    return load_idx(images_path, labels_path)


def load_datasets(cfg: ExperimentConfig, streams: StreamFactory) -> Tuple[Dataset, Dataset]:
    """Training and test sets for a run.

    IDX files are read once per process; synthetic sets are drawn from the run's streams.
    """
    ds = cfg.dataset
    if ds.source == "idx":
        return _cached_idx(ds.train_images, ds.train_labels), _cached_idx(ds.test_images, ds.test_labels)
    train = synthetic_two_gaussians(ds.n_per_class, ds.feature_dim, ds.separation, streams.stream("dataset"))
    test = synthetic_two_gaussians(ds.test_n_per_class, ds.feature_dim, ds.separation,
                                   streams.stream("test_dataset"))
    return train, test


@dataclass
class Fleet:
    """Everything a run trains and evaluates on."""

    classifier: Classifier
    clients: List[ClientState]
    test_objectives: List[ShardObjective]
    w0: np.ndarray


def build_fleet(cfg: ExperimentConfig, streams: StreamFactory,
                datasets: Optional[Tuple[Dataset, Dataset]] = None) -> Fleet:
    """Partition the data, build client objectives and the initial model.

    Test shards reuse the training class mixtures so each client is evaluated
    on data distributed like its own.
    """
    train, test = datasets or load_datasets(cfg, streams)
    n = cfg.num_clients
    mixtures = dirichlet_class_mixtures(n, train.num_classes, cfg.partition.alpha, streams.stream("mixtures"))
    train_spec = PartitionSpec(cfg.partition.sigma, cfg.partition.alpha, n, cfg.partition.train_samples)
    test_spec = PartitionSpec(cfg.partition.sigma, cfg.partition.alpha, n, cfg.partition.test_samples)
    train_parts = partition_dataset(train, train_spec, streams.stream("partition"), mixtures)
    test_parts = partition_dataset(test, test_spec, streams.stream("test_partition"), mixtures)

    shape = ModelShape(train.feature_dim, train.num_classes, cfg.model.hidden_dim)
    classifier = classifier_for(shape)
    w0 = classifier.init_params(streams.stream("init"))
    clients = [ClientState.create(i, ShardObjective(classifier, train, train_parts[i]), w0) for i in range(n)]
    test_objectives = [ShardObjective(classifier, test, test_parts[i]) for i in range(n)]
    return Fleet(classifier, clients, test_objectives, w0)


class FederatedTrainer:
    """Runs one seeded training run of ``cfg.algorithm``.

    Args:
        cfg: Experiment configuration
        seed: Run seed (defaults to ``cfg.seed``)
        bus: Event bus for progress events (a private one is created if omitted)
        map_fn: Ordered map over participant slots
        datasets: Pre-loaded (train, test) sets
    """

    def __init__(self, cfg: ExperimentConfig, seed: Optional[int] = None, bus: Optional[EventBus] = None,
                 map_fn: Optional[MapFn] = None, datasets: Optional[Tuple[Dataset, Dataset]] = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.bus = bus or EventBus()
        self.streams = StreamFactory(self.seed)
        self.fleet = build_fleet(cfg, self.streams, datasets)
        algorithm_cls = get_algorithm(cfg.algorithm)
        self.algorithm: FederatedAlgorithm = algorithm_cls(cfg.hyperparams, BallConstraint(cfg.ball_radius),
                                                           map_fn)
        self.server = ServerState.initial(self.fleet.w0, cfg.num_clients)
        self.cumulative_energy = 0.0
        self.history: List[MetricsRow] = []

    def _round_energy(self, participants) -> float:
        if self.cfg.energy is None:
            return 0.0
        return total_energy(1, self.cfg.hyperparams, [self.cfg.energy] * len(participants))

    def evaluate(self) -> MetricsRow:
        """Per-client test accuracy of the current global model."""
        per_client = [obj.accuracy(self.server.w_bar) for obj in self.fleet.test_objectives]
        return MetricsRow.from_accuracies(self.server.round, per_client, self.server.lam.as_tuple(),
                                          self.cumulative_energy)

    def _record(self) -> MetricsRow:
        row = self.evaluate()
        self.history.append(row)
        self.bus.publish(ROUND_COMPLETED, {"round": row.round, "avg_acc": row.avg_acc,
                                           "worst_acc": row.worst_acc, "std_acc": row.std_acc,
                                           "energy_j": row.cumulative_energy})
        return row

    def _target_reached(self, row: MetricsRow) -> bool:
        target = self.cfg.stop_at_worst_acc
        return target is not None and row.worst_acc >= target

    def run(self) -> List[MetricsRow]:
        """Train for up to ``hyperparams.rounds`` rounds; the history starts with round 0."""
        cfg, hp = self.cfg, self.cfg.hyperparams
        self.bus.publish(RUN_STARTED, {"algorithm": cfg.algorithm, "seed": self.seed,
                                       "rounds": hp.rounds, "clients": cfg.num_clients})
        row = self._record()
        for s in range(hp.rounds):
            if self._target_reached(row):
                break
            transcript = self.algorithm.run_round(self.server, self.fleet.clients, self.streams)
            self.server = transcript.server
            self.server.check()
            self.cumulative_energy += self._round_energy(transcript.plan.participants)
            if (s + 1) % cfg.metrics_every == 0 or s + 1 == hp.rounds:
                row = self._record()
        self.bus.publish(RUN_FINISHED, {"rounds": self.server.round,
                                        "worst_acc": self.history[-1].worst_acc})
        logger.info(f"{cfg.algorithm} run (seed {self.seed}) finished after {self.server.round} rounds: "
                    f"avg={self.history[-1].avg_acc:.4f} worst={self.history[-1].worst_acc:.4f}")
        return self.history


def run_training(config: ExperimentConfig, seed: Optional[int] = None, bus: Optional[EventBus] = None,
                 map_fn: Optional[MapFn] = None,
                 datasets: Optional[Tuple[Dataset, Dataset]] = None) -> List[MetricsRow]:
    """Run one training run and return its metrics history (round 0 first)."""
    return FederatedTrainer(config, seed, bus, map_fn, datasets).run()

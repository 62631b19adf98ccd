"""
Monte Carlo experiments: independent seeded training runs and their summary.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from core.config import ExperimentConfig
from core.event_bus import EventBus
from core.exceptions import ParameterError
from core.rng import StreamFactory, child_seed
from evaluation.metrics import MetricsRow
from federation.trainer import load_datasets, run_training
from infrastructure.monitoring import TrainingMonitor
from .task_scheduler import TaskScheduler

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["run", "round", "avg_acc", "worst_acc", "std_acc", "energy_j"]
SUMMARY_METRICS = ["avg_acc", "worst_acc", "std_acc", "energy_j"]


@dataclass
class RunResult:
    """Per-run metrics histories of one experiment, indexed by run.

    Attributes:
        config: The experiment configuration
        seeds: Seed of each run
        histories: Metrics rows of each run, round 0 first
        task_stats: Counts and timings of the run tasks
    """

    config: ExperimentConfig
    seeds: List[int] = field(default_factory=list)
    histories: List[List[MetricsRow]] = field(default_factory=list)
    task_stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def runs(self) -> int:
        return len(self.histories)

    def to_frame(self) -> pd.DataFrame:
        """One row per (run, round)."""
        records = [
            (run, row.round, row.avg_acc, row.worst_acc, row.std_acc, row.cumulative_energy)
            for run, history in enumerate(self.histories)
            for row in history
        ]
        return pd.DataFrame.from_records(records, columns=METRIC_COLUMNS)

    def summary(self) -> pd.DataFrame:
        """Mean and population standard deviation over runs, per round.

        Runs that stopped early only contribute to the rounds they reached;
        ``runs`` counts the contributors.
        """
        frame = self.to_frame()
        grouped = frame.groupby("round", sort=True)[SUMMARY_METRICS]
        means = grouped.mean().add_suffix("_mean")
        stds = grouped.std(ddof=0).fillna(0.0).add_suffix("_std")
        table = pd.concat([means, stds], axis=1)
        table = table[[f"{name}_{stat}" for name in SUMMARY_METRICS for stat in ("mean", "std")]]
        table.insert(0, "runs", frame.groupby("round", sort=True)["run"].count())
        return table.reset_index()

    def final_rows(self) -> List[MetricsRow]:
        """The last recorded row of every run."""
        return [history[-1] for history in self.histories]


def run_seeds(cfg: ExperimentConfig, runs: Optional[int] = None) -> List[int]:
    """Seeds of runs 0..runs-1 derived from the master seed."""
    return [child_seed(cfg.seed, k) for k in range(cfg.monte_carlo_runs if runs is None else runs)]


def preload_datasets(cfg: ExperimentConfig):
    """Read IDX files once before runs fan out to worker threads."""
    if cfg.dataset.source == "idx":
        load_datasets(cfg, StreamFactory(cfg.seed))


def slot_map_fn(slot_threads: int = 1):
    """Ordered map over the participant slots of one run."""
    return TaskScheduler(max_workers=slot_threads, name="slots").as_map_fn()


def run_experiment(cfg: ExperimentConfig, threads: int = 1, log_every: int = 0,
                   slot_threads: int = 1) -> RunResult:
    """Run ``cfg.monte_carlo_runs`` isolated training runs.

    Args:
        cfg: Experiment configuration
        threads: Worker threads over runs; results do not depend on it
        log_every: Progress log cadence of each run's monitor (0 = silent)
        slot_threads: Worker threads over the participant slots of each round
    """
    if threads < 1 or slot_threads < 1:
        raise ParameterError(f"thread counts must be >= 1, got threads={threads} slot_threads={slot_threads}")
    seeds = run_seeds(cfg)
    preload_datasets(cfg)
    logger.info(f"Running {len(seeds)} {cfg.algorithm} runs on {threads} threads, {slot_threads} per run "
                f"(N={cfg.num_clients}, m={cfg.hyperparams.m}, tau={cfg.hyperparams.tau}, "
                f"S={cfg.hyperparams.rounds})")

    def one_run(run_index: int) -> List[MetricsRow]:
        bus = EventBus()
        TrainingMonitor(f"{cfg.algorithm}-{run_index}", log_every=log_every).attach(bus)
        return run_training(cfg, seed=seeds[run_index], bus=bus, map_fn=slot_map_fn(slot_threads))

    scheduler = TaskScheduler(max_workers=threads, name="runs")
    histories = scheduler.map(one_run, range(len(seeds)), label="training_run")
    result = RunResult(cfg, seeds, histories, scheduler.get_statistics())
    logger.debug(f"Run tasks: {result.task_stats}")
    final = result.summary().iloc[-1]
    logger.info(f"Experiment finished: avg_acc={final['avg_acc_mean']:.4f} "
                f"worst_acc={final['worst_acc_mean']:.4f} over {result.runs} runs")
    return result

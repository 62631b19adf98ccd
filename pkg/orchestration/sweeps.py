"""
Local-step, energy, heterogeneity and algorithm-comparison sweeps.

``sweep_tau`` measures rounds-to-target for every (tau, run) cell; runs of
different tau values share seeds. ``sweep_energy`` turns those measurements
into the energy-optimal tau for every (SNR, bandwidth) cell without further
training. ``compare_algorithms`` trains every algorithm on the same seeds and
partitions, and ``sweep_heterogeneity`` repeats that comparison over
label-skew and dataset-size settings.
"""

import logging
import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from core.config import ALGORITHMS, ExperimentConfig, with_overrides
from core.exceptions import ParameterError
from evaluation.energy import EnergyParams, optimal_tau_from_rounds
from evaluation.metrics import MetricsRow, rounds_to_target
from federation.trainer import run_training
from .experiment import preload_datasets, run_seeds, slot_map_fn
from .task_scheduler import TaskScheduler

logger = logging.getLogger(__name__)

TAU_COLUMNS = ["tau", "run", "rounds_to_target"]
ENERGY_COLUMNS = ["snr_db", "bandwidth_hz", "opt_tau", "energy_j"]
COMPARISON_COLUMNS = ["algorithm", "run", "rounds", "avg_acc", "worst_acc", "std_acc"]
HETEROGENEITY_COLUMNS = ["alpha", "sigma", "algorithm", "run", "avg_acc", "worst_acc", "std_acc"]


def sweep_tau(cfg: ExperimentConfig, grid: Optional[Sequence[int]] = None,
              target_worst_acc: Optional[float] = None, threads: int = 1,
              slot_threads: int = 1) -> pd.DataFrame:
    """Rounds until the worst-case accuracy target, per tau and run.

    Runs stop at the target or at ``hyperparams.rounds``; a run that never
    reaches it is recorded as missing.
    """
    grid = list(cfg.sweep.tau_grid if grid is None else grid)
    if not grid or min(grid) < 1:
        raise ParameterError(f"tau grid must be a non-empty list of positive integers, got {grid}")
    target = cfg.sweep.target_worst_acc if target_worst_acc is None else target_worst_acc
    seeds = run_seeds(cfg)
    preload_datasets(cfg)
    cells = [(tau, run) for tau in grid for run in range(len(seeds))]

    def one_cell(cell):
        tau, run = cell
        cell_cfg = replace(cfg, hyperparams=replace(cfg.hyperparams, tau=tau), stop_at_worst_acc=target)
        history = run_training(cell_cfg, seed=seeds[run], map_fn=slot_map_fn(slot_threads))
        rounds = rounds_to_target(history, target)
        logger.info(f"tau={tau} run={run}: rounds to worst-case accuracy {target} = {rounds}")
        return rounds

    rounds = TaskScheduler(max_workers=threads, name="sweep").map(one_cell, cells, label="tau_cell")
    table = pd.DataFrame({
        "tau": [tau for tau, _ in cells],
        "run": [run for _, run in cells],
        "rounds_to_target": pd.array(rounds, dtype="Int64"),
    })
    return table[TAU_COLUMNS]


def mean_rounds_by_tau(tau_table: pd.DataFrame) -> Dict[int, Optional[float]]:
    """Mean rounds-to-target over runs; None for a tau some run never reached."""
    result: Dict[int, Optional[float]] = {}
    for tau, group in tau_table.groupby("tau", sort=True):
        values = group["rounds_to_target"]
        result[int(tau)] = None if values.isna().any() else float(values.astype(float).mean())
    return result


def tau_trend_by_run(tau_table: pd.DataFrame) -> Dict[int, bool]:
    """Per run, whether rounds-to-target is non-increasing in tau (missing counts as infinite)."""
    trend: Dict[int, bool] = {}
    for run, group in tau_table.sort_values("tau").groupby("run", sort=True):
        values = [math.inf if pd.isna(v) else float(v) for v in group["rounds_to_target"]]
        trend[int(run)] = all(b <= a for a, b in zip(values, values[1:]))
    return trend


def sweep_energy(cfg: ExperimentConfig, snr_grid: Optional[Sequence[float]] = None,
                 bandwidth_grid: Optional[Sequence[float]] = None,
                 tau_table: Optional[pd.DataFrame] = None, threads: int = 1,
                 slot_threads: int = 1) -> pd.DataFrame:
    """Energy-optimal tau for every (SNR, bandwidth) cell.

    Args:
        cfg: Experiment configuration; ``cfg.energy`` (or the defaults) supplies
            the energy constants other than SNR and bandwidth
        snr_grid: SNR values in dB
        bandwidth_grid: Bandwidths in Hz
        tau_table: Output of ``sweep_tau``; measured here when omitted
        threads: Worker threads for the tau sweep
        slot_threads: Worker threads over the participant slots of each tau-sweep run
    """
    snr_grid = list(cfg.sweep.snr_grid if snr_grid is None else snr_grid)
    bandwidth_grid = list(cfg.sweep.bandwidth_grid if bandwidth_grid is None else bandwidth_grid)
    if not snr_grid or not bandwidth_grid:
        raise ParameterError("SNR and bandwidth grids must be non-empty")
    if tau_table is None:
        tau_table = sweep_tau(cfg, threads=threads, slot_threads=slot_threads)
    rounds_by_tau = mean_rounds_by_tau(tau_table)
    base = cfg.energy or EnergyParams()

    rows = []
    for snr_db in snr_grid:
        for bandwidth in bandwidth_grid:
            ep = replace(base, snr_db=float(snr_db), bandwidth=float(bandwidth))
            search = optimal_tau_from_rounds(rounds_by_tau, cfg.hyperparams, [ep] * cfg.hyperparams.m)
            energy = search.energies.get(search.opt_tau) if search.reached else None
            rows.append((float(snr_db), float(bandwidth), search.opt_tau, energy))
            logger.debug(f"snr={snr_db} dB bandwidth={bandwidth} Hz: tau*={search.opt_tau}")
    table = pd.DataFrame.from_records(rows, columns=ENERGY_COLUMNS)
    table["opt_tau"] = pd.array(table["opt_tau"].tolist(), dtype="Int64")
    table["energy_j"] = table["energy_j"].astype(float)
    return table


def algorithm_config(cfg: ExperimentConfig, algorithm: str) -> ExperimentConfig:
    """``cfg`` retargeted to ``algorithm``; baselines train without the drift weight."""
    if algorithm not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    hp = cfg.hyperparams if algorithm == "drdm" else replace(cfg.hyperparams, mu=0.0)
    return with_overrides(cfg, algorithm=algorithm, hyperparams=hp)


def _final_rows(cell_cfgs: List[ExperimentConfig], seeds: List[int], threads: int,
                slot_threads: int, label: str) -> List[MetricsRow]:
    """Last metrics row of one training run per (config, seed) cell."""
    cells = [(cell_cfg, seed) for cell_cfg in cell_cfgs for seed in seeds]

    def one_cell(cell):
        cell_cfg, seed = cell
        return run_training(cell_cfg, seed=seed, map_fn=slot_map_fn(slot_threads))[-1]

    return TaskScheduler(max_workers=threads, name="sweep").map(one_cell, cells, label=label)


def compare_algorithms(cfg: ExperimentConfig, algorithms: Optional[Sequence[str]] = None,
                       threads: int = 1, slot_threads: int = 1) -> pd.DataFrame:
    """Final accuracies of every algorithm and run on shared seeds and partitions.

    Args:
        cfg: Experiment configuration; ``cfg.algorithm`` is replaced per row
        algorithms: Algorithm names (``cfg.sweep.algorithms`` by default)
        threads: Worker threads over (algorithm, run) cells
        slot_threads: Worker threads over the participant slots of each run
    """
    algorithms = list(cfg.sweep.algorithms if algorithms is None else algorithms)
    if not algorithms:
        raise ParameterError("algorithm list must be non-empty")
    seeds = run_seeds(cfg)
    preload_datasets(cfg)
    rows = _final_rows([algorithm_config(cfg, name) for name in algorithms], seeds, threads, slot_threads,
                       "comparison_cell")
    cells = [(name, run) for name in algorithms for run in range(len(seeds))]
    records = [(name, run, row.round, row.avg_acc, row.worst_acc, row.std_acc)
               for (name, run), row in zip(cells, rows)]
    table = pd.DataFrame.from_records(records, columns=COMPARISON_COLUMNS)
    for name, group in table.groupby("algorithm", sort=False):
        logger.info(f"{name}: avg_acc={group['avg_acc'].mean():.4f} worst_acc={group['worst_acc'].mean():.4f} "
                    f"over {len(group)} runs")
    return table


def heterogeneity_settings(base_alpha: float, alpha_grid: Sequence[float],
                           sigma_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """(alpha, sigma) pairs: the alpha grid at equal client sizes, then the sigma grid at ``base_alpha``."""
    if any(not a > 0 for a in alpha_grid):
        raise ParameterError(f"alpha values must be positive, got {list(alpha_grid)}")
    if any(s < 0 for s in sigma_grid):
        raise ParameterError(f"sigma values must be non-negative, got {list(sigma_grid)}")
    settings = [(float(a), 0.0) for a in alpha_grid] + [(float(base_alpha), float(s)) for s in sigma_grid]
    settings = list(dict.fromkeys(settings))
    if not settings:
        raise ParameterError("alpha and sigma grids are both empty")
    return settings


def sweep_heterogeneity(cfg: ExperimentConfig, alpha_grid: Optional[Sequence[float]] = None,
                        sigma_grid: Optional[Sequence[float]] = None,
                        algorithms: Optional[Sequence[str]] = None, threads: int = 1,
                        slot_threads: int = 1) -> pd.DataFrame:
    """Algorithm comparison across Dirichlet label skew and Zipf size skew.

    The alpha grid runs with equal dataset sizes (sigma = 0); the sigma grid
    runs at ``cfg.partition.alpha``. Every setting and algorithm shares the
    run seeds, so the partitions of one run match across algorithms.
    """
    alpha_grid = list(cfg.sweep.alpha_grid if alpha_grid is None else alpha_grid)
    sigma_grid = list(cfg.sweep.sigma_grid if sigma_grid is None else sigma_grid)
    algorithms = list(cfg.sweep.algorithms if algorithms is None else algorithms)
    if not algorithms:
        raise ParameterError("algorithm list must be non-empty")
    settings = heterogeneity_settings(cfg.partition.alpha, alpha_grid, sigma_grid)
    seeds = run_seeds(cfg)
    preload_datasets(cfg)

    cell_cfgs, keys = [], []
    for alpha, sigma in settings:
        partitioned = replace(cfg, partition=replace(cfg.partition, alpha=alpha, sigma=sigma))
        for name in algorithms:
            cell_cfgs.append(algorithm_config(partitioned, name))
            keys.append((alpha, sigma, name))
    rows = _final_rows(cell_cfgs, seeds, threads, slot_threads, "heterogeneity_cell")
    cells = [(key, run) for key in keys for run in range(len(seeds))]
    records = [(alpha, sigma, name, run, row.avg_acc, row.worst_acc, row.std_acc)
               for ((alpha, sigma, name), run), row in zip(cells, rows)]
    return pd.DataFrame.from_records(records, columns=HETEROGENEITY_COLUMNS)


def mean_accuracy(table: pd.DataFrame, keys: Sequence[str]) -> pd.DataFrame:
    """Mean final accuracies over runs, grouped by ``keys`` in first-seen order."""
    metrics = ["avg_acc", "worst_acc", "std_acc"]
    return table.groupby(list(keys), sort=False)[metrics].mean().reset_index()

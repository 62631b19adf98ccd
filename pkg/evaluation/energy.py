"""
Energy cost of training: per-step processing energy plus Shannon-rate upload energy.

An upload of ``model_bits`` at transmit power P over bandwidth B at linear SNR
r takes bits / (B log2(1 + r)) seconds, so costs P * bits / (B log2(1 + r))
joules. A run of R rounds costs R * tau * sum(E^p) + R * sum(E^t), summed over
the participants of a round.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Sequence

from core.exceptions import ParameterError
from federation.hyperparams import HyperParams
from .metrics import rounds_to_target

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyParams:
    """Energy model of one client.

    Attributes:
        proc_energy_per_step: Joules per local step (E^p)
        tx_power: Transmit power in watts
        model_bits: Bits per model upload
        bandwidth: Channel bandwidth in hertz
        snr_db: Signal-to-noise ratio in decibels
    """

    proc_energy_per_step: float = 0.01
    tx_power: float = 0.1
    model_bits: float = 251_200.0
    bandwidth: float = 1e6
    snr_db: float = 10.0

    def __post_init__(self):
        for name in ("proc_energy_per_step", "tx_power", "model_bits", "bandwidth"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and positive, got {value}")
        if not math.isfinite(self.snr_db):
            raise ParameterError(f"snr_db must be finite, got {self.snr_db}")


def transmission_energy(ep: EnergyParams) -> float:
    """Joules per upload at the Shannon rate."""
    rate = ep.bandwidth * math.log2(1.0 + 10.0 ** (ep.snr_db / 10.0))
    return ep.tx_power * ep.model_bits / rate


def total_energy(rounds_used: float, hp: HyperParams, ep_per_client: Sequence[EnergyParams]) -> float:
    """rounds * tau * sum(E^p) + rounds * sum(E^t) over one round's participants."""
    if rounds_used < 0:
        raise ParameterError(f"rounds_used must be non-negative, got {rounds_used}")
    processing = sum(ep.proc_energy_per_step for ep in ep_per_client)
    transmission = sum(transmission_energy(ep) for ep in ep_per_client)
    return rounds_used * hp.tau * processing + rounds_used * transmission


@dataclass
class TauSearchResult:
    """Energy-optimal local-step count over a grid.

    Attributes:
        opt_tau: Minimizing tau (smallest on ties), or None if no tau reached the target
        energies: tau -> total energy, None where the target was not reached
        rounds: tau -> rounds to target, None where not reached
    """

    opt_tau: Optional[int]
    energies: Dict[int, Optional[float]] = field(default_factory=dict)
    rounds: Dict[int, Optional[float]] = field(default_factory=dict)

    @property
    def reached(self) -> bool:
        return self.opt_tau is not None


def optimal_tau_from_rounds(rounds_by_tau: Mapping[int, Optional[float]], hp: HyperParams,
                            ep_per_client: Sequence[EnergyParams]) -> TauSearchResult:
    """Pick the tau with least total energy given measured rounds-to-target per tau."""
    if not rounds_by_tau:
        raise ParameterError("tau grid is empty")
    energies: Dict[int, Optional[float]] = {}
    best_tau, best_energy = None, math.inf
    for tau in sorted(rounds_by_tau):
        rounds = rounds_by_tau[tau]
        if rounds is None:
            energies[tau] = None
            continue
        energy = total_energy(rounds, replace(hp, tau=tau), ep_per_client)
        energies[tau] = energy
        if energy < best_energy:
            best_tau, best_energy = tau, energy
    return TauSearchResult(best_tau, energies, dict(rounds_by_tau))


def optimal_tau_search(tau_grid: Sequence[int], target_worst_acc: float, ep: EnergyParams,
                       config, trainer=None) -> TauSearchResult:
    """Train once per tau until the worst-case accuracy target, then minimize energy.

    Args:
        tau_grid: Local-step counts to try
        target_worst_acc: Worst-case accuracy target
        ep: Energy model shared by every client
        config: ExperimentConfig; its round count caps each run
        trainer: Callable (config) -> metrics history; defaults to ``run_training``
    """
    if trainer is None:
        from federation.trainer import run_training as trainer
    if len(tau_grid) == 0:
        raise ParameterError("tau grid is empty")
    rounds_by_tau: Dict[int, Optional[float]] = {}
    for tau in tau_grid:
        cfg = replace(config, hyperparams=replace(config.hyperparams, tau=tau),
                      stop_at_worst_acc=target_worst_acc)
        rounds_by_tau[tau] = rounds_to_target(trainer(cfg), target_worst_acc)
        logger.info(f"tau={tau}: rounds to worst-case accuracy {target_worst_acc} = {rounds_by_tau[tau]}")
    hp = config.hyperparams
    return optimal_tau_from_rounds(rounds_by_tau, hp, [ep] * hp.m)


"""
Training hyperparameters and the convex convergence schedule.
"""

import math
from dataclasses import dataclass

from core.exceptions import ParameterError

C_UPDATE_MODES = ("per_round_w_bar", "per_client_w_bar")


@dataclass(frozen=True)
class HyperParams:
    """Step sizes and round structure.

    Attributes:
        eta: Primal (local) step size
        gamma: Dual step size
        mu: Dynamic-regularization strength (0 disables drift correction)
        tau: Local steps per round
        m: Participants per round
        batch: Minibatch size
        rounds: Communication rounds S, so T = S * tau
        c_update: How the server correction state subtracts the broadcast model,
            once per round (the default, matching ``server_update_c``) or once per
            uploaded model. The per-round form shifts the global model by an extra
            (m - 1) / N * w_bar each round when m > 1; long runs select
            ``per_client_w_bar``.
    """

    eta: float = 0.05
    gamma: float = 0.002
    mu: float = 0.1
    tau: int = 10
    m: int = 20
    batch: int = 32
    rounds: int = 100
    c_update: str = "per_round_w_bar"

    def __post_init__(self):
        # Zero step sizes are allowed so frozen-model and frozen-lambda runs can be expressed.
        if not self.eta >= 0 or not math.isfinite(self.eta):
            raise ParameterError(f"eta must be finite and non-negative, got {self.eta}")
        if not self.gamma >= 0 or not math.isfinite(self.gamma):
            raise ParameterError(f"gamma must be finite and non-negative, got {self.gamma}")
        if not self.mu >= 0 or not math.isfinite(self.mu):
            raise ParameterError(f"mu must be finite and non-negative, got {self.mu}")
        if self.tau < 1:
            raise ParameterError(f"tau must be at least 1, got {self.tau}")
        if self.m < 1:
            raise ParameterError(f"m must be at least 1, got {self.m}")
        if self.batch < 1:
            raise ParameterError(f"batch must be at least 1, got {self.batch}")
        if self.rounds < 0:
            raise ParameterError(f"rounds must be non-negative, got {self.rounds}")
        if self.c_update not in C_UPDATE_MODES:
            raise ParameterError(f"c_update must be one of {C_UPDATE_MODES}, got {self.c_update!r}")

    @property
    def total_steps(self) -> int:
        """T = S * tau."""
        return self.rounds * self.tau


def theoretical_hyperparams(T: int, m: int, n_total: int, L: float, batch: int = 32) -> HyperParams:
    """Step sizes for which the convex convergence guarantee is stated.

    tau = T^(1/4) / sqrt(m) rounded up to at least 1, eta = 1 / (4 L sqrt(T)),
    gamma = T^(-5/8), mu = 2 L sqrt(N / m). The round count is T // tau.
    """
    if T < 1 or m < 1 or n_total < 1 or not L > 0:
        raise ParameterError(f"T, m, N and L must be positive, got T={T}, m={m}, N={n_total}, L={L}")
    # Guard against ceil() turning an exact integer ratio into the next integer.
    tau = max(1, math.ceil(T ** 0.25 / math.sqrt(m) - 1e-12))
    return HyperParams(
        eta=1.0 / (4.0 * L * math.sqrt(T)),
        gamma=float(T) ** -0.625,
        mu=2.0 * L * math.sqrt(n_total / m),
        tau=tau,
        m=m,
        batch=batch,
        rounds=T // tau,
    )

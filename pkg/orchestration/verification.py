"""
Verification suites: oracle and property checks run from the command line.

Each suite is a function of a ``VerificationContext`` returning check
results; ``verify`` runs the suites picked by a selector and collects a
report. A suite that raises is reported as a failed check, never as a crash.

Suites:
- projections: simplex projection against a brute-force grid oracle, ball projection
- gradients: analytic classifier gradients against central finite differences
- reduction: DRDM with mu = 0 against DRFA, and the drift-corrected step against SGD on the proximal objective
- unbiasedness: Monte Carlo means of the dual gradient, snapshot and participant estimators
- scalar_oracle: one DRDM and one SCAFFOLD round against straight-line scalar re-implementations
- duality_gap: saddle point, weak duality and convexity checks of the gap estimate
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from core.config import DatasetConfig, ExperimentConfig, PartitionConfig
from core.exceptions import ParameterError, UnsupportedConfigurationError
from core.geometry import (BallConstraint, SimplexPoint, project_ball, project_simplex, sample_participants,
                           sample_snapshot_index, sample_uniform_subset)
from core.numerics import finite_difference_gradient
from core.rng import StreamFactory
from data.datasets import Batch, synthetic_two_gaussians
from evaluation.diagnostics import GAP_TOLERANCE, duality_gap
from federation.algorithms.drdm import run_round_drdm
from federation.algorithms.drfa import run_round_drfa
from federation.algorithms.scaffold import run_round_scaffold
from federation.client import ClientState, GradientRule, drift_corrected_gradient, local_update_steps
from federation.hyperparams import HyperParams
from federation.server import (RoundPlan, RoundTranscript, ServerState, dual_gradient, server_aggregate,
                               server_update_c)
from federation.trainer import build_fleet
from models.classifiers import ModelShape, classifier_for
from models.objectives import QuadraticObjective, ShardObjective

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-12


@dataclass
class CheckResult:
    """Outcome of one named check."""
    suite: str
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    """Results of a verification run, in suite order."""
    suites: List[str] = field(default_factory=list)
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [result for result in self.results if not result.passed]

    def summary_lines(self) -> List[str]:
        lines = [f"{'PASS' if r.passed else 'FAIL'} {r.suite}/{r.name}: {r.detail}" for r in self.results]
        lines.append(f"{len(self.results) - len(self.failures)}/{len(self.results)} checks passed "
                     f"in suites {', '.join(self.suites)}")
        return lines


@dataclass(frozen=True)
class VerificationContext:
    """Sizes and injectable pieces shared by the suites.

    Attributes:
        seed: Seed of every stream the suites draw from
        projection_cases: Random inputs for the simplex grid oracle
        gradient_cases: Random cases per model shape for the gradient check
        reduction_rounds: Rounds compared between DRDM (mu = 0) and DRFA
        mc_samples: Monte Carlo samples per unbiasedness check
        gradient_rule: DRDM local direction under test
    """
    seed: int = 0
    projection_cases: int = 1000
    gradient_cases: int = 20
    reduction_rounds: int = 20
    mc_samples: int = 10_000
    gradient_rule: GradientRule = drift_corrected_gradient


Suite = Callable[[VerificationContext], List[CheckResult]]

_SUITES: Dict[str, Suite] = {}


def register_suite(name: str):
    def decorator(fn: Suite) -> Suite:
        _SUITES[name] = fn
        return fn
    return decorator


def suite_names() -> List[str]:
    return list(_SUITES)


def select_suites(selector: Union[None, str, Sequence[str]] = None) -> List[str]:
    """Suite names for a selector: None or 'all', a name, a comma-separated list, or a sequence."""
    if selector is None or selector == "all":
        return suite_names()
    names = [s.strip() for s in selector.split(",")] if isinstance(selector, str) else list(selector)
    unknown = [name for name in names if name not in _SUITES]
    if unknown or not names:
        raise ParameterError(f"Unknown verification suite(s) {unknown}, expected names from {suite_names()}")
    return names


def verify(selector: Union[None, str, Sequence[str]] = None,
           context: Optional[VerificationContext] = None) -> VerificationReport:
    """Run the selected suites and collect their results."""
    context = context or VerificationContext()
    report = VerificationReport(select_suites(selector))
    for name in report.suites:
        try:
            results = _SUITES[name](context)
        except Exception as e:
            logger.exception(f"Verification suite '{name}' raised")
            results = [CheckResult(name, "error", False, f"{type(e).__name__}: {e}")]
        for result in results:
            log = logger.info if result.passed else logger.error
            log(f"{'PASS' if result.passed else 'FAIL'} {result.suite}/{result.name} {result.detail}")
        report.results.extend(results)
    return report


def _max_abs(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        return math.inf
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def _within_standard_errors(samples: np.ndarray, truth: np.ndarray, k: float = 3.0):
    """Per-coordinate check |mean - truth| <= k * standard error; returns (ok, worst z-score)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64).T).T
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
    error = np.abs(mean - np.asarray(truth, dtype=np.float64).reshape(mean.shape))
    ok = bool(np.all(error <= k * se + EXACT_TOL))
    z = np.where(se > 0, error / np.where(se > 0, se, 1.0), np.where(error > EXACT_TOL, np.inf, 0.0))
    return ok, float(z.max())


# Projections

def simplex_grid(pitch: float = 1e-3) -> np.ndarray:
    """All points of the 3-dim simplex on a grid of the given pitch."""
    steps = int(round(1.0 / pitch))
    i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
    keep = i + j <= steps
    p1, p2 = i[keep] / steps, j[keep] / steps
    return np.column_stack([p1, p2, np.maximum(1.0 - p1 - p2, 0.0)])


@register_suite("projections")
def check_projections(ctx: VerificationContext) -> List[CheckResult]:
    gen = StreamFactory(ctx.seed).stream("verify_projections").generator
    grid = simplex_grid()
    grid_sq = np.einsum("ij,ij->i", grid, grid)
    worst_excess, infeasible, not_idempotent = -math.inf, 0, 0
    for _ in range(ctx.projection_cases):
        x = gen.uniform(-2.0, 2.0, size=3)
        p = project_simplex(x).weights
        if p.min() < 0 or abs(p.sum() - 1.0) > EXACT_TOL:
            infeasible += 1
        value = float((x - p) @ (x - p))
        grid_best = float((grid_sq - 2.0 * grid @ x).min() + x @ x)
        worst_excess = max(worst_excess, value - grid_best)
        if not np.array_equal(project_simplex(p).weights, p):
            not_idempotent += 1
    results = [
        CheckResult("projections", "simplex_grid_oracle", worst_excess <= 1e-6 and infeasible == 0,
                    f"worst excess over grid optimum {worst_excess:.2e}, {infeasible} infeasible"),
        CheckResult("projections", "simplex_idempotent", not_idempotent == 0,
                    f"{not_idempotent} of {ctx.projection_cases} moved on re-projection"),
    ]

    examples = [((2.0, 0.0), (1.0, 0.0)), ((0.7, 0.5), (0.6, 0.4)), ((0.3, 0.3, 0.4), (0.3, 0.3, 0.4))]
    example_error = max(_max_abs(project_simplex(x).weights, expected) for x, expected in examples)
    results.append(CheckResult("projections", "simplex_examples", example_error <= EXACT_TOL,
                               f"max error {example_error:.1e}"))

    ball = BallConstraint(radius=1.0)
    ball_ok = True
    for _ in range(200):
        x = gen.normal(size=5) * gen.uniform(0.1, 3.0)
        y = project_ball(x, ball)
        inside = np.linalg.norm(x) <= ball.radius
        ball_ok &= np.linalg.norm(y) <= ball.radius * (1 + 1e-12)
        ball_ok &= (not inside) or np.array_equal(x, y)
        ball_ok &= np.array_equal(project_ball(y, ball), y)
    results.append(CheckResult("projections", "ball_projection", bool(ball_ok), "200 random vectors"))
    return results


# Gradients

@register_suite("gradients")
def check_gradients(ctx: VerificationContext) -> List[CheckResult]:
    gen = StreamFactory(ctx.seed).stream("verify_gradients").generator
    results = []
    for shape in (ModelShape(4, 3), ModelShape(4, 3, 5)):
        classifier = classifier_for(shape)
        worst = 0.0
        for _ in range(ctx.gradient_cases):
            flat = gen.normal(scale=0.5, size=shape.param_count)
            batch = Batch(gen.normal(size=(6, shape.input_dim)), gen.integers(0, shape.num_classes, size=6))
            analytic = classifier.loss_grad(flat, batch).grad
            numeric = finite_difference_gradient(lambda v: classifier.loss(v, batch), flat, h=1e-5)
            scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
            worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
        label = "linear" if shape.is_linear else "mlp"
        results.append(CheckResult("gradients", f"finite_difference_{label}", worst < 1e-4,
                                   f"worst relative error {worst:.2e} over {ctx.gradient_cases} cases"))
    return results


# Reduction

def synthetic_fleet_config(num_clients: int = 6, hp: Optional[HyperParams] = None, seed: int = 0,
                           algorithm: str = "drdm") -> ExperimentConfig:
    """A small two-Gaussian fleet used by the reduction and determinism checks."""
    hp = hp or HyperParams(eta=0.05, gamma=0.01, mu=0.0, tau=3, m=3, batch=8, rounds=20)
    return ExperimentConfig(
        algorithm=algorithm, seed=seed, monte_carlo_runs=1, num_clients=num_clients,
        dataset=DatasetConfig(n_per_class=60, test_n_per_class=30, feature_dim=2, separation=3.0),
        partition=PartitionConfig(alpha=0.5, sigma=0.0),
        hyperparams=hp,
    )


def transcript_difference(a: RoundTranscript, b: RoundTranscript) -> float:
    """Largest coordinate difference between two transcripts; infinite if their plans differ."""
    if a.plan != b.plan or len(a.uploads) != len(b.uploads):
        return math.inf
    diffs = [_max_abs(a.server.w_bar, b.server.w_bar), _max_abs(a.server.lam.weights, b.server.lam.weights)]
    for ua, ub in zip(a.uploads, b.uploads):
        if ua.client_id != ub.client_id:
            return math.inf
        diffs += [_max_abs(ua.w_final, ub.w_final), _max_abs(ua.w_snapshot, ub.w_snapshot)]
    if (a.snapshot_model is None) != (b.snapshot_model is None):
        return math.inf
    if a.snapshot_model is not None:
        diffs.append(_max_abs(a.snapshot_model, b.snapshot_model))
    if sorted(a.dual_losses) != sorted(b.dual_losses):
        return math.inf
    diffs += [abs(a.dual_losses[k] - b.dual_losses[k]) for k in a.dual_losses]
    return max(diffs)


def compare_drdm_with_drfa(cfg: ExperimentConfig, rounds: int,
                           gradient_rule: GradientRule = drift_corrected_gradient) -> float:
    """Run DRDM with mu = 0 and DRFA side by side on identical fleets; largest transcript difference."""
    hp = cfg.hyperparams
    if hp.mu != 0:
        raise ParameterError("The DRFA comparison needs mu = 0")
    streams_a, streams_b = StreamFactory(cfg.seed), StreamFactory(cfg.seed)
    fleet_a, fleet_b = build_fleet(cfg, streams_a), build_fleet(cfg, streams_b)
    server_a = ServerState.initial(fleet_a.w0, cfg.num_clients)
    server_b = ServerState.initial(fleet_b.w0, cfg.num_clients)
    worst = 0.0
    for _ in range(rounds):
        ta = run_round_drdm(server_a, fleet_a.clients, hp, streams_a, gradient_rule=gradient_rule)
        tb = run_round_drfa(server_b, fleet_b.clients, hp, streams_b)
        worst = max(worst, transcript_difference(ta, tb))
        server_a, server_b = ta.server, tb.server
    return worst


def proximal_step_difference(cfg: ExperimentConfig, mu: float,
                             gradient_rule: GradientRule = drift_corrected_gradient) -> float:
    """Drift-corrected local steps against SGD on f_i(w) - <h_i, w> + mu/2 ||w - w_bar||^2."""
    streams = StreamFactory(cfg.seed)
    fleet = build_fleet(cfg, streams)
    hp = replace(cfg.hyperparams, mu=mu)
    gen = streams.stream("verify_proximal").generator
    client = fleet.clients[0]
    client.memory = 0.1 * gen.normal(size=client.memory.size)
    w_bar = fleet.w0 + 0.1 * gen.normal(size=fleet.w0.size)
    ball = BallConstraint()
    memory = client.memory

    rng = streams.stream("local_steps", client=client.client_id, round=0)
    update = local_update_steps(client, w_bar, hp, 0, None, rng, ball,
                                lambda g, w: gradient_rule(g, memory, w_bar, w, hp.mu))
    replayed = rng.replay()
    w = w_bar.copy()
    for _ in range(hp.tau):
        g = client.objective.stochastic_loss_grad(w, replayed, hp.batch).grad
        w = project_ball(w - hp.eta * (g - memory + hp.mu * (w - w_bar)), ball)
    return _max_abs(update.w_final, w)


@register_suite("reduction")
def check_reduction(ctx: VerificationContext) -> List[CheckResult]:
    cfg = synthetic_fleet_config(seed=ctx.seed)
    drfa_diff = compare_drdm_with_drfa(cfg, ctx.reduction_rounds, ctx.gradient_rule)
    prox_diff = proximal_step_difference(cfg, mu=0.5, gradient_rule=ctx.gradient_rule)
    return [
        CheckResult("reduction", "drdm_mu0_equals_drfa", drfa_diff <= EXACT_TOL,
                    f"max difference {drfa_diff:.1e} over {ctx.reduction_rounds} rounds"),
        CheckResult("reduction", "drift_step_is_proximal_sgd", prox_diff <= EXACT_TOL,
                    f"max difference {prox_diff:.1e}"),
    ]


# Unbiasedness

TOY_CENTERS = (0.0, 1.0, 3.0)


def quadratic_fleet(centers: Sequence[float], w0: float = 0.0) -> List[ClientState]:
    """1-D noise-free quadratic clients f_i(w) = 1/2 (w - a_i)^2."""
    return [ClientState.create(i, QuadraticObjective([a]), np.array([w0])) for i, a in enumerate(centers)]


def dual_gradient_samples(clients: Sequence[ClientState], w: np.ndarray, hp: HyperParams,
                          samples: int, seed: int) -> np.ndarray:
    """Stochastic dual gradients from independently re-planned dual evaluation sets."""
    streams = StreamFactory(seed)
    rows = []
    for k in range(samples):
        subset = sample_uniform_subset(len(clients), hp.m, streams.stream("dual_set", round=k))
        v, _ = dual_gradient(w, clients, subset, hp, k, streams)
        rows.append(v)
    return np.vstack(rows)


def snapshot_models(clients: Sequence[ClientState], server: ServerState, participants: Sequence[int],
                    hp: HyperParams, streams: StreamFactory) -> Dict[int, np.ndarray]:
    """Aggregated snapshot model w^(t) for every iteration t of round ``server.round``."""
    s = server.round
    models = {}
    for t in range(s * hp.tau + 1, (s + 1) * hp.tau + 1):
        snaps = [local_update_steps(clients[i], server.w_bar, hp, s, t,
                                    streams.stream("local_steps", client=i, round=s), BallConstraint()).w_snapshot
                 for i in participants]
        c_snapshot = server_update_c(server.c, snaps, server.w_bar, hp.mu, len(clients), mode=hp.c_update)
        models[t] = server_aggregate(snaps, c_snapshot, hp.mu, hp.m)
    return models


@register_suite("unbiasedness")
def check_unbiasedness(ctx: VerificationContext) -> List[CheckResult]:
    clients = quadratic_fleet(TOY_CENTERS)
    n = len(clients)
    results = []

    hp = HyperParams(eta=0.1, gamma=0.01, mu=0.5, tau=4, m=2, batch=1, rounds=1)
    w = np.array([0.5])
    v = dual_gradient_samples(clients, w, hp, ctx.mc_samples, ctx.seed)
    truth = np.array([c.objective.full_loss(w) for c in clients])
    ok, z = _within_standard_errors(v, truth)
    results.append(CheckResult("unbiasedness", "dual_gradient", ok, f"worst z-score {z:.2f}"))

    lam = SimplexPoint(np.array([0.2, 0.3, 0.5]))
    grads = np.array([c.objective.full_gradient(w)[0] for c in clients])
    streams = StreamFactory(ctx.seed)
    estimates = np.array([
        grads[list(sample_participants(lam, hp.m, streams.stream("participants", round=k)))].mean()
        for k in range(ctx.mc_samples)
    ])
    ok, z = _within_standard_errors(estimates, np.array([lam.weights @ grads]))
    results.append(CheckResult("unbiasedness", "participant_sampling", ok, f"worst z-score {z:.2f}"))

    hp_full = HyperParams(eta=0.1, gamma=0.01, mu=0.5, tau=4, m=n, batch=1, rounds=1)
    for client, h in zip(clients, (0.05, -0.1, 0.02)):
        client.memory = np.array([h])
    server = ServerState(np.array([0.2]), np.array([0.01]), SimplexPoint.uniform(n), 0)
    participants = (0, 2, 2)
    models = snapshot_models(clients, server, participants, hp_full, streams)
    losses = {t: np.array([c.objective.full_loss(model) for c in clients]) for t, model in models.items()}
    truth = sum(losses.values())
    draws = np.vstack([
        hp_full.tau * losses[sample_snapshot_index(0, hp_full.tau, streams.stream("snapshot", round=k))]
        for k in range(ctx.mc_samples)
    ])
    ok, z = _within_standard_errors(draws, truth)
    results.append(CheckResult("unbiasedness", "snapshot", ok, f"worst z-score {z:.2f}"))
    return results


# Scalar oracles

def scalar_drdm_round(centers, memories, w_bar, c, lam, s, plan: RoundPlan, hp: HyperParams):
    """One DRDM round on 1-D quadratics in plain floats.

    Returns (w_bar_new, c_new, lam_new, snapshot_model, memories_new).
    """
    n, m = len(centers), len(plan.participants)
    finals, snaps = [], []
    for i in plan.participants:
        w, snap = w_bar, None
        for k in range(hp.tau):
            d = (w - centers[i]) - memories[i] - hp.mu * (w_bar - w)
            w = w - hp.eta * d
            if s * hp.tau + k + 1 == plan.snapshot_t:
                snap = w
        finals.append(w)
        snaps.append(snap)
    new_memories = list(memories)
    for i, w in zip(plan.participants, finals):
        new_memories[i] = new_memories[i] - hp.mu * (w - w_bar)

    def corrected(models):
        if hp.c_update == "per_client_w_bar":
            displacement = sum(x - w_bar for x in models)
        else:
            displacement = sum(models) - w_bar
        return c - hp.mu / n * displacement

    c_snap, c_new = corrected(snaps), corrected(finals)
    snapshot_model = sum(snaps) / m - c_snap / hp.mu
    w_new = sum(finals) / m - c_new / hp.mu
    scale = n / len(plan.dual_eval_set)
    shifted = list(lam)
    for i in plan.dual_eval_set:
        shifted[i] += hp.tau * hp.gamma * scale * 0.5 * (snapshot_model - centers[i]) ** 2
    ordered = sorted(shifted, reverse=True)
    theta, running = 0.0, 0.0
    for k, u in enumerate(ordered, start=1):
        running += u
        if u - (running - 1.0) / k > 0:
            theta = (running - 1.0) / k
    lam_new = [max(x - theta, 0.0) for x in shifted]
    return w_new, c_new, lam_new, snapshot_model, new_memories


def scalar_scaffold_round(centers, controls, x, c, participants, hp: HyperParams):
    """One SCAFFOLD round on 1-D quadratics in plain floats.

    Returns (x_new, c_new, controls_new).
    """
    n = len(centers)
    models, deltas = [], []
    new_controls = list(controls)
    for i in participants:
        c_i = controls[i]
        y = x
        for _ in range(hp.tau):
            y = y - hp.eta * ((y - centers[i]) - c_i + c)
        c_i_new = c_i - c + (x - y) / (hp.tau * hp.eta)
        models.append(y)
        deltas.append(c_i_new - c_i)
        new_controls[i] = c_i_new
    return sum(models) / len(models), c + sum(deltas) / n, new_controls


ORACLE_CENTERS = (-1.0, 0.0, 0.5, 2.0)


def drdm_oracle_difference(seed: int = 0) -> float:
    memories = [0.1, -0.2, 0.0, 0.05]
    lam = [0.1, 0.2, 0.3, 0.4]
    hp = HyperParams(eta=0.1, gamma=0.05, mu=0.3, tau=3, m=3, batch=1, rounds=3)
    clients = quadratic_fleet(ORACLE_CENTERS, w0=0.4)
    for client, h in zip(clients, memories):
        client.memory = np.array([h])
    server = ServerState(np.array([0.4]), np.array([0.05]), SimplexPoint(np.array(lam)), 2)
    transcript = run_round_drdm(server, clients, hp, StreamFactory(seed))
    expected = scalar_drdm_round(ORACLE_CENTERS, memories, 0.4, 0.05, lam, 2, transcript.plan, hp)
    w_new, c_new, lam_new, snapshot_model, new_memories = expected
    return max(
        _max_abs(transcript.server.w_bar, [w_new]),
        _max_abs(transcript.server.c, [c_new]),
        _max_abs(transcript.server.lam.weights, lam_new),
        _max_abs(transcript.snapshot_model, [snapshot_model]),
        _max_abs([client.memory[0] for client in clients], new_memories),
    )


def scaffold_oracle_difference(seed: int = 0) -> float:
    controls = [0.01, -0.02, 0.0, 0.03]
    hp = HyperParams(eta=0.1, gamma=0.05, mu=0.0, tau=3, m=2, batch=1, rounds=1)
    clients = quadratic_fleet(ORACLE_CENTERS, w0=0.4)
    for client, c_i in zip(clients, controls):
        if c_i != 0.0:
            client.control = np.array([c_i])
    server = ServerState(np.array([0.4]), np.array([0.05]), SimplexPoint.uniform(len(clients)), 1)
    transcript = run_round_scaffold(server, clients, hp, StreamFactory(seed))
    x_new, c_new, new_controls = scalar_scaffold_round(ORACLE_CENTERS, controls, 0.4, 0.05,
                                                       transcript.plan.participants, hp)
    actual_controls = [0.0 if client.control is None else client.control[0] for client in clients]
    return max(
        _max_abs(transcript.server.w_bar, [x_new]),
        _max_abs(transcript.server.c, [c_new]),
        _max_abs(actual_controls, new_controls),
    )


@register_suite("scalar_oracle")
def check_scalar_oracles(ctx: VerificationContext) -> List[CheckResult]:
    drdm_diff = drdm_oracle_difference(ctx.seed)
    scaffold_diff = scaffold_oracle_difference(ctx.seed)
    return [
        CheckResult("scalar_oracle", "drdm_round", drdm_diff <= EXACT_TOL, f"max difference {drdm_diff:.1e}"),
        CheckResult("scalar_oracle", "scaffold_round", scaffold_diff <= EXACT_TOL,
                    f"max difference {scaffold_diff:.1e}"),
    ]


# Duality gap

@register_suite("duality_gap")
def check_duality_gap(ctx: VerificationContext) -> List[CheckResult]:
    objectives = [QuadraticObjective([0.0]), QuadraticObjective([2.0])]
    saddle = duality_gap(np.array([1.0]), SimplexPoint.uniform(2), objectives)
    results = [CheckResult("duality_gap", "closed_form_saddle", abs(saddle.gap) < GAP_TOLERANCE,
                           f"gap {saddle.gap:.2e}")]

    gen = StreamFactory(ctx.seed).stream("verify_duality").generator
    worst = math.inf
    for _ in range(50):
        w = gen.uniform(-3.0, 3.0, size=1)
        lam = project_simplex(gen.uniform(0.0, 1.0, size=2))
        worst = min(worst, duality_gap(w, lam, objectives).gap)
    results.append(CheckResult("duality_gap", "weak_duality", worst >= -GAP_TOLERANCE,
                               f"smallest gap {worst:.2e} over 50 pairs"))

    far = duality_gap(np.array([10.0]), SimplexPoint.uniform(2), objectives)
    results.append(CheckResult("duality_gap", "far_from_optimum", far.gap > 0, f"gap {far.gap:.3f}"))

    data = synthetic_two_gaussians(10, 2, 3.0, StreamFactory(ctx.seed).stream("verify_duality_data"))
    mlp = ShardObjective(classifier_for(ModelShape(2, 2, 4)), data, np.arange(len(data)))
    try:
        duality_gap(np.zeros(mlp.dim), SimplexPoint.uniform(1), [mlp])
        rejected = False
    except UnsupportedConfigurationError:
        rejected = True
    results.append(CheckResult("duality_gap", "rejects_non_convex", rejected, "one-hidden-layer model"))
    return results

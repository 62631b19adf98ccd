#!/usr/bin/env python
"""
DRDM laboratory command line

Subcommands:
    run           Monte Carlo training runs, writes metrics.csv and summary.csv
    sweep-tau     Rounds to the worst-case accuracy target per local-step count
    sweep-energy  Energy-optimal local-step count per SNR and bandwidth
    compare       Final accuracies of DRDM and the baselines on shared seeds
    sweep-heterogeneity
                  The comparison over Dirichlet alpha and Zipf sigma grids
    verify        Oracle and property suites

Exit codes: 0 success, 1 verification failure, 2 configuration error, 3 I/O error,
4 any other run-time failure.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

# Ensure the project root is in Python path
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, PROJECT_ROOT)

from core.config import (ConfigurationError, ExperimentConfig, dump_config, load_config, parse_config,  # noqa: E402
                         with_overrides)
from core.exceptions import FormatError, LabError, ParameterError  # noqa: E402
from infrastructure.monitoring import configure_logging  # noqa: E402

logger = logging.getLogger("run_drdm")

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3
EXIT_RUNTIME_ERROR = 4


def parse_grid(text: Optional[str], cast=float) -> Optional[List]:
    """Comma-separated list, e.g. '5,10,20'."""
    if text is None:
        return None
    try:
        values = [cast(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"invalid grid {text!r}: {e}", "grid") from e
    if not values:
        raise ConfigurationError(f"empty grid {text!r}", "grid")
    return values


def resolve_config(args) -> ExperimentConfig:
    """Config file (or defaults) with command-line overrides applied."""
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.seed is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def write_resolved_config(cfg: ExperimentConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.yaml").write_text(dump_config(cfg), encoding="utf-8")


def cmd_run(args) -> int:
    from orchestration.experiment import run_experiment
    from orchestration.results import emit_experiment

    cfg = resolve_config(args)
    out_dir = Path(args.out)
    result = run_experiment(cfg, threads=args.threads, log_every=args.log_every, slot_threads=args.slot_threads)
    write_resolved_config(cfg, out_dir)
    paths = emit_experiment(result, out_dir)
    print(f"Wrote {paths['metrics']} and {paths['summary']}")
    return EXIT_OK


def cmd_sweep_tau(args) -> int:
    from orchestration.results import write_table
    from orchestration.sweeps import sweep_tau, tau_trend_by_run

    cfg = resolve_config(args)
    table = sweep_tau(cfg, parse_grid(args.grid, int), args.target, threads=args.threads,
                      slot_threads=args.slot_threads)
    path = write_table(table, Path(args.out) / "tau_sweep.csv")
    trend = tau_trend_by_run(table)
    print(f"Wrote {path}; rounds-to-target non-increasing in tau for "
          f"{sum(trend.values())} of {len(trend)} runs")
    return EXIT_OK


def cmd_sweep_energy(args) -> int:
    from orchestration.results import write_table
    from orchestration.sweeps import sweep_energy, sweep_tau

    cfg = resolve_config(args)
    out_dir = Path(args.out)
    tau_table = sweep_tau(cfg, parse_grid(args.grid, int), args.target, threads=args.threads,
                          slot_threads=args.slot_threads)
    write_table(tau_table, out_dir / "tau_sweep.csv")
    table = sweep_energy(cfg, parse_grid(args.snr_grid), parse_grid(args.bandwidth_grid), tau_table)
    path = write_table(table, out_dir / "energy_sweep.csv")
    print(f"Wrote {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    from orchestration.results import write_table
    from orchestration.sweeps import compare_algorithms, mean_accuracy

    cfg = resolve_config(args)
    table = compare_algorithms(cfg, parse_grid(args.algorithms, str), threads=args.threads,
                               slot_threads=args.slot_threads)
    path = write_table(table, Path(args.out) / "comparison.csv")
    print(f"Wrote {path}")
    for row in mean_accuracy(table, ["algorithm"]).itertuples(index=False):
        print(f"{row.algorithm}: avg_acc={row.avg_acc:.4f} worst_acc={row.worst_acc:.4f} std_acc={row.std_acc:.4f}")
    return EXIT_OK


def cmd_sweep_heterogeneity(args) -> int:
    from orchestration.results import write_table
    from orchestration.sweeps import sweep_heterogeneity

    cfg = resolve_config(args)
    table = sweep_heterogeneity(cfg, parse_grid(args.alpha_grid), parse_grid(args.sigma_grid),
                                parse_grid(args.algorithms, str), threads=args.threads,
                                slot_threads=args.slot_threads)
    path = write_table(table, Path(args.out) / "heterogeneity.csv")
    print(f"Wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from orchestration.verification import VerificationContext, verify

    seed = args.seed if args.seed is not None else 0
    report = verify(args.suite, VerificationContext(seed=seed))
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="DRDM federated learning laboratory")
    parser.add_argument("--log-level", default=os.environ.get("DRDM_LOG_LEVEL", "INFO"),
                        help="Root log level")
    parser.add_argument("--json-logs", action="store_true", help="Emit JSON log records")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("--config", help="YAML experiment configuration")
        sub.add_argument("--seed", type=int, help="Master seed (overrides the config)")
        sub.add_argument("--threads", type=int, default=1, help="Worker threads over runs and sweep cells")
        sub.add_argument("--slot-threads", type=int, default=1,
                         help="Worker threads over the participant slots of each round")
        sub.add_argument("--out", default="results", help="Output directory")

    run = subparsers.add_parser("run", help="Monte Carlo training runs")
    common(run)
    run.add_argument("--log-every", type=int, default=10, help="Progress log cadence in rounds (0 = off)")
    run.set_defaults(handler=cmd_run)

    for name, handler in (("sweep-tau", cmd_sweep_tau), ("sweep-energy", cmd_sweep_energy)):
        sub = subparsers.add_parser(name, help=f"{name.replace('-', ' ')} table")
        common(sub)
        sub.add_argument("--grid", help="Local-step grid, e.g. 5,10,20,30")
        sub.add_argument("--target", type=float, help="Worst-case accuracy target")
        if name == "sweep-energy":
            sub.add_argument("--snr-grid", help="SNR values in dB, e.g. 0,5,10,15,20")
            sub.add_argument("--bandwidth-grid", help="Bandwidths in Hz, e.g. 1e6,2e6")
        sub.set_defaults(handler=handler)

    compare = subparsers.add_parser("compare", help="DRDM against the baselines")
    common(compare)
    compare.add_argument("--algorithms", help="Algorithm names, e.g. drdm,fedavg")
    compare.set_defaults(handler=cmd_compare)

    hetero = subparsers.add_parser("sweep-heterogeneity", help="comparison over heterogeneity levels")
    common(hetero)
    hetero.add_argument("--alpha-grid", help="Dirichlet concentrations at equal sizes, e.g. 0.1,0.3,0.5,0.7")
    hetero.add_argument("--sigma-grid", help="Zipf exponents at the configured alpha, e.g. 0.3,0.5,0.7")
    hetero.add_argument("--algorithms", help="Algorithm names, e.g. drdm,fedavg")
    hetero.set_defaults(handler=cmd_sweep_heterogeneity)

    verify_parser = subparsers.add_parser("verify", help="Run verification suites")
    verify_parser.add_argument("--suite", default="all",
                               help="Suite name, comma-separated names, or 'all'")
    verify_parser.add_argument("--seed", type=int, help="Seed of the suites' random draws")
    verify_parser.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point; returns the process exit code.
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, json_output=args.json_logs)
    for flag in ("threads", "slot_threads"):
        if getattr(args, flag, 1) < 1:
            logger.error(f"--{flag.replace('_', '-')} must be at least 1")
            return EXIT_CONFIG_ERROR
    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except ParameterError as e:
        logger.error(f"Invalid parameter: {e}")
        return EXIT_CONFIG_ERROR
    except (OSError, FormatError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO_ERROR
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

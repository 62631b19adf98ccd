"""
Integration Tests for Monte Carlo experiments, CSV output and the sweeps
"""

import os
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

# Add project root to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from core.config import load_config
from core.exceptions import ParameterError
from evaluation.energy import EnergyParams, optimal_tau_search, total_energy
from federation.hyperparams import HyperParams
from orchestration.experiment import METRIC_COLUMNS, RunResult, run_experiment, run_seeds
from orchestration.results import ResultsIOError, emit_experiment, write_table
from federation.trainer import run_training
from orchestration.sweeps import (COMPARISON_COLUMNS, HETEROGENEITY_COLUMNS, algorithm_config, compare_algorithms,
                                 heterogeneity_settings, mean_accuracy, mean_rounds_by_tau, sweep_energy,
                                 sweep_heterogeneity, sweep_tau, tau_trend_by_run)
from orchestration.verification import synthetic_fleet_config

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def experiment_config(runs=3, rounds=10):
    hp = HyperParams(eta=0.05, gamma=0.01, mu=0.1, tau=3, m=3, batch=8, rounds=rounds,
                     c_update="per_client_w_bar")
    return replace(synthetic_fleet_config(hp=hp, seed=5), monte_carlo_runs=runs, energy=EnergyParams())


class TestExperimentOutput(unittest.TestCase):
    """Test run fan-out and the emitted CSV files."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_csv_identical_across_thread_counts(self):
        cfg = experiment_config()
        single = emit_experiment(run_experiment(cfg, threads=1), self.out / "t1")
        multi = emit_experiment(run_experiment(cfg, threads=8), self.out / "t8")
        self.assertEqual(single["metrics"].read_bytes(), multi["metrics"].read_bytes())
        self.assertEqual(single["summary"].read_bytes(), multi["summary"].read_bytes())

    def test_csv_identical_across_slot_threads(self):
        cfg = experiment_config(runs=2)
        single = emit_experiment(run_experiment(cfg, threads=2, slot_threads=1), self.out / "s1")
        multi = emit_experiment(run_experiment(cfg, threads=2, slot_threads=3), self.out / "s3")
        self.assertEqual(single["metrics"].read_bytes(), multi["metrics"].read_bytes())

    def test_task_statistics(self):
        result = run_experiment(experiment_config(runs=2, rounds=2), threads=2)
        stats = result.task_stats
        self.assertEqual((stats["workers"], stats["total_tasks"], stats["completed"], stats["failed"]), (2, 2, 2, 0))
        self.assertGreaterEqual(stats["mean_duration"], 0.0)

    def test_invalid_thread_counts(self):
        for kwargs in ({"threads": 0}, {"slot_threads": 0}):
            with self.assertRaises(ParameterError, msg=str(kwargs)):
                run_experiment(experiment_config(runs=1, rounds=1), **kwargs)

    def test_metrics_csv_layout(self):
        cfg = experiment_config(runs=2, rounds=4)
        paths = emit_experiment(run_experiment(cfg), self.out)
        data = paths["metrics"].read_bytes()
        self.assertNotIn(b"\r", data)
        lines = data.decode("utf-8").splitlines()
        self.assertEqual(lines[0], ",".join(METRIC_COLUMNS))
        self.assertEqual(len(lines) - 1, 2 * (4 + 1))
        first = lines[1].split(",")
        self.assertEqual(first[:2], ["0", "0"])
        for field in first[2:]:
            self.assertEqual(len(field.split(".")[1]), 6)

    def test_summary_single_run(self):
        result = run_experiment(experiment_config(runs=1, rounds=3))
        summary = result.summary()
        self.assertEqual(list(summary["round"]), [0, 1, 2, 3])
        self.assertTrue((summary["runs"] == 1).all())
        self.assertTrue((summary["worst_acc_std"] == 0.0).all())
        frame = result.to_frame()
        np.testing.assert_array_equal(summary["avg_acc_mean"].to_numpy(), frame["avg_acc"].to_numpy())

    def test_summary_columns(self):
        summary = run_experiment(experiment_config(runs=2, rounds=2)).summary()
        self.assertEqual(list(summary.columns),
                         ["round", "runs", "avg_acc_mean", "avg_acc_std", "worst_acc_mean", "worst_acc_std",
                          "std_acc_mean", "std_acc_std", "energy_j_mean", "energy_j_std"])

    def test_runs_are_independent_seeds(self):
        cfg = experiment_config(runs=3)
        seeds = run_seeds(cfg)
        self.assertEqual(len(set(seeds)), 3)
        self.assertEqual(run_seeds(cfg, runs=2), seeds[:2])
        result = run_experiment(cfg)
        self.assertIsInstance(result, RunResult)
        self.assertEqual(result.seeds, seeds)
        self.assertEqual(result.runs, 3)

    def test_write_failure(self):
        blocker = self.out / "file"
        blocker.write_text("x")
        with self.assertRaises(ResultsIOError):
            write_table(pd.DataFrame({"a": [1]}), blocker / "table.csv")

    def test_missing_values_written_as_na(self):
        table = pd.DataFrame({"tau": [1, 2], "rounds_to_target": pd.array([3, None], dtype="Int64")})
        path = write_table(table, self.out / "na.csv")
        self.assertEqual(path.read_text(), "tau,rounds_to_target\n1,3\n2,NA\n")


class TestSweeps(unittest.TestCase):
    """Test the tau and energy sweeps."""

    def test_sweep_tau_table(self):
        cfg = experiment_config(runs=2, rounds=15)
        table = sweep_tau(cfg, grid=[1, 3], target_worst_acc=0.0)
        self.assertEqual(list(table.columns), ["tau", "run", "rounds_to_target"])
        self.assertEqual(len(table), 4)
        self.assertEqual(str(table["rounds_to_target"].dtype), "Int64")
        self.assertTrue((table["rounds_to_target"] == 0).all())

    def test_mean_rounds_and_trend(self):
        table = pd.DataFrame({
            "tau": [5, 5, 10, 10, 20, 20],
            "run": [0, 1, 0, 1, 0, 1],
            "rounds_to_target": pd.array([40, 50, 30, None, 20, 60], dtype="Int64"),
        })
        self.assertEqual(mean_rounds_by_tau(table), {5: 45.0, 10: None, 20: 40.0})
        self.assertEqual(tau_trend_by_run(table), {0: True, 1: False})

    def test_energy_optimal_tau_non_increasing_in_snr(self):
        cfg = experiment_config()
        table = pd.DataFrame({
            "tau": [5, 10, 20, 30],
            "run": [0, 0, 0, 0],
            "rounds_to_target": pd.array([40, 25, 15, 12], dtype="Int64"),
        })
        energy = sweep_energy(cfg, snr_grid=[0, 5, 10, 15, 20], bandwidth_grid=[1e6], tau_table=table)
        self.assertEqual(list(energy.columns), ["snr_db", "bandwidth_hz", "opt_tau", "energy_j"])
        self.assertEqual(len(energy), 5)
        taus = energy["opt_tau"].tolist()
        self.assertTrue(all(b <= a for a, b in zip(taus, taus[1:])))
        self.assertTrue((energy["energy_j"] > 0).all())

    def test_energy_sweep_grid_product(self):
        table = pd.DataFrame({"tau": [1, 2], "run": [0, 0],
                              "rounds_to_target": pd.array([10, 6], dtype="Int64")})
        energy = sweep_energy(experiment_config(), snr_grid=[0, 10], bandwidth_grid=[1e6, 2e6], tau_table=table)
        self.assertEqual(len(energy), 4)
        self.assertEqual(list(energy["bandwidth_hz"]), [1e6, 2e6, 1e6, 2e6])

    def test_optimal_tau_search_matches_tau_sweep(self):
        cfg = experiment_config(runs=1, rounds=20)
        table = sweep_tau(cfg, grid=[1, 3], target_worst_acc=0.5)
        ep = EnergyParams()
        result = optimal_tau_search([1, 3], 0.5, ep, replace(cfg, seed=run_seeds(cfg)[0]))
        swept = {int(tau): (None if pd.isna(rounds) else int(rounds))
                 for tau, rounds in zip(table["tau"], table["rounds_to_target"])}
        self.assertEqual(result.rounds, swept)
        for tau, rounds in result.rounds.items():
            if rounds is None:
                self.assertIsNone(result.energies[tau])
            else:
                expected = total_energy(rounds, replace(cfg.hyperparams, tau=tau), [ep] * cfg.hyperparams.m)
                self.assertAlmostEqual(result.energies[tau], expected)
        reached = {tau: e for tau, e in result.energies.items() if e is not None}
        if reached:
            self.assertEqual(result.opt_tau, min(reached, key=lambda tau: (reached[tau], tau)))
        else:
            self.assertFalse(result.reached)


class TestAlgorithmComparison(unittest.TestCase):
    """Test the baseline comparison and the heterogeneity sweep."""

    def test_algorithm_config(self):
        cfg = experiment_config()
        self.assertEqual(algorithm_config(cfg, "drdm"), cfg)
        fedavg = algorithm_config(cfg, "fedavg")
        self.assertEqual((fedavg.algorithm, fedavg.hyperparams.mu), ("fedavg", 0.0))
        self.assertEqual(fedavg.hyperparams.tau, cfg.hyperparams.tau)
        with self.assertRaises(ParameterError):
            algorithm_config(cfg, "fedprox")

    def test_compare_algorithms(self):
        cfg = experiment_config(runs=2, rounds=5)
        table = compare_algorithms(cfg, threads=2)
        self.assertEqual(list(table.columns), COMPARISON_COLUMNS)
        self.assertEqual(list(table["algorithm"]), ["drdm", "drdm", "drfa", "drfa", "fedavg", "fedavg",
                                                    "scaffold", "scaffold"])
        self.assertTrue((table["rounds"] == 5).all())
        self.assertTrue(((table["worst_acc"] >= 0) & (table["worst_acc"] <= table["avg_acc"])).all())
        seeds = run_seeds(cfg)
        for name in ("drdm", "scaffold"):
            expected = run_training(algorithm_config(cfg, name), seed=seeds[1])[-1]
            row = table[(table["algorithm"] == name) & (table["run"] == 1)].iloc[0]
            self.assertEqual(row["worst_acc"], expected.worst_acc, msg=name)
            self.assertEqual(row["avg_acc"], expected.avg_acc, msg=name)
        means = mean_accuracy(table, ["algorithm"])
        self.assertEqual(list(means["algorithm"]), ["drdm", "drfa", "fedavg", "scaffold"])

    def test_comparison_identical_across_thread_counts(self):
        cfg = experiment_config(runs=2, rounds=3)
        with tempfile.TemporaryDirectory() as tmp:
            single = write_table(compare_algorithms(cfg, ["drdm", "fedavg"]), Path(tmp) / "a.csv")
            multi = write_table(compare_algorithms(cfg, ["drdm", "fedavg"], threads=4, slot_threads=2),
                                Path(tmp) / "b.csv")
            self.assertEqual(single.read_bytes(), multi.read_bytes())

    def test_compare_rejects_empty_list(self):
        with self.assertRaises(ParameterError):
            compare_algorithms(experiment_config(runs=1, rounds=1), [])

    def test_heterogeneity_settings(self):
        self.assertEqual(heterogeneity_settings(0.1, [0.1, 0.3], [0.0, 0.5]),
                         [(0.1, 0.0), (0.3, 0.0), (0.1, 0.5)])
        self.assertEqual(heterogeneity_settings(0.2, [], [0.3]), [(0.2, 0.3)])
        for alphas, sigmas in (([0.0], []), ([0.1], [-0.1]), ([], [])):
            with self.assertRaises(ParameterError):
                heterogeneity_settings(0.1, alphas, sigmas)

    def test_sweep_heterogeneity(self):
        cfg = experiment_config(runs=1, rounds=3)
        table = sweep_heterogeneity(cfg, alpha_grid=[0.1, 1.0], sigma_grid=[0.7], algorithms=["drdm", "fedavg"],
                                    threads=3)
        self.assertEqual(list(table.columns), HETEROGENEITY_COLUMNS)
        self.assertEqual(len(table), 3 * 2)
        settings = list(dict.fromkeys(zip(table["alpha"], table["sigma"])))
        self.assertEqual(settings, [(0.1, 0.0), (1.0, 0.0), (cfg.partition.alpha, 0.7)])
        skewed = replace(cfg, partition=replace(cfg.partition, sigma=0.7))
        expected = run_training(algorithm_config(skewed, "fedavg"), seed=run_seeds(cfg)[0])[-1]
        row = table[(table["sigma"] == 0.7) & (table["algorithm"] == "fedavg")].iloc[0]
        self.assertEqual(row["worst_acc"], expected.worst_acc)
        means = mean_accuracy(table, ["alpha", "sigma", "algorithm"])
        self.assertEqual(len(means), 6)


class TestShippedConfigs(unittest.TestCase):
    """Test that the example configs load."""

    def test_configs_load(self):
        quick = load_config(CONFIG_DIR / "synthetic_quick.yaml", environ={})
        self.assertEqual(quick.num_clients, 6)
        mnist = load_config(CONFIG_DIR / "mnist_linear.yaml", environ={})
        self.assertEqual((mnist.num_clients, mnist.hyperparams.m, mnist.hyperparams.tau), (30, 20, 10))
        self.assertEqual(mnist.sweep.tau_grid, (5, 10, 20, 30))
        self.assertEqual(mnist.sweep.alpha_grid, (0.1, 0.3, 0.5, 0.7))
        fmnist = load_config(CONFIG_DIR / "fmnist_linear.yaml", environ={})
        kmnist = load_config(CONFIG_DIR / "kmnist_mlp.yaml", environ={})
        self.assertIsNone(fmnist.model.hidden_dim)
        self.assertEqual(kmnist.model.hidden_dim, 200)
        for cfg in (fmnist, kmnist):
            self.assertEqual(cfg.dataset.source, "idx")
            self.assertEqual(cfg.sweep.sigma_grid, (0.3, 0.5, 0.7))
            self.assertEqual(cfg.sweep.algorithms, ("drdm", "drfa", "fedavg", "scaffold"))
        for cfg in (quick, mnist, fmnist, kmnist):
            self.assertEqual(cfg.hyperparams.c_update, "per_client_w_bar")


@unittest.skipUnless(os.environ.get("DRDM_MNIST_DIR"), "set DRDM_MNIST_DIR to the MNIST IDX directory")
class TestMnistReproduction(unittest.TestCase):
    """Desk reproduction of the linear-model MNIST table."""

    def _config(self, algorithm):
        root = Path(os.environ["DRDM_MNIST_DIR"])
        environ = {
            "DRDM_DATASET__TRAIN_IMAGES": str(root / "train-images-idx3-ubyte"),
            "DRDM_DATASET__TRAIN_LABELS": str(root / "train-labels-idx1-ubyte"),
            "DRDM_DATASET__TEST_IMAGES": str(root / "t10k-images-idx3-ubyte"),
            "DRDM_DATASET__TEST_LABELS": str(root / "t10k-labels-idx1-ubyte"),
        }
        return algorithm_config(load_config(CONFIG_DIR / "mnist_linear.yaml", environ=environ), algorithm)

    def test_linear_mnist(self):
        threads = os.cpu_count() or 1
        drdm = run_experiment(self._config("drdm"), threads=threads).final_rows()
        fedavg = run_experiment(self._config("fedavg"), threads=threads).final_rows()
        drdm_avg = 100 * np.mean([row.avg_acc for row in drdm])
        drdm_worst = 100 * np.mean([row.worst_acc for row in drdm])
        fedavg_worst = 100 * np.mean([row.worst_acc for row in fedavg])
        self.assertLessEqual(abs(drdm_avg - 90.31), 3.0)
        self.assertLessEqual(abs(drdm_worst - 84.81), 4.0)
        self.assertGreaterEqual(drdm_worst - fedavg_worst, 2.0)

    def test_rounds_to_target_non_increasing_in_tau(self):
        cfg = self._config("drdm")
        table = sweep_tau(cfg, grid=[5, 10, 20, 30], target_worst_acc=0.80, threads=os.cpu_count() or 1)
        trend = tau_trend_by_run(table)
        self.assertEqual(len(trend), 10)
        self.assertGreaterEqual(sum(trend.values()), 8, msg=table.to_string())


if __name__ == "__main__":
    unittest.main()

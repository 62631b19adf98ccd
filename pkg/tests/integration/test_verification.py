"""
Integration Tests for the verification suites and the command line
"""

import contextlib
import io
import logging
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

# Add project root to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from core.exceptions import InvariantViolation, ParameterError
from orchestration.verification import (VerificationContext, drdm_oracle_difference, scaffold_oracle_difference,
                                        select_suites, suite_names, verify)
from run_drdm import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR, EXIT_VERIFICATION_FAILED, main

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def flipped_drift(batch_grad, memory, w_bar, w_i, mu):
    return batch_grad - memory + mu * (w_bar - w_i)


class TestSuites(unittest.TestCase):
    """Test that every suite passes on the shipped implementation."""

    def assertSuitePasses(self, name):
        report = verify(name)
        self.assertTrue(report.results, msg=name)
        self.assertTrue(report.passed, msg="\n".join(report.summary_lines()))

    def test_projections(self):
        self.assertSuitePasses("projections")

    def test_gradients(self):
        self.assertSuitePasses("gradients")

    def test_reduction(self):
        self.assertSuitePasses("reduction")

    def test_unbiasedness(self):
        self.assertSuitePasses("unbiasedness")

    def test_scalar_oracle(self):
        self.assertSuitePasses("scalar_oracle")

    def test_duality_gap(self):
        self.assertSuitePasses("duality_gap")

    def test_scalar_oracles_across_seeds(self):
        for seed in range(5):
            self.assertLessEqual(drdm_oracle_difference(seed), 1e-12)
            self.assertLessEqual(scaffold_oracle_difference(seed), 1e-12)


class TestMutation(unittest.TestCase):
    """Test that a wrong drift-correction sign is caught."""

    def test_flipped_sign_fails_reduction(self):
        report = verify("reduction", VerificationContext(gradient_rule=flipped_drift))
        self.assertFalse(report.passed)
        self.assertEqual([r.name for r in report.failures], ["drift_step_is_proximal_sgd"])


class TestSelection(unittest.TestCase):
    """Test suite selectors."""

    def test_all(self):
        self.assertEqual(select_suites("all"), suite_names())
        self.assertEqual(select_suites(None), suite_names())
        self.assertEqual(suite_names(), ["projections", "gradients", "reduction", "unbiasedness",
                                         "scalar_oracle", "duality_gap"])

    def test_comma_list(self):
        self.assertEqual(select_suites("gradients, projections"), ["gradients", "projections"])
        self.assertEqual(select_suites(["reduction"]), ["reduction"])

    def test_unknown(self):
        with self.assertRaises(ParameterError):
            select_suites("projections,nope")

    def test_raising_suite_becomes_failed_check(self):
        broken = MagicMock(side_effect=RuntimeError("boom"))
        with patch.dict("orchestration.verification._SUITES", {"projections": broken}):
            report = verify("projections")
        broken.assert_called_once()
        self.assertFalse(report.passed)
        self.assertEqual(len(report.results), 1)
        self.assertEqual(report.results[0].name, "error")
        self.assertIn("RuntimeError: boom", report.results[0].detail)

    def test_summary_lines(self):
        lines = verify("projections").summary_lines()
        self.assertTrue(all(line.startswith("PASS") for line in lines[:-1]))
        self.assertIn("checks passed", lines[-1])


class TestCommandLine(unittest.TestCase):
    """Test subcommands and exit codes."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)
        self.root = logging.getLogger()
        self.saved = (list(self.root.handlers), self.root.level)

    def tearDown(self):
        for handler in list(self.root.handlers):
            self.root.removeHandler(handler)
        for handler in self.saved[0]:
            self.root.addHandler(handler)
        self.root.setLevel(self.saved[1])
        self.tmp.cleanup()

    def run_main(self, *argv):
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(io.StringIO()):
            code = main(["--log-level", "WARNING", *argv])
        return code, stdout.getvalue()

    def test_verify(self):
        code, output = self.run_main("verify", "--suite", "projections,duality_gap")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("PASS projections/simplex_grid_oracle", output)

    def test_verify_unknown_suite(self):
        code, _ = self.run_main("verify", "--suite", "nope")
        self.assertEqual(code, EXIT_CONFIG_ERROR)

    def test_run(self):
        code, _ = self.run_main("run", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"), "--out",
                                str(self.out), "--threads", "2", "--seed", "3", "--log-every", "0")
        self.assertEqual(code, EXIT_OK)
        metrics = (self.out / "metrics.csv").read_text().splitlines()
        self.assertEqual(metrics[0], "run,round,avg_acc,worst_acc,std_acc,energy_j")
        self.assertEqual(len(metrics) - 1, 3 * 31)
        self.assertTrue((self.out / "summary.csv").exists())
        self.assertIn("seed: 3", (self.out / "config.yaml").read_text())

    def test_run_slot_threads_identical_output(self):
        outputs = []
        for slot_threads in ("1", "3"):
            out = self.out / f"slots{slot_threads}"
            code, _ = self.run_main("run", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"), "--out", str(out),
                                    "--slot-threads", slot_threads, "--log-every", "0")
            self.assertEqual(code, EXIT_OK)
            outputs.append((out / "metrics.csv").read_bytes())
        self.assertEqual(outputs[0], outputs[1])

    def test_compare(self):
        code, output = self.run_main("compare", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"), "--out",
                                     str(self.out), "--algorithms", "drdm, fedavg", "--threads", "2")
        self.assertEqual(code, EXIT_OK)
        table = (self.out / "comparison.csv").read_text().splitlines()
        self.assertEqual(table[0], "algorithm,run,rounds,avg_acc,worst_acc,std_acc")
        self.assertEqual(len(table), 1 + 2 * 3)
        self.assertIn("fedavg: avg_acc=", output)

    def test_sweep_heterogeneity(self):
        code, _ = self.run_main("sweep-heterogeneity", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"),
                                "--out", str(self.out), "--alpha-grid", "0.1,0.5", "--sigma-grid", "0.5",
                                "--algorithms", "drdm,scaffold", "--seed", "1")
        self.assertEqual(code, EXIT_OK)
        table = (self.out / "heterogeneity.csv").read_text().splitlines()
        self.assertEqual(table[0], "alpha,sigma,algorithm,run,avg_acc,worst_acc,std_acc")
        self.assertEqual(len(table), 1 + 3 * 2 * 3)

    def test_unknown_algorithm(self):
        code, _ = self.run_main("compare", "--algorithms", "fedprox", "--out", str(self.out))
        self.assertEqual(code, EXIT_CONFIG_ERROR)

    def test_sweep_energy(self):
        code, _ = self.run_main("sweep-energy", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"), "--out",
                                str(self.out), "--grid", "2,5", "--target", "0.5", "--snr-grid", "0,20")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len((self.out / "tau_sweep.csv").read_text().splitlines()), 1 + 2 * 3)
        energy = (self.out / "energy_sweep.csv").read_text().splitlines()
        self.assertEqual(energy[0], "snr_db,bandwidth_hz,opt_tau,energy_j")
        self.assertEqual(len(energy), 3)

    def test_missing_config(self):
        code, _ = self.run_main("run", "--config", str(self.out / "absent.yaml"), "--out", str(self.out))
        self.assertEqual(code, EXIT_CONFIG_ERROR)

    def test_invalid_threads(self):
        code, _ = self.run_main("run", "--threads", "0")
        self.assertEqual(code, EXIT_CONFIG_ERROR)
        code, _ = self.run_main("run", "--slot-threads", "0")
        self.assertEqual(code, EXIT_CONFIG_ERROR)

    def test_bad_grid(self):
        code, _ = self.run_main("sweep-tau", "--grid", "5,x", "--out", str(self.out))
        self.assertEqual(code, EXIT_CONFIG_ERROR)

    def test_unwritable_output(self):
        blocker = self.out / "blocker"
        blocker.write_text("x")
        code, _ = self.run_main("run", "--config", str(CONFIG_DIR / "synthetic_quick.yaml"), "--out",
                                str(blocker / "results"), "--log-every", "0")
        self.assertEqual(code, EXIT_IO_ERROR)

    def test_runtime_failure_is_not_a_verification_failure(self):
        with patch("run_drdm.cmd_run", side_effect=InvariantViolation("non-finite server state")) as handler:
            code, _ = self.run_main("run", "--out", str(self.out))
        handler.assert_called_once()
        self.assertEqual(code, EXIT_RUNTIME_ERROR)

    def test_failed_suite_exits_with_verification_code(self):
        broken = MagicMock(side_effect=RuntimeError("boom"))
        with patch.dict("orchestration.verification._SUITES", {"projections": broken}):
            code, output = self.run_main("verify", "--suite", "projections")
        self.assertEqual(code, EXIT_VERIFICATION_FAILED)
        self.assertIn("FAIL", output)

    def test_exit_codes_distinct(self):
        codes = {EXIT_OK, EXIT_VERIFICATION_FAILED, EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_RUNTIME_ERROR}
        self.assertEqual(len(codes), 5)


if __name__ == "__main__":
    unittest.main()

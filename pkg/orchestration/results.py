"""
CSV emission of experiment and sweep tables.

All tables are written with six-decimal floats, LF line endings and no index
column, so emitting the same result twice produces identical bytes.
"""

import logging
from pathlib import Path
from typing import Dict, Union

import pandas as pd

from core.exceptions import LabError
from .experiment import RunResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.6f"
MISSING = "NA"


class ResultsIOError(LabError, OSError):
    """Writing a results file failed."""


def write_table(table: pd.DataFrame, path: PathLike) -> Path:
    """Write ``table`` as CSV, creating parent directories.

    Raises:
        ResultsIOError: On any filesystem failure
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            table.to_csv(handle, index=False, float_format=FLOAT_FORMAT, na_rep=MISSING,
                         lineterminator="\n")
    except OSError as e:
        raise ResultsIOError(f"Cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path


def emit_csv(result: RunResult, path: PathLike) -> Path:
    """Per-run metrics: ``run,round,avg_acc,worst_acc,std_acc,energy_j``."""
    return write_table(result.to_frame(), path)


def emit_summary_csv(result: RunResult, path: PathLike) -> Path:
    """Per-round mean and population std over runs."""
    return write_table(result.summary(), path)


def emit_experiment(result: RunResult, out_dir: PathLike) -> Dict[str, Path]:
    """Write ``metrics.csv`` and ``summary.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    return {
        "metrics": emit_csv(result, out_dir / "metrics.csv"),
        "summary": emit_summary_csv(result, out_dir / "summary.csv"),
    }

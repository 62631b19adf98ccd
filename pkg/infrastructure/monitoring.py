"""
Logging setup and training progress monitoring.

``configure_logging`` routes the standard-library loggers used throughout the
package through structlog's formatter, as console lines or JSON. Library
modules only call ``logging.getLogger(__name__)``; handlers are installed by
the command-line entry point.

``TrainingMonitor`` subscribes to a run's event bus and keeps per-round
timings and the latest fairness metrics.
"""

import logging
import sys
import time
from typing import Any, Dict, List, Optional

import structlog
from pythonjsonlogger import jsonlogger

from core.event_bus import RUN_FINISHED, RUN_STARTED, ROUND_COMPLETED, Event, EventBus

logger = logging.getLogger(__name__)


def configure_logging(level: str = "INFO", json_output: bool = False, stream=None):
    """Install a single root handler.

    Args:
        level: Root log level name
        json_output: Emit one JSON object per record instead of console lines
        stream: Output stream (stderr by default)
    """
    shared = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
    ]
    handler = logging.StreamHandler(stream or sys.stderr)
    if json_output:
        handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    else:
        handler.setFormatter(structlog.stdlib.ProcessorFormatter(
            processor=structlog.dev.ConsoleRenderer(colors=False),
            foreign_pre_chain=shared,
        ))
    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())
    structlog.configure(
        processors=shared + [structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


class TrainingMonitor:
    """Track one run's progress from its event bus.

    Args:
        run_id: Label used in log lines
        log_every: Log a progress line every this many rounds (0 = never)
    """

    def __init__(self, run_id: str = "run", log_every: int = 10):
        self.run_id = run_id
        self.log_every = log_every
        self.round_times: List[float] = []
        self.latest: Dict[str, Any] = {}
        self.algorithm: Optional[str] = None
        self.finished = False
        self._last = None
        self._log = structlog.get_logger("drdm.monitor").bind(run=run_id)

    def attach(self, bus: EventBus) -> "TrainingMonitor":
        bus.subscribe(RUN_STARTED, self._on_run_started)
        bus.subscribe(ROUND_COMPLETED, self._on_round)
        bus.subscribe(RUN_FINISHED, self._on_run_finished)
        return self

    def _on_run_started(self, event: Event):
        self.algorithm = event.payload.get("algorithm")
        self._last = time.perf_counter()
        self._log.info("run started", **event.payload)

    def _on_round(self, event: Event):
        now = time.perf_counter()
        if self._last is not None:
            self.round_times.append(now - self._last)
        self._last = now
        self.latest = dict(event.payload)
        round_index = event.payload.get("round", 0)
        if self.log_every and round_index % self.log_every == 0:
            self._log.info("round completed", round=round_index,
                           avg_acc=round(event.payload.get("avg_acc", float("nan")), 4),
                           worst_acc=round(event.payload.get("worst_acc", float("nan")), 4))

    def _on_run_finished(self, event: Event):
        self.finished = True
        self._log.info("run finished", rounds=event.payload.get("rounds"),
                       mean_round_s=round(self.mean_round_time(), 4))

    def mean_round_time(self) -> float:
        if not self.round_times:
            return 0.0
        return sum(self.round_times[-100:]) / min(len(self.round_times), 100)

    def get_status(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "rounds_seen": len(self.round_times),
            "mean_round_s": self.mean_round_time(),
            "finished": self.finished,
            **{k: self.latest[k] for k in ("avg_acc", "worst_acc", "std_acc") if k in self.latest},
        }

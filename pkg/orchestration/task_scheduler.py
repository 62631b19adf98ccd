"""
Task Scheduler for experiment runs

Executes independent tasks (Monte Carlo runs, sweep cells, participant slots)
on a bounded thread pool and hands results back in submission order, so the
output of a batch never depends on the number of workers or on completion
timing.
"""

import logging
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional

from core.exceptions import ParameterError


class TaskStatus(Enum):
    """Lifecycle of a scheduled task."""
    PENDING = "pending"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class TaskRecord:
    """Execution record of one task in a batch."""
    task_id: str
    batch_id: str
    index: int
    label: str
    status: TaskStatus = TaskStatus.PENDING
    duration: float = 0.0
    error: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


class TaskScheduler:
    """
    Ordered worker pool.

    ``map`` runs ``fn`` over ``items`` with up to ``max_workers`` threads and
    returns results indexed like the input. The first failing task's exception
    is re-raised after the batch has drained.
    """

    def __init__(self, max_workers: int = 1, name: str = "scheduler"):
        """
        Initialize the task scheduler.

        Args:
            max_workers: Worker threads; 1 runs tasks inline on the caller's thread
            name: Label used in log lines and thread names
        """
        if max_workers < 1:
            raise ParameterError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.name = name
        self.task_history: List[TaskRecord] = []
        self.logger = logging.getLogger("task_scheduler")

    def _execute(self, fn: Callable, item: Any, record: TaskRecord):
        started = time.perf_counter()
        try:
            result = fn(item)
        except Exception as e:
            record.status = TaskStatus.FAILED
            record.error = str(e)
            raise
        finally:
            record.duration = time.perf_counter() - started
        record.status = TaskStatus.COMPLETED
        return result

    def map(self, fn: Callable, items: Iterable, label: Optional[str] = None) -> List:
        """
        Apply ``fn`` to every item.

        Args:
            fn: Task body taking one item
            items: Task inputs
            label: Batch label for the task records

        Returns:
            Results in input order
        """
        items = list(items)
        batch_id = str(uuid.uuid4())
        label = label or getattr(fn, "__name__", "task")
        records = [TaskRecord(str(uuid.uuid4()), batch_id, i, label) for i in range(len(items))]
        self.task_history.extend(records)

        if self.max_workers == 1 or len(items) <= 1:
            results = [self._execute(fn, item, record) for item, record in zip(items, records)]
        else:
            workers = min(self.max_workers, len(items))
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix=self.name) as pool:
                futures = [pool.submit(self._execute, fn, item, record) for item, record in zip(items, records)]
                results = [future.result() for future in futures]

        total = sum(record.duration for record in records)
        self.logger.debug(f"{self.name}: {len(items)} '{label}' tasks on {self.max_workers} workers, "
                          f"{total:.3f}s task time")
        return results

    def as_map_fn(self) -> Callable[[Callable, Iterable], List]:
        """This scheduler as an ordered ``map_fn`` for the training algorithms."""
        return lambda fn, items: self.map(fn, items)

    def get_statistics(self) -> Dict[str, Any]:
        """Counts and timings over every task run so far."""
        completed = [r for r in self.task_history if r.status == TaskStatus.COMPLETED]
        failed = [r for r in self.task_history if r.status == TaskStatus.FAILED]
        return {
            "workers": self.max_workers,
            "total_tasks": len(self.task_history),
            "completed": len(completed),
            "failed": len(failed),
            "mean_duration": sum(r.duration for r in completed) / len(completed) if completed else 0.0,
        }

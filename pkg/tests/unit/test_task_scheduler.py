"""
Unit Tests for the ordered task scheduler
"""

import os
import sys
import threading
import time
import unittest
from unittest.mock import MagicMock

# Add project root to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from core.exceptions import ParameterError
from orchestration.task_scheduler import TaskScheduler, TaskStatus


def slow_square(x):
    # later items finish first
    time.sleep(0.002 * (5 - x))
    return x * x


class TestTaskScheduler(unittest.TestCase):
    """Test ordering, failures, records and statistics."""

    def test_results_in_input_order(self):
        for workers in (1, 4):
            scheduler = TaskScheduler(max_workers=workers)
            self.assertEqual(scheduler.map(slow_square, range(5)), [0, 1, 4, 9, 16], msg=workers)

    def test_inline_with_one_worker(self):
        seen = []
        TaskScheduler(max_workers=1).map(lambda _: seen.append(threading.current_thread().name), [0, 1])
        self.assertEqual(seen, [threading.current_thread().name] * 2)

    def test_empty_batch(self):
        scheduler = TaskScheduler(max_workers=3)
        self.assertEqual(scheduler.map(slow_square, []), [])
        self.assertEqual(scheduler.get_statistics()["total_tasks"], 0)

    def test_failure_is_raised_and_recorded(self):
        def body(x):
            if x == 2:
                raise ValueError("bad item")
            return x

        scheduler = TaskScheduler(max_workers=3)
        with self.assertRaisesRegex(ValueError, "bad item"):
            scheduler.map(body, range(4), label="items")
        failed = [r for r in scheduler.task_history if r.status == TaskStatus.FAILED]
        self.assertEqual([(r.index, r.label, r.error) for r in failed], [(2, "items", "bad item")])

    def test_statistics(self):
        scheduler = TaskScheduler(max_workers=2, name="runs")
        scheduler.map(slow_square, range(3))
        with self.assertRaises(RuntimeError):
            scheduler.map(MagicMock(side_effect=RuntimeError("boom")), [0])
        stats = scheduler.get_statistics()
        self.assertEqual((stats["workers"], stats["total_tasks"], stats["completed"], stats["failed"]), (2, 4, 3, 1))
        self.assertGreater(stats["mean_duration"], 0.0)
        self.assertEqual(len({r.batch_id for r in scheduler.task_history}), 2)

    def test_as_map_fn(self):
        body = MagicMock(side_effect=lambda x: x + 1)
        map_fn = TaskScheduler(max_workers=2).as_map_fn()
        self.assertEqual(map_fn(body, [1, 2, 3]), [2, 3, 4])
        self.assertEqual(body.call_count, 3)

    def test_invalid_workers(self):
        with self.assertRaises(ParameterError):
            TaskScheduler(max_workers=0)


if __name__ == "__main__":
    unittest.main()

"""
Unit Tests for the event bus, logging setup and the training monitor
"""

import io
import json
import logging
import os
import sys
import unittest

# Add project root to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from core.event_bus import RUN_FINISHED, RUN_STARTED, ROUND_COMPLETED, Event, EventBus
from infrastructure.monitoring import TrainingMonitor, configure_logging


class TestEventBus(unittest.TestCase):
    """Test publish-subscribe delivery."""

    def setUp(self):
        self.bus = EventBus()
        self.received = []

    def test_subscribe_and_publish(self):
        self.bus.subscribe(ROUND_COMPLETED, self.received.append)
        event_id = self.bus.publish(ROUND_COMPLETED, {"round": 1})
        self.assertEqual(len(self.received), 1)
        self.assertEqual(self.received[0].id, event_id)
        self.assertEqual(self.received[0].payload, {"round": 1})

    def test_only_matching_type(self):
        self.bus.subscribe(RUN_STARTED, self.received.append)
        self.bus.publish(ROUND_COMPLETED, {"round": 1})
        self.assertEqual(self.received, [])

    def test_wildcard(self):
        self.bus.subscribe("*", self.received.append)
        self.bus.publish(RUN_STARTED)
        self.bus.publish(Event(RUN_FINISHED, {"rounds": 3}))
        self.assertEqual([e.event_type for e in self.received], [RUN_STARTED, RUN_FINISHED])

    def test_delivery_order(self):
        order = []
        self.bus.subscribe(ROUND_COMPLETED, lambda e: order.append("first"))
        self.bus.subscribe("*", lambda e: order.append("wildcard"))
        self.bus.subscribe(ROUND_COMPLETED, lambda e: order.append("second"))
        self.bus.publish(ROUND_COMPLETED)
        self.assertEqual(order, ["first", "second", "wildcard"])

    def test_unsubscribe(self):
        self.bus.subscribe(ROUND_COMPLETED, self.received.append)
        self.assertTrue(self.bus.unsubscribe(ROUND_COMPLETED, self.received.append))
        self.assertFalse(self.bus.unsubscribe(ROUND_COMPLETED, self.received.append))
        self.assertEqual(self.bus.get_subscriber_count(), 0)

    def test_failing_handler_is_isolated(self):
        def broken(event):
            raise RuntimeError("boom")

        self.bus.subscribe(ROUND_COMPLETED, broken)
        self.bus.subscribe(ROUND_COMPLETED, self.received.append)
        with self.assertLogs("core.event_bus", level="ERROR"):
            self.bus.publish(ROUND_COMPLETED)
        self.assertEqual(len(self.received), 1)
        self.assertEqual(self.bus.failures, 1)

    def test_event_to_dict(self):
        data = Event(RUN_STARTED, {"algorithm": "drdm"}).to_dict()
        self.assertEqual(data["event_type"], RUN_STARTED)
        self.assertEqual(data["source"], "trainer")


class TestTrainingMonitor(unittest.TestCase):
    """Test progress tracking from bus events."""

    def test_tracks_rounds(self):
        bus = EventBus()
        monitor = TrainingMonitor("run-0", log_every=0).attach(bus)
        self.assertEqual(bus.get_subscriber_count(), 3)
        bus.publish(RUN_STARTED, {"algorithm": "drdm"})
        for k in range(3):
            bus.publish(ROUND_COMPLETED, {"round": k, "avg_acc": 0.5 + k / 10, "worst_acc": 0.4, "std_acc": 0.1})
        bus.publish(RUN_FINISHED, {"rounds": 2})
        status = monitor.get_status()
        self.assertEqual(status["algorithm"], "drdm")
        self.assertEqual(status["rounds_seen"], 3)
        self.assertAlmostEqual(status["avg_acc"], 0.7)
        self.assertTrue(status["finished"])
        self.assertGreaterEqual(status["mean_round_s"], 0.0)

    def test_empty_status(self):
        status = TrainingMonitor().get_status()
        self.assertEqual(status["rounds_seen"], 0)
        self.assertEqual(status["mean_round_s"], 0.0)
        self.assertFalse(status["finished"])


class TestConfigureLogging(unittest.TestCase):
    """Test the root handler setup."""

    def setUp(self):
        self.root = logging.getLogger()
        self.saved = (list(self.root.handlers), self.root.level)

    def tearDown(self):
        for handler in list(self.root.handlers):
            self.root.removeHandler(handler)
        for handler in self.saved[0]:
            self.root.addHandler(handler)
        self.root.setLevel(self.saved[1])

    def test_json_output(self):
        stream = io.StringIO()
        configure_logging("INFO", json_output=True, stream=stream)
        logging.getLogger("federation.trainer").info("round done")
        record = json.loads(stream.getvalue().strip().splitlines()[-1])
        self.assertEqual(record["message"], "round done")
        self.assertEqual(record["levelname"], "INFO")
        self.assertEqual(record["name"], "federation.trainer")

    def test_console_output_and_level(self):
        stream = io.StringIO()
        configure_logging("warning", stream=stream)
        logging.getLogger("federation.trainer").info("hidden")
        logging.getLogger("federation.trainer").warning("shown")
        text = stream.getvalue()
        self.assertNotIn("hidden", text)
        self.assertIn("shown", text)
        self.assertEqual(len(self.root.handlers), 1)


if __name__ == "__main__":
    unittest.main()

"""
Event bus for training progress.

A small publish-subscribe channel: the trainer publishes round and run
lifecycle events, monitors subscribe to them. Delivery is synchronous and in
subscription order, so a run's event sequence is deterministic. A failing
handler is logged and skipped; it never interrupts training.
"""

import logging
import time
import uuid
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Union

logger = logging.getLogger(__name__)

ROUND_COMPLETED = "training.round_completed"
RUN_STARTED = "training.run_started"
RUN_FINISHED = "training.run_finished"


@dataclass
class Event:
    """A published event."""

    # e.g. 'training.round_completed'
    event_type: str
    payload: Dict[str, Any]
    id: str = field(default_factory=lambda: str(uuid.uuid4()))
    timestamp: float = field(default_factory=time.time)
    source: str = "trainer"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "event_type": self.event_type,
            "payload": self.payload,
            "timestamp": self.timestamp,
            "source": self.source,
        }


Handler = Callable[[Event], None]


class EventBus:
    """Synchronous publish-subscribe channel owned by one run."""

    def __init__(self):
        self._subscribers: Dict[str, List[Handler]] = {}
        self._wildcard_subscribers: List[Handler] = []
        self.failures = 0

    def subscribe(self, event_type: str, callback: Handler):
        """Subscribe to one event type, or to every event with '*'."""
        if event_type == "*":
            self._wildcard_subscribers.append(callback)
        else:
            self._subscribers.setdefault(event_type, []).append(callback)
        logger.debug(f"Added subscriber for '{event_type}': {getattr(callback, '__qualname__', callback)}")

    def unsubscribe(self, event_type: str, callback: Handler) -> bool:
        """Remove a subscription; returns False if it was not registered."""
        handlers = self._wildcard_subscribers if event_type == "*" else self._subscribers.get(event_type, [])
        try:
            handlers.remove(callback)
        except ValueError:
            return False
        if event_type != "*" and not handlers:
            del self._subscribers[event_type]
        return True

    def publish(self, event: Union[Event, str], payload: Optional[Dict[str, Any]] = None,
                source: str = "trainer") -> str:
        """Deliver an event to its subscribers and the wildcard subscribers.

        Returns:
            Event ID
        """
        if isinstance(event, str):
            event = Event(event_type=event, payload=payload or {}, source=source)
        for callback in self._subscribers.get(event.event_type, []) + self._wildcard_subscribers:
            try:
                callback(event)
            except Exception as e:
                self.failures += 1
                logger.error(f"Error in event handler for '{event.event_type}': {e}", exc_info=True)
        return event.id

    def get_subscriber_count(self, event_type: Optional[str] = None) -> int:
        """Subscribers for one event type, '*' for wildcard ones, or all when None."""
        if event_type is None:
            return sum(len(subs) for subs in self._subscribers.values()) + len(self._wildcard_subscribers)
        if event_type == "*":
            return len(self._wildcard_subscribers)
        return len(self._subscribers.get(event_type, []))

"""Event system for fishstream - decouples producers (trainer, sessions)
from sinks (metrics logs, pick summaries)
"""

import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Any


class EventType(Enum):
    """Standard event types"""

    EPOCH_COMPLETED = "epoch_completed"
    CHECKPOINT_SAVED = "checkpoint_saved"
    PICK_DETECTED = "pick_detected"
    SESSION_RESET = "session_reset"
    TRAINING_ABORTED = "training_aborted"


@dataclass
class Event:
    """Event data structure"""

    type: EventType
    source: str
    data: dict[str, Any]
    timestamp: float

    @classmethod
    def create(cls, event_type: EventType, source: str, **data) -> "Event":
        """Create a new event with current timestamp"""
        return cls(
            type=event_type,
            source=source,
            data=data,
            timestamp=time.time(),
        )


class EventBus:
    """Central event bus for application-wide communication"""

    def __init__(self, logger=None):
        self.logger = logger
        self._subscribers: dict[EventType, list[Callable[[Event], None]]] = {}

        if self.logger:
            self.logger.debug("EventBus.__init__: EventBus initialized")

    def subscribe(self, event_type: EventType, callback: Callable[[Event], None]):
        """Subscribe to an event type"""
        self._subscribers.setdefault(event_type, []).append(callback)

        if self.logger:
            total = len(self._subscribers[event_type])
            self.logger.debug(f"EventBus.subscribe: Added subscriber for {event_type.value} (total: {total})")

    def unsubscribe(self, event_type: EventType, callback: Callable[[Event], None]):
        """Unsubscribe from an event type"""
        if event_type in self._subscribers:
            try:
                self._subscribers[event_type].remove(callback)
            except ValueError:
                if self.logger:
                    self.logger.warning(f"EventBus.unsubscribe: Callback not found for {event_type.value}")
        elif self.logger:
            self.logger.warning(f"EventBus.unsubscribe: No subscribers found for event type: {event_type.value}")

    @contextmanager
    def subscribed(self, event_type: EventType, callback: Callable[[Event], None]) -> Iterator[None]:
        """Keep a subscription for the duration of a with-block"""
        self.subscribe(event_type, callback)
        try:
            yield
        finally:
            self.unsubscribe(event_type, callback)

    def has_subscribers(self, event_type: EventType) -> bool:
        """Check whether anything listens to an event type"""
        return bool(self._subscribers.get(event_type))

    def emit(self, event: Event):
        """Emit an event to all subscribers"""
        subscribers = self._subscribers.get(event.type, [])
        for i, callback in enumerate(list(subscribers)):
            try:
                callback(event)
            except Exception as e:
                # Log error but don't stop other subscribers
                if self.logger:
                    self.logger.error(
                        f"EventBus.emit: Error in event subscriber {i+1} for {event.type.value}: {e}",
                        error_type=type(e).__name__,
                        event_type=event.type.value,
                        event_source=event.source,
                        subscriber_index=i,
                    )

    def emit_sync(self, event_type: EventType, source: str, **data):
        """Create and emit an event synchronously"""
        event = Event.create(event_type, source, **data)
        self.emit(event)
        return event

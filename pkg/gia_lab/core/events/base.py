"""Base event system implementation."""
import threading
import traceback
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable, Dict, Generic, Optional, TypeVar

from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

T = TypeVar('T')


def _key(event_type) -> str:
    return getattr(event_type, 'value', event_type)


@dataclass
class BaseEvent(Generic[T]):
    """Base class for all events."""
    event_type: str
    entity_id: Any
    entity_type: str
    timestamp: datetime = None
    data: Optional[T] = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now(timezone.utc)


class EventPublisher:
    """Process-wide publisher for domain events."""

    # Subscribers kept in insertion order so delivery order is stable
    _subscribers: Dict[str, Dict[Callable, None]] = {}
    _lock = threading.RLock()

    @classmethod
    def subscribe(cls, event_type: str, callback: Callable[[BaseEvent], None]):
        """Subscribe to events of a specific type."""
        with cls._lock:
            cls._subscribers.setdefault(_key(event_type), {})[callback] = None
        logger.debug(
            "Added event subscriber",
            extra={
                'context': {
                    'event_type': _key(event_type),
                    'subscriber': getattr(callback, '__qualname__', repr(callback))
                }
            }
        )

    @classmethod
    def unsubscribe(cls, event_type: str, callback: Callable[[BaseEvent], None]):
        """Unsubscribe from events of a specific type."""
        with cls._lock:
            cls._subscribers.get(_key(event_type), {}).pop(callback, None)

    @classmethod
    def publish(cls, event: BaseEvent):
        """Publish an event to all subscribers; subscriber errors are logged, never raised."""
        event_type = _key(event.event_type)
        with cls._lock:
            subscribers = list(cls._subscribers.get(event_type, {}))
        if not subscribers:
            logger.debug(f"No subscribers for event type: {event_type}")
            return

        for subscriber in subscribers:
            try:
                subscriber(event)
            except Exception as e:
                logger.error(
                    "Error in event subscriber",
                    extra={
                        'context': {
                            'event_type': event_type,
                            'entity_id': event.entity_id,
                            'subscriber': getattr(subscriber, '__qualname__', repr(subscriber)),
                            'error': str(e),
                            'stack_trace': traceback.format_exc()
                        }
                    }
                )

    @classmethod
    def clear_subscribers(cls, event_type: Optional[str] = None):
        """Clear subscribers for one event type, or all of them."""
        with cls._lock:
            if event_type is None:
                cls._subscribers.clear()
            else:
                cls._subscribers.pop(_key(event_type), None)

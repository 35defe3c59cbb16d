"""Search-related events and event handling."""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

from gia_lab.core.events.base import BaseEvent, EventPublisher
from gia_lab.core.models.search import TrialRecord
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


class SearchEventType(str, Enum):
    """Types of search events."""
    STARTED = "search.started"
    TRIAL_COMPLETED = "trial.completed"
    TRIAL_DIVERGED = "trial.diverged"
    COMPLETED = "search.completed"


@dataclass
class SearchEventData:
    """Data for search events."""
    record: Optional[TrialRecord] = None
    records: Optional[List[TrialRecord]] = None
    metadata: Optional[Dict[str, Any]] = None


class SearchEvent(BaseEvent[SearchEventData]):
    """Event emitted while a search runs; ``entity_id`` is the search id."""

    def __init__(self,
                 event_type: SearchEventType,
                 search_id: str,
                 record: Optional[TrialRecord] = None,
                 records: Optional[List[TrialRecord]] = None,
                 metadata: Optional[Dict[str, Any]] = None):
        super().__init__(
            event_type=event_type,
            entity_id=search_id,
            entity_type="search",
            data=SearchEventData(record=record, records=records, metadata=metadata)
        )


class SearchEventPublisher:
    """Publisher for search events."""

    @classmethod
    def publish_search_event(cls, event: SearchEvent):
        """Publish a search event."""
        logger.debug(
            "Publishing search event",
            extra={
                'context': {
                    'event_type': event.event_type.value,
                    'search_id': event.entity_id
                }
            }
        )
        EventPublisher.publish(event)

    @classmethod
    def subscribe_to_searches(cls, callback):
        """Subscribe to all search events."""
        for event_type in SearchEventType:
            EventPublisher.subscribe(event_type, callback)

    @classmethod
    def unsubscribe_from_searches(cls, callback):
        """Unsubscribe from all search events."""
        for event_type in SearchEventType:
            EventPublisher.unsubscribe(event_type, callback)

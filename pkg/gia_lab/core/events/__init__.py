"""Domain events."""
from .base import BaseEvent, EventPublisher
from .search_events import SearchEvent, SearchEventData, SearchEventPublisher, SearchEventType

__all__ = ['BaseEvent', 'EventPublisher', 'SearchEvent', 'SearchEventData',
           'SearchEventPublisher', 'SearchEventType']

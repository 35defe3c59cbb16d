"""JSON-lines trial stream."""
import json
import threading
from pathlib import Path
from typing import List, Optional

from gia_lab.core.events import SearchEvent, SearchEventPublisher, SearchEventType
from gia_lab.core.models import TrialRecord
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


class JsonlTrialWriter:
    """
    Event subscriber appending one JSON object per trial to a file.

    Only events of ``search_id`` are written when it is given. Use as a
    context manager to subscribe for the duration of a search.
    """

    def __init__(self, path: Path, search_id: Optional[str] = None, include_timing: bool = True):
        self.path = Path(path)
        self.search_id = search_id
        self.include_timing = include_timing
        self._lock = threading.Lock()

    def __call__(self, event: SearchEvent):
        if event.event_type not in (SearchEventType.TRIAL_COMPLETED, SearchEventType.TRIAL_DIVERGED):
            return
        if self.search_id is not None and event.entity_id != self.search_id:
            return
        self.write(event.data.record)

    def write(self, record: TrialRecord):
        line = json.dumps(record.to_dict(include_timing=self.include_timing), sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open('a', encoding='utf-8') as handle:
                handle.write(line + '\n')

    def __enter__(self) -> 'JsonlTrialWriter':
        SearchEventPublisher.subscribe_to_searches(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        SearchEventPublisher.unsubscribe_from_searches(self)
        return False


def read_trials(path: Path) -> List[TrialRecord]:
    """Parse a JSON-lines trial file back into records."""
    records = []
    with Path(path).open(encoding='utf-8') as handle:
        for line in handle:
            if line.strip():
                records.append(TrialRecord.from_dict(json.loads(line)))
    return records

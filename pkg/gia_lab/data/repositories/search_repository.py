"""Repository for search runs and trial records."""
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy.exc import SQLAlchemyError

from gia_lab.core.events import SearchEvent, SearchEventPublisher, SearchEventType
from gia_lab.core.models import TrialRecord, TrialStatus
from gia_lab.data.repositories.base_repository import BaseRepository
from gia_lab.data.schema import SearchRun, TrialResult
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


class SearchRepository(BaseRepository):
    """
    Stores search runs and their trials.

    Instances are also search event subscribers: ``attach`` subscribes,
    after which every published search is persisted as it runs.
    """
    search_id: Optional[str] = None

    def start_search(self, search_id: str, master_seed: int, n_trials: int,
                     metadata: Optional[Dict[str, Any]] = None) -> Optional[SearchRun]:
        run = SearchRun(
            id=search_id,
            master_seed=str(master_seed),
            n_trials=n_trials,
            status='running',
            run_metadata=dict(metadata or {}),
            started_at=datetime.utcnow(),
        )
        result = self.add(run)
        if result is not None:
            logger.debug("Search run stored", extra={'context': {'search_id': search_id}})
        return result

    def record_trial(self, search_id: str, record: TrialRecord) -> Optional[TrialResult]:
        return self.add(TrialResult(
            search_id=search_id,
            trial_index=record.trial_index,
            batch_id=record.batch_id,
            seed=record.seed,
            config=record.config,
            ssim=record.ssim,
            final_discrepancy=record.final_discrepancy,
            status=record.status.value,
            error=record.error,
            wall_time=record.wall_time,
        ))

    def complete_search(self, search_id: str, best_trial: Optional[int] = None,
                        best_ssim: Optional[float] = None) -> bool:
        """Mark a run finished; a run without a best trial is marked failed."""
        try:
            with self._get_session() as session:
                run = session.get(SearchRun, search_id)
                if run is None:
                    logger.warning(f"Cannot complete unknown search {search_id}")
                    return False
                run.status = 'completed' if best_trial is not None else 'failed'
                run.best_trial_index = best_trial
                run.best_ssim = best_ssim
                run.completed_at = datetime.utcnow()
                session.commit()
                return True
        except SQLAlchemyError as e:
            logger.error(f"Error completing search {search_id}: {e}")
            return False

    def get_search(self, search_id: str) -> Optional[SearchRun]:
        return self.get_by_id(SearchRun, search_id)

    def get_trials(self, search_id: str) -> List[TrialRecord]:
        """Trial records of a run in trial-index order."""
        try:
            with self._get_session() as session:
                rows = (session.query(TrialResult)
                        .filter(TrialResult.search_id == search_id)
                        .order_by(TrialResult.trial_index)
                        .all())
                return [self._to_record(row) for row in rows]
        except SQLAlchemyError as e:
            logger.error(f"Error loading trials of {search_id}: {e}")
            return []

    def list_searches(self) -> List[SearchRun]:
        return self.list_all(SearchRun)

    @staticmethod
    def _to_record(row: TrialResult) -> TrialRecord:
        return TrialRecord(
            trial_index=row.trial_index,
            config=dict(row.config),
            batch_id=row.batch_id,
            seed=row.seed,
            ssim=row.ssim,
            final_discrepancy=row.final_discrepancy,
            status=TrialStatus(row.status),
            error=row.error,
            wall_time=row.wall_time,
        )

    def __call__(self, event: SearchEvent):
        if self.search_id is not None and event.entity_id != self.search_id:
            return
        data = event.data
        if event.event_type == SearchEventType.STARTED:
            metadata = data.metadata or {}
            self.start_search(event.entity_id, metadata.get('master_seed', 0), metadata.get('n_trials', 0),
                              metadata)
        elif event.event_type in (SearchEventType.TRIAL_COMPLETED, SearchEventType.TRIAL_DIVERGED):
            self.record_trial(event.entity_id, data.record)
        elif event.event_type == SearchEventType.COMPLETED:
            metadata = data.metadata or {}
            self.complete_search(event.entity_id, metadata.get('best_trial'), metadata.get('best_ssim'))

    def attach(self, search_id: Optional[str] = None) -> 'SearchRepository':
        """Subscribe to search events, only those of ``search_id`` when it is given."""
        self.search_id = search_id
        SearchEventPublisher.subscribe_to_searches(self)
        return self

    def detach(self):
        SearchEventPublisher.unsubscribe_from_searches(self)

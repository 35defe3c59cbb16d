"""Base repository implementation."""
from typing import Any, List, Optional, Type, TypeVar

from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session

from gia_lab.data.database import Database
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

T = TypeVar('T')


class BaseRepository:
    """Common session handling and CRUD operations."""

    def __init__(self, database: Database):
        self.database = database

    def _get_session(self) -> Session:
        return self.database.get_session()

    def add(self, model: T) -> Optional[T]:
        try:
            with self._get_session() as session:
                session.add(model)
                session.commit()
                session.refresh(model)
                return model
        except SQLAlchemyError as e:
            logger.error(f"Error adding {type(model).__name__}: {e}")
            return None

    def get_by_id(self, model_class: Type[T], id_value: Any) -> Optional[T]:
        try:
            with self._get_session() as session:
                return session.get(model_class, id_value)
        except SQLAlchemyError as e:
            logger.error(f"Error getting {model_class.__name__} {id_value}: {e}")
            return None

    def list_all(self, model_class: Type[T]) -> List[T]:
        try:
            with self._get_session() as session:
                return session.query(model_class).all()
        except SQLAlchemyError as e:
            logger.error(f"Error listing {model_class.__name__}: {e}")
            return []

"""Results database package."""
from pathlib import Path
from typing import Optional

from gia_lab.core.config import get_settings
from gia_lab.utils.debug_logger import LogManager

from .database import Database

logger = LogManager.get_logger(__name__)


def initialize_database(db_path: Optional[Path] = None) -> Optional[Database]:
    """
    Open the results database, applying pending migrations.

    Args:
        db_path: SQLite file; defaults to the settings database path

    Returns:
        Database instance or None if initialization failed
    """
    if db_path is None:
        db_path = get_settings().db_path
    try:
        return Database(db_path).initialize()
    except Exception as e:
        # Results still stream to JSON-lines without the database.
        logger.error(f"Failed to initialize database: {e}", exc_info=True)
        return None


def get_test_database() -> Database:
    """In-memory database with the schema applied."""
    return Database(None).initialize()


__all__ = ['Database', 'initialize_database', 'get_test_database']

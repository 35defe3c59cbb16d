"""Results database management."""
from pathlib import Path
from typing import Optional

import alembic.config
from alembic import command
from alembic.runtime.migration import MigrationContext
from sqlalchemy import create_engine, inspect, text
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

MIGRATIONS_DIR = Path(__file__).parent / 'migrations'
MEMORY = ':memory:'


class Database:
    """SQLite results store with its schema managed by Alembic."""

    def __init__(self, path: Optional[Path] = None):
        """
        Args:
            path: SQLite file; None keeps the database in memory
        """
        self.path = Path(path).resolve() if path is not None else None
        self.engine: Optional[Engine] = None
        self._session_factory = None

    @property
    def url(self) -> str:
        return f"sqlite:///{self.path}" if self.path is not None else f"sqlite:///{MEMORY}"

    def initialize(self) -> 'Database':
        """Create the engine and upgrade the schema to head."""
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
        logger.debug("Initializing database", extra={'context': {'url': self.url}})
        if self.path is None:
            # one shared connection, or each thread would see its own empty database
            self.engine = create_engine(self.url, poolclass=StaticPool, connect_args={'check_same_thread': False})
        else:
            self.engine = create_engine(self.url)
        self._session_factory = sessionmaker(bind=self.engine, expire_on_commit=False)
        self._run_migrations()
        tables = inspect(self.engine).get_table_names()
        logger.info("Database initialized", extra={'context': {'url': self.url, 'tables': sorted(tables)}})
        return self

    def get_session(self) -> Session:
        if not self._session_factory:
            raise RuntimeError("Database not initialized")
        return self._session_factory()

    def current_revision(self) -> Optional[str]:
        with self.engine.connect() as connection:
            return MigrationContext.configure(connection).get_current_revision()

    def _run_migrations(self):
        if not (MIGRATIONS_DIR / 'env.py').exists():
            raise RuntimeError(f"Migrations not found at {MIGRATIONS_DIR}")
        initial = self.current_revision()

        config = alembic.config.Config()
        config.set_main_option('script_location', str(MIGRATIONS_DIR.resolve()))
        config.set_main_option('sqlalchemy.url', self.url)
        # Share the engine's connection so in-memory databases see the upgrade.
        with self.engine.begin() as connection:
            config.attributes['connection'] = connection
            command.upgrade(config, 'head')

        final = self.current_revision()
        if final is None:
            raise RuntimeError("Migrations did not complete - no revision found")
        if final != initial:
            logger.info("Database migrated", extra={'context': {'from': initial, 'to': final}})

    def check_database_health(self) -> bool:
        try:
            with self.get_session() as session:
                session.execute(text("SELECT 1"))
            return True
        except Exception as e:
            logger.error(f"Database health check failed: {e}")
            return False

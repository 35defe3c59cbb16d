"""Runtime settings loaded from the environment."""
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

APP_DIR_NAME = '.gia-lab'


def _flag(value: Optional[str]) -> bool:
    return (value or '').strip().lower() in ('1', 'true', 'yes', 'on')


@dataclass(frozen=True)
class Settings:
    """
    Process-wide settings.

    Args:
        home: Base directory for logs and the results database
        debug: Enables DEBUG logging and the debug log file
        log_dir: Directory for rotating log files
        db_path: SQLite results database path
        jobs: Default worker count for parallel trials and cells
    """
    home: Path
    debug: bool = False
    log_dir: Path = field(default=None)
    db_path: Path = field(default=None)
    jobs: int = 1

    def __post_init__(self):
        if self.log_dir is None:
            object.__setattr__(self, 'log_dir', self.home / 'logs')
        if self.db_path is None:
            object.__setattr__(self, 'db_path', self.home / 'results.db')

    @classmethod
    def from_env(cls, dotenv_path: Optional[Path] = None) -> 'Settings':
        """Build settings from GIALAB_* variables, reading a .env file first if present."""
        load_dotenv(dotenv_path=dotenv_path, override=False)

        home = Path(os.environ.get('GIALAB_HOME', Path.home() / APP_DIR_NAME)).expanduser()
        log_dir = os.environ.get('GIALAB_LOG_DIR')
        db_path = os.environ.get('GIALAB_DB_PATH')
        try:
            jobs = max(1, int(os.environ.get('GIALAB_JOBS', '1')))
        except ValueError:
            jobs = 1

        return cls(
            home=home,
            debug=_flag(os.environ.get('GIALAB_DEBUG')),
            log_dir=Path(log_dir).expanduser() if log_dir else None,
            db_path=Path(db_path).expanduser() if db_path else None,
            jobs=jobs,
        )


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Return the cached process settings."""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def reset_settings():
    """Drop cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None

"""Logging configuration for the application."""
import sys
import json
import logging
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, Optional

from gia_lab.core.config import get_settings

# Global constants
APP_NAME = 'gia_lab'
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s%(context_suffix)s'
DEFAULT_LOG_LEVEL = logging.INFO
DEBUG_LOG_LEVEL = logging.DEBUG

# Custom level for per-iteration attack traces
TRACE_LEVEL = 5
logging.addLevelName(TRACE_LEVEL, 'TRACE')


class ContextFormatter(logging.Formatter):
    """Formatter that renders ``extra={'context': {...}}`` as a JSON suffix."""

    def format(self, record: logging.LogRecord) -> str:
        context = getattr(record, 'context', None)
        record.context_suffix = f" | {json.dumps(context, default=str, sort_keys=True)}" if context else ''
        return super().format(record)


class StructuredLogger(logging.Logger):
    """Logger with a TRACE level below DEBUG for per-iteration output."""

    def trace(self, msg: str, context: Optional[Dict[str, Any]] = None, **kwargs):
        """Log at TRACE level, attaching ``context`` the way ``extra`` does."""
        if self.isEnabledFor(TRACE_LEVEL):
            if context:
                kwargs['extra'] = {**kwargs.get('extra', {}), 'context': context}
            self._log(TRACE_LEVEL, msg, (), **kwargs)


class LoggerFactory:
    """Factory for creating and configuring the root application logger."""

    @staticmethod
    def get_log_dir() -> Optional[Path]:
        """Get the logging directory, or None when it cannot be created."""
        log_dir = get_settings().log_dir
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
        except OSError:
            return None
        return log_dir

    @staticmethod
    def create_logger(name: str = APP_NAME) -> StructuredLogger:
        """Create and configure the application logger."""
        logging.setLoggerClass(StructuredLogger)
        logger = logging.getLogger(name)

        # Only configure if not already set up
        if not logger.handlers:
            debug_mode = get_settings().debug
            log_level = DEBUG_LOG_LEVEL if debug_mode else DEFAULT_LOG_LEVEL
            formatter = ContextFormatter(LOG_FORMAT)

            logger.setLevel(log_level)
            logger.propagate = False

            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(formatter)
            console_handler.setLevel(log_level)
            logger.addHandler(console_handler)

            log_dir = LoggerFactory.get_log_dir()
            if log_dir is not None:
                file_handler = RotatingFileHandler(
                    log_dir / 'app.log',
                    maxBytes=5*1024*1024,  # 5MB
                    backupCount=5
                )
                file_handler.setFormatter(formatter)
                file_handler.setLevel(log_level)
                logger.addHandler(file_handler)

                if debug_mode:
                    debug_handler = RotatingFileHandler(
                        log_dir / 'debug.log',
                        maxBytes=10*1024*1024,  # 10MB
                        backupCount=3
                    )
                    debug_handler.setFormatter(formatter)
                    debug_handler.setLevel(DEBUG_LOG_LEVEL)
                    logger.addHandler(debug_handler)

        return logger


class LogManager:
    """Singleton manager for application logging."""
    _root = None

    @classmethod
    def get_logger(cls, name: str = APP_NAME) -> StructuredLogger:
        """Get a logger under the application root, configuring the root once."""
        if cls._root is None:
            cls._root = LoggerFactory.create_logger(APP_NAME)
        if name == APP_NAME:
            return cls._root
        logging.setLoggerClass(StructuredLogger)
        child_name = name if name.startswith(APP_NAME + '.') else f"{APP_NAME}.{name}"
        return logging.getLogger(child_name)

    @classmethod
    def set_log_level(cls, level: int):
        """Change the log level of the root logger and its console handlers."""
        logger = cls.get_logger()
        logger.setLevel(level)
        for handler in logger.handlers:
            if type(handler) is logging.StreamHandler:
                handler.setLevel(level)


# Create the default logger instance
logger = LogManager.get_logger()

"""Tests for the logging setup."""
import logging

import pytest

from gia_lab.utils.debug_logger import (APP_NAME, TRACE_LEVEL, ContextFormatter, LogManager,
                                        StructuredLogger)


@pytest.fixture
def record():
    """A plain INFO record."""
    return logging.LogRecord('gia_lab.test', logging.INFO, __file__, 1, "Trial finished", (), None)


class TestContextFormatter:
    """Rendering of structured context."""

    def test_context_becomes_sorted_json_suffix(self, record):
        """Context keys are appended as sorted JSON."""
        record.context = {'trial': 3, 'ssim': 0.5}

        out = ContextFormatter('%(message)s%(context_suffix)s').format(record)

        assert out == 'Trial finished | {"ssim": 0.5, "trial": 3}'

    def test_no_context_no_suffix(self, record):
        """Records without context print unchanged."""
        assert ContextFormatter('%(message)s%(context_suffix)s').format(record) == "Trial finished"


class TestLogManager:
    """Logger naming and levels."""

    def test_children_live_under_the_root(self):
        """Short and dotted names map into the application namespace."""
        assert LogManager.get_logger('search.harness').name == f'{APP_NAME}.search.harness'
        assert LogManager.get_logger('gia_lab.metrics').name == 'gia_lab.metrics'
        assert LogManager.get_logger() is logging.getLogger(APP_NAME)

    def test_root_does_not_propagate(self):
        """Output is not duplicated through the Python root logger."""
        assert LogManager.get_logger().propagate is False

    def test_set_log_level(self):
        """The root logger and its console handler follow the new level."""
        root = LogManager.get_logger()
        previous = root.level
        try:
            LogManager.set_log_level(logging.WARNING)

            assert root.level == logging.WARNING
            consoles = [h for h in root.handlers if type(h) is logging.StreamHandler]
            assert consoles and all(h.level == logging.WARNING for h in consoles)
        finally:
            LogManager.set_log_level(previous)


class TestTrace:
    """The TRACE level."""

    def test_level_is_named(self):
        """TRACE sits below DEBUG."""
        assert logging.getLevelName(TRACE_LEVEL) == 'TRACE'
        assert TRACE_LEVEL < logging.DEBUG

    def test_trace_carries_context(self):
        """Trace records reach handlers with their context attached."""
        logger = LogManager.get_logger('tests.trace')
        assert isinstance(logger, StructuredLogger)
        seen = []

        class Collect(logging.Handler):
            def emit(self, rec):
                seen.append(rec)

        handler = Collect(level=TRACE_LEVEL)
        logger.addHandler(handler)
        logger.setLevel(TRACE_LEVEL)
        try:
            logger.trace("step", {'iteration': 4})
        finally:
            logger.removeHandler(handler)
            logger.setLevel(logging.NOTSET)

        assert len(seen) == 1
        assert seen[0].levelno == TRACE_LEVEL
        assert seen[0].context == {'iteration': 4}

    def test_trace_is_silent_above_level(self):
        """Nothing is emitted when TRACE is disabled."""
        logger = LogManager.get_logger('tests.quiet')
        seen = []

        class Collect(logging.Handler):
            def emit(self, rec):
                seen.append(rec)

        handler = Collect()
        logger.addHandler(handler)
        try:
            logger.trace("step", {'iteration': 1})
        finally:
            logger.removeHandler(handler)

        assert seen == []

"""
Global pytest fixtures for gia-lab tests.

This file contains shared fixtures that can be used across all test modules.
"""
from pathlib import Path

import numpy as np
import pytest

from gia_lab.core.config import reset_settings
from gia_lab.core.events import EventPublisher
from gia_lab.core.models import Batch, BlockStyle, ModelConfig
from gia_lab.data import get_test_database
from gia_lab.nn import build_model


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Point settings at a per-test home so no test touches ~/.gia-lab."""
    home = tmp_path / "gia-home"
    monkeypatch.setenv("GIALAB_HOME", str(home))
    monkeypatch.delenv("GIALAB_DB_PATH", raising=False)
    monkeypatch.delenv("GIALAB_JOBS", raising=False)
    reset_settings()
    yield home
    reset_settings()


@pytest.fixture(autouse=True)
def clean_subscribers():
    """Drop event subscribers left behind by a test."""
    yield
    EventPublisher.clear_subscribers()


@pytest.fixture
def test_database():
    """In-memory database with migrations applied."""
    database = get_test_database()
    yield database
    database.engine.dispose()


@pytest.fixture
def rng():
    """Seeded generator so every test sees the same numbers."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Smallest post-activation model worth differentiating."""
    return ModelConfig(block_style=BlockStyle.POST_ACTIVATION, depth=1, width_multiplier=1,
                       skip_connections=True, input_shape=(3, 8, 8), num_classes=4, base_channels=4)


@pytest.fixture
def tiny_preact_config():
    """Pre-activation twin of ``tiny_config``."""
    return ModelConfig(block_style=BlockStyle.PRE_ACTIVATION, depth=1, width_multiplier=1,
                       skip_connections=True, input_shape=(3, 8, 8), num_classes=4, base_channels=4)


@pytest.fixture
def tiny_model(tiny_config):
    """Model template and seeded parameters for ``tiny_config``."""
    return build_model(tiny_config, seed=7)


@pytest.fixture
def tiny_batch(rng):
    """Two random 3 x 8 x 8 images with distinct labels."""
    return Batch(rng.standard_normal((2, 3, 8, 8)), (1, 3))


@pytest.fixture
def out_dir(tmp_path) -> Path:
    """Output directory for experiment commands."""
    path = tmp_path / "runs"
    path.mkdir()
    return path

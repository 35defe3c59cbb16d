"""SQLAlchemy models for the results schema."""
from sqlalchemy.orm import declarative_base

Base = declarative_base()

# Registers the models on Base.metadata
from gia_lab.data.schema.models import SearchRun, TrialResult  # noqa: E402

__all__ = ['Base', 'SearchRun', 'TrialResult']

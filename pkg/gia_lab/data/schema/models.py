"""SQLAlchemy models for search runs and their trials."""
from datetime import datetime

from sqlalchemy import BigInteger, Column, DateTime, Float, ForeignKey, Integer, String, Text, UniqueConstraint
from sqlalchemy.dialects.sqlite import JSON
from sqlalchemy.orm import relationship

from gia_lab.data.schema import Base


class SearchRun(Base):
    """One invocation of the search harness."""
    __tablename__ = 'search_runs'

    id = Column(String, primary_key=True)  # search id
    master_seed = Column(String, nullable=False)  # u64 does not fit a signed column
    n_trials = Column(Integer, nullable=False)
    status = Column(String, nullable=False)
    run_metadata = Column(JSON, nullable=False, default=dict)
    best_trial_index = Column(Integer)
    best_ssim = Column(Float)
    started_at = Column(DateTime, nullable=False, default=datetime.utcnow)
    completed_at = Column(DateTime)

    trials = relationship("TrialResult", back_populates="search_run", cascade="all, delete-orphan",
                          order_by="TrialResult.trial_index")

    def __repr__(self):
        return f"<SearchRun id={self.id}, status={self.status}>"


class TrialResult(Base):
    """One trial of a search run."""
    __tablename__ = 'trials'
    __table_args__ = (UniqueConstraint('search_id', 'trial_index', name='uq_trials_search_index'),)

    id = Column(Integer, primary_key=True)
    search_id = Column(String, ForeignKey('search_runs.id'), nullable=False)
    trial_index = Column(Integer, nullable=False)
    batch_id = Column(Integer, nullable=False)
    seed = Column(BigInteger, nullable=False)
    config = Column(JSON, nullable=False)
    ssim = Column(Float)
    final_discrepancy = Column(Float)
    status = Column(String, nullable=False)
    error = Column(Text)
    wall_time = Column(Float, nullable=False, default=0.0)

    search_run = relationship("SearchRun", back_populates="trials")

    def __repr__(self):
        return f"<TrialResult search={self.search_id}, index={self.trial_index}, status={self.status}>"

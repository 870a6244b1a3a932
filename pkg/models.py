from sqlalchemy import Column, Integer, String, Text, Float, Boolean, DateTime, ForeignKey, Enum, UniqueConstraint
from sqlalchemy.orm import relationship
from sqlalchemy.sql import func
from database import Base
import enum

# Lifecycle of a stored sweep
class SweepStatus(enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    FINISHED = "finished"
    FAILED = "failed"


class SweepRun(Base):
    __tablename__ = "sweep_runs"

    # Primary key
    id = Column(Integer, primary_key=True, index=True)

    # Sweep definition
    name = Column(String(100), nullable=False, index=True)
    axis = Column(String(20), nullable=False)
    values_json = Column(Text, nullable=False)
    config_json = Column(Text, nullable=False)
    trials_per_point = Column(Integer, nullable=False)

    # Status
    status = Column(Enum(SweepStatus), default=SweepStatus.PENDING, nullable=False, index=True)
    error = Column(Text, nullable=True)

    # Timestamps
    created_at = Column(DateTime(timezone=True), server_default=func.now(), nullable=False)
    finished_at = Column(DateTime(timezone=True), nullable=True)

    # Relationships
    trials = relationship("TrialResult", back_populates="sweep", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<SweepRun(id={self.id}, name='{self.name}', axis='{self.axis}', status='{self.status.value}')>"


class TrialResult(Base):
    __tablename__ = "trial_results"

    # Primary key
    id = Column(Integer, primary_key=True, index=True)

    # Foreign keys
    sweep_id = Column(Integer, ForeignKey("sweep_runs.id"), nullable=False, index=True)

    # Position in the sweep
    sweep_index = Column(Integer, nullable=False)
    sweep_value = Column(String(50), nullable=False)
    trial_index = Column(Integer, nullable=False)
    # uint64 seeds overflow SQLite integers
    seed = Column(String(24), nullable=False)

    # Outcome
    true_order = Column(Integer, nullable=False)
    estimated_order = Column(Integer, nullable=False)
    true_frequencies = Column(Text, nullable=False, default="")
    estimated_frequencies = Column(Text, nullable=False, default="")
    frequency_error = Column(Float, nullable=True)
    success = Column(Boolean, nullable=False)
    generations = Column(Integer, nullable=False)
    evaluations = Column(Integer, nullable=False)
    wall_seconds = Column(Float, nullable=False)
    base_frequency = Column(Float, nullable=True)
    error = Column(Text, nullable=True)

    # Relationships
    sweep = relationship("SweepRun", back_populates="trials")

    # Constraints
    __table_args__ = (
        UniqueConstraint('sweep_id', 'sweep_index', 'trial_index', name='uq_trial_position'),
    )

    def __repr__(self):
        return f"<TrialResult(sweep_id={self.sweep_id}, point={self.sweep_index}, trial={self.trial_index})>"

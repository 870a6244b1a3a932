from sqlalchemy.ext.asyncio import AsyncSession
from sqlalchemy import select, func
from typing import List, Optional, Sequence
from datetime import datetime, timezone
import json

import numpy as np

from models import SweepRun, TrialResult, SweepStatus
from schemas import SweepConfig
from solver.knee_metrics import TrialRecord
from utils.csv_export import format_frequencies


def _parse_frequencies(text: str) -> np.ndarray:
    return np.asarray([float(part) for part in text.split(";") if part], dtype=float)


class SweepCRUD:

    @staticmethod
    async def create_sweep(db: AsyncSession, config: SweepConfig) -> SweepRun:
        """Register a sweep before its trials run"""
        db_sweep = SweepRun(
            name=config.name,
            axis=config.sweep.value,
            values_json=json.dumps(config.values),
            config_json=config.model_dump_json(),
            trials_per_point=config.trials,
            status=SweepStatus.PENDING,
        )
        db.add(db_sweep)
        await db.commit()
        await db.refresh(db_sweep)
        return db_sweep

    @staticmethod
    async def get_sweep(db: AsyncSession, sweep_id: int) -> Optional[SweepRun]:
        """Get a sweep by ID"""
        result = await db.execute(select(SweepRun).where(SweepRun.id == sweep_id))
        return result.scalar_one_or_none()

    @staticmethod
    async def get_sweeps(
        db: AsyncSession,
        skip: int = 0,
        limit: int = 100,
        status: Optional[SweepStatus] = None
    ) -> tuple[List[SweepRun], int]:
        """Get sweeps with pagination, newest first"""
        query = select(SweepRun)
        count_query = select(func.count(SweepRun.id))

        if status is not None:
            query = query.where(SweepRun.status == status)
            count_query = count_query.where(SweepRun.status == status)

        # Get total count
        total_result = await db.execute(count_query)
        total = total_result.scalar()

        # Get paginated results
        query = query.offset(skip).limit(limit).order_by(SweepRun.id.desc())
        result = await db.execute(query)
        sweeps = result.scalars().all()

        return sweeps, total

    @staticmethod
    async def mark_running(db: AsyncSession, sweep_id: int) -> Optional[SweepRun]:
        db_sweep = await SweepCRUD.get_sweep(db, sweep_id)
        if not db_sweep:
            return None

        db_sweep.status = SweepStatus.RUNNING
        await db.commit()
        await db.refresh(db_sweep)
        return db_sweep

    @staticmethod
    async def mark_finished(db: AsyncSession, sweep_id: int) -> Optional[SweepRun]:
        return await SweepCRUD._set_status(db, sweep_id, SweepStatus.FINISHED)

    @staticmethod
    async def mark_failed(db: AsyncSession, sweep_id: int, error: str) -> Optional[SweepRun]:
        return await SweepCRUD._set_status(db, sweep_id, SweepStatus.FAILED, error)

    @staticmethod
    async def _set_status(
        db: AsyncSession,
        sweep_id: int,
        status: SweepStatus,
        error: Optional[str] = None
    ) -> Optional[SweepRun]:
        db_sweep = await SweepCRUD.get_sweep(db, sweep_id)
        if not db_sweep:
            return None

        db_sweep.status = status
        db_sweep.error = error
        db_sweep.finished_at = datetime.now(timezone.utc)
        await db.commit()
        await db.refresh(db_sweep)
        return db_sweep


class TrialCRUD:

    @staticmethod
    async def add_trials(db: AsyncSession, sweep_id: int, records: Sequence[TrialRecord]) -> int:
        """Store the trial records of a sweep; returns how many were written"""
        if not await SweepCRUD.get_sweep(db, sweep_id):
            raise ValueError(f"Sweep {sweep_id} not found")

        for record in records:
            db.add(TrialResult(
                sweep_id=sweep_id,
                sweep_index=record.sweep_index,
                sweep_value=record.sweep_value or str(record.sweep_index),
                trial_index=record.trial_index,
                seed=str(record.seed),
                true_order=record.true_order,
                estimated_order=record.estimated_order,
                true_frequencies=format_frequencies(record.true_frequencies),
                estimated_frequencies=format_frequencies(record.estimated_frequencies),
                frequency_error=record.frequency_error,
                success=record.success,
                generations=record.generations,
                evaluations=record.evaluations,
                wall_seconds=record.wall_seconds,
                base_frequency=record.base_frequency,
                error=record.error,
            ))
        await db.commit()
        return len(records)

    @staticmethod
    async def get_trials(
        db: AsyncSession,
        sweep_id: int,
        skip: int = 0,
        limit: int = 100
    ) -> tuple[List[TrialResult], int]:
        """Trials of a sweep in (sweep index, trial index) order"""
        count_query = select(func.count(TrialResult.id)).where(TrialResult.sweep_id == sweep_id)
        total_result = await db.execute(count_query)
        total = total_result.scalar()

        query = (
            select(TrialResult)
            .where(TrialResult.sweep_id == sweep_id)
            .order_by(TrialResult.sweep_index, TrialResult.trial_index)
            .offset(skip)
            .limit(limit)
        )
        result = await db.execute(query)
        return result.scalars().all(), total

    @staticmethod
    async def get_all_trials(db: AsyncSession, sweep_id: int) -> List[TrialRecord]:
        """Every stored trial of a sweep, rebuilt as records for aggregation"""
        query = (
            select(TrialResult)
            .where(TrialResult.sweep_id == sweep_id)
            .order_by(TrialResult.sweep_index, TrialResult.trial_index)
        )
        result = await db.execute(query)
        return [TrialCRUD.to_record(row) for row in result.scalars().all()]

    @staticmethod
    def to_record(row: TrialResult) -> TrialRecord:
        return TrialRecord(
            true_frequencies=_parse_frequencies(row.true_frequencies),
            estimated_frequencies=_parse_frequencies(row.estimated_frequencies),
            true_order=row.true_order,
            estimated_order=row.estimated_order,
            frequency_error=row.frequency_error,
            success=row.success,
            generations=row.generations,
            evaluations=row.evaluations,
            wall_seconds=row.wall_seconds,
            seed=int(row.seed),
            trial_index=row.trial_index,
            sweep_index=row.sweep_index,
            sweep_value=row.sweep_value,
            base_frequency=row.base_frequency,
            error=row.error,
        )

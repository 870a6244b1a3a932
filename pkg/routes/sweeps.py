from typing import Optional

from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy.ext.asyncio import AsyncSession

from database import get_db
from schemas import SweepConfig, SweepDetail, SweepLaunchResponse, SweepList, SweepRunOut, TrialList, TrialRecordOut
from crud import SweepCRUD, TrialCRUD
from models import SweepStatus
from utils.background_tasks import sweep_job_manager
from utils.harness import aggregate

router = APIRouter(prefix="/sweeps", tags=["sweeps"])


@router.post("/", response_model=SweepLaunchResponse, status_code=202)
async def launch_sweep(config: SweepConfig):
    """Start a Monte Carlo sweep in the background"""
    try:
        sweep_id = await sweep_job_manager.submit(config)
        return SweepLaunchResponse(id=sweep_id, status=SweepStatus.PENDING.value)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")


@router.get("/", response_model=SweepList)
async def get_sweeps(
    skip: int = Query(0, ge=0, description="Number of records to skip"),
    limit: int = Query(100, ge=1, le=1000, description="Number of records to return"),
    status: Optional[SweepStatus] = Query(None, description="Only sweeps in this state"),
    db: AsyncSession = Depends(get_db)
):
    """List stored sweeps, newest first"""
    try:
        sweeps, total = await SweepCRUD.get_sweeps(db, skip, limit, status)
        return SweepList(sweeps=sweeps, total=total, skip=skip, limit=limit)
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")


@router.get("/{sweep_id}", response_model=SweepDetail)
async def get_sweep(sweep_id: int, db: AsyncSession = Depends(get_db)):
    """Sweep status with its aggregate table"""
    try:
        sweep = await SweepCRUD.get_sweep(db, sweep_id)
        if not sweep:
            raise HTTPException(status_code=404, detail="Sweep not found")

        records = await TrialCRUD.get_all_trials(db, sweep_id)
        detail = SweepDetail.model_validate(SweepRunOut.model_validate(sweep).model_dump())
        detail.summary = aggregate(records) if records else []
        return detail
    except HTTPException:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")


@router.get("/{sweep_id}/trials", response_model=TrialList)
async def get_sweep_trials(
    sweep_id: int,
    skip: int = Query(0, ge=0, description="Number of records to skip"),
    limit: int = Query(100, ge=1, le=1000, description="Number of records to return"),
    db: AsyncSession = Depends(get_db)
):
    """Per-trial results of a sweep"""
    try:
        sweep = await SweepCRUD.get_sweep(db, sweep_id)
        if not sweep:
            raise HTTPException(status_code=404, detail="Sweep not found")

        trials, total = await TrialCRUD.get_trials(db, sweep_id, skip, limit)
        return TrialList(
            trials=[TrialRecordOut.model_validate(t) for t in trials],
            total=total,
            skip=skip,
            limit=limit
        )
    except HTTPException:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")

from fastapi import APIRouter, HTTPException
from starlette.concurrency import run_in_threadpool
import numpy as np

from schemas import EstimateRequest, EstimateResponse, FrontPointOut, TrialRequest, TrialRecordOut
from solver.evo_engine import solve
from solver.knee_metrics import knee_profile
from solver.signal_model import Measurements
from utils.harness import run_trial

router = APIRouter(prefix="/solver", tags=["solver"])


def _estimate(request: EstimateRequest) -> EstimateResponse:
    payload = request.measurements
    data = payload.to_array()
    indices = payload.observed_indices if payload.observed_indices is not None else range(data.shape[0])
    measurements = Measurements(data=data, observed_indices=np.asarray(indices, dtype=int))

    result = solve(measurements, request.engine, np.random.default_rng(request.seed))
    return EstimateResponse(
        frequencies=result.knee.frequencies.tolist(),
        model_order=result.knee.order,
        residual=result.knee.residual,
        generations=result.generations,
        evaluations=result.evaluations,
        termination=result.termination,
        front=[
            FrontPointOut(order=point.order, residual=point.residual, slope_change=change)
            for point, change in knee_profile(result.archive, request.engine.residual_floor)
        ],
    )


@router.post("/estimate", response_model=EstimateResponse)
async def estimate(request: EstimateRequest):
    """Estimate frequencies and model order from a measurement matrix"""
    try:
        return await run_in_threadpool(_estimate, request)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")


@router.post("/trial", response_model=TrialRecordOut)
async def trial(request: TrialRequest):
    """Synthesize one scenario, solve it and score the estimate"""
    try:
        record = await run_in_threadpool(run_trial, request.scenario, request.engine, request.seed)
        return TrialRecordOut(
            seed=record.seed,
            true_order=record.true_order,
            estimated_order=record.estimated_order,
            true_frequencies=record.true_frequencies.tolist(),
            estimated_frequencies=record.estimated_frequencies.tolist(),
            frequency_error=record.frequency_error,
            success=record.success,
            generations=record.generations,
            evaluations=record.evaluations,
            wall_seconds=record.wall_seconds,
            base_frequency=record.base_frequency,
        )
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail="Internal server error")

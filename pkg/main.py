from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware
from contextlib import asynccontextmanager
import logging
import time

from config import configure_logging, settings
from database import create_tables
from routes.solver import router as solver_router
from routes.sweeps import router as sweeps_router
from solver.errors import DomainError
from utils.background_tasks import sweep_job_manager

app_logger = logging.getLogger("main")


# Performance monitoring middleware
class PerformanceMiddleware(BaseHTTPMiddleware):
    async def dispatch(self, request: Request, call_next):
        start_time = time.time()
        response = await call_next(request)
        process_time = (time.time() - start_time) * 1000  # Convert to milliseconds

        response.headers["X-Process-Time"] = f"{process_time:.2f}ms"
        return response


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup: logging, result tables and the sweep job manager
    configure_logging()
    await create_tables()
    await sweep_job_manager.start()
    app_logger.info(f"Results store at {settings.results_database_url}")

    yield

    # Shutdown: cancel sweeps still running
    await sweep_job_manager.stop()


# Create FastAPI application
app = FastAPI(
    title="MVESA Line Spectral Estimation API",
    description="Gridless frequency and model order estimation with a multi-objective evolutionary search, plus Monte Carlo sweeps",
    version="1.0.0",
    lifespan=lifespan
)

# Add performance monitoring middleware
app.add_middleware(PerformanceMiddleware)


# Preconditions violated deep in the solver are client errors
@app.exception_handler(DomainError)
async def domain_error_handler(request: Request, exc: DomainError):
    app_logger.warning(f"Rejected {request.url.path}: {exc}")
    return JSONResponse(status_code=400, content={"detail": str(exc)})


# Include routers
app.include_router(solver_router)
app.include_router(sweeps_router)


# Root endpoint
@app.get("/", tags=["root"])
async def root():
    """Welcome endpoint"""
    return {
        "message": "MVESA Line Spectral Estimation API",
        "version": "1.0.0",
        "features": [
            "Gridless frequency estimation",
            "Model order selection from the Pareto knee",
            "Monte Carlo sweeps with stored trial results",
        ],
        "profile": settings.profile.value,
        "docs": "/docs",
        "redoc": "/redoc"
    }


# Health check endpoint
@app.get("/health", tags=["health"])
async def health_check():
    """Health check endpoint"""
    active = sum(1 for sweep_id in sweep_job_manager.tasks if sweep_job_manager.is_active(sweep_id))
    return {
        "status": "healthy",
        "service": "mvesa-line-spectral-estimation",
        "active_sweeps": active,
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8000,
        reload=True
    )

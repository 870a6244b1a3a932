"""
Background sweep jobs for the service
"""

import asyncio
import logging
from typing import Dict, Optional

from database import AsyncSessionLocal
from crud import SweepCRUD, TrialCRUD
from schemas import SweepConfig
from utils.harness import run_sweep

# Setup logging
background_logger = logging.getLogger("background_tasks")


class SweepJobManager:
    """Runs submitted sweeps off the event loop and stores their trials"""

    def __init__(self):
        self.is_running = False
        self.tasks: Dict[int, asyncio.Task] = {}

    async def start(self):
        if self.is_running:
            return
        self.is_running = True
        background_logger.info("Sweep job manager started")

    async def submit(self, config: SweepConfig) -> int:
        """Register the sweep and start it; returns the sweep id"""
        async with AsyncSessionLocal() as db:
            db_sweep = await SweepCRUD.create_sweep(db, config)
            sweep_id = db_sweep.id

        self.tasks[sweep_id] = asyncio.create_task(self._run(sweep_id, config))
        background_logger.info(f"Submitted sweep {sweep_id} ('{config.name}')")
        return sweep_id

    async def wait(self, sweep_id: int, timeout: Optional[float] = None):
        task = self.tasks.get(sweep_id)
        if task is not None:
            await asyncio.wait_for(asyncio.shield(task), timeout)

    def is_active(self, sweep_id: int) -> bool:
        task = self.tasks.get(sweep_id)
        return task is not None and not task.done()

    async def stop(self):
        """Cancel every unfinished sweep"""
        self.is_running = False

        for sweep_id, task in list(self.tasks.items()):
            if not task.done():
                task.cancel()
                try:
                    await task
                except asyncio.CancelledError:
                    background_logger.info(f"Cancelled sweep job: {sweep_id}")

        self.tasks.clear()
        background_logger.info("Stopped all sweep jobs")

    async def _run(self, sweep_id: int, config: SweepConfig):
        try:
            async with AsyncSessionLocal() as db:
                await SweepCRUD.mark_running(db, sweep_id)

            # CPU bound; keep the event loop free
            result = await asyncio.to_thread(run_sweep, config)

            async with AsyncSessionLocal() as db:
                await TrialCRUD.add_trials(db, sweep_id, result.records)
                await SweepCRUD.mark_finished(db, sweep_id)
            background_logger.info(f"Sweep {sweep_id} finished with {len(result.records)} trials")

        except asyncio.CancelledError:
            async with AsyncSessionLocal() as db:
                await SweepCRUD.mark_failed(db, sweep_id, "cancelled")
            raise
        except Exception as e:
            background_logger.error(f"Sweep {sweep_id} failed: {str(e)}")
            async with AsyncSessionLocal() as db:
                await SweepCRUD.mark_failed(db, sweep_id, str(e))
        finally:
            # Stored status outlives the task
            self.tasks.pop(sweep_id, None)


# Global instance
sweep_job_manager = SweepJobManager()

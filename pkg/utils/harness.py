"""
Monte Carlo benchmark harness

Builds seeded scenarios for each point of a sweep, runs the solver on each
trial (serially or on a process pool) and aggregates the metrics.
"""

import time
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from schemas import EngineConfig, Scenario, SweepAxis, SweepConfig, SweepSummaryRow
from solver.evo_engine import solve
from solver.knee_metrics import TrialRecord, rmse_from_errors, success_rate
from solver.signal_model import draw_ground_truth, synthesize

harness_logger = logging.getLogger("harness")

# Axes whose points reuse the same ground truth per trial index
SHARED_TRUTH_AXES = {SweepAxis.M_SEL, SweepAxis.VARIANT}


@dataclass(frozen=True)
class TrialJob:
    """Everything one worker needs to run a trial"""

    scenario: Scenario
    engine: EngineConfig
    seed: int
    trial_index: int
    sweep_index: int
    sweep_value: str
    deterministic: bool = False


@dataclass
class SweepResult:
    config: SweepConfig
    records: List[TrialRecord]
    summary: List[SweepSummaryRow]


class SeedDeriver:
    """Per-trial seeds hashed from (base seed, sweep index, trial index, stream)"""

    @staticmethod
    def derive(base_seed: int, sweep_index: int, trial_index: int, stream: int = 0) -> int:
        sequence = np.random.SeedSequence([base_seed, sweep_index, trial_index, stream])
        return int(sequence.generate_state(1, dtype=np.uint64)[0])

    @staticmethod
    def data_seed(config: SweepConfig, sweep_index: int, trial_index: int) -> int:
        shared = config.sweep in SHARED_TRUTH_AXES
        return SeedDeriver.derive(config.seed, 0 if shared else sweep_index, trial_index)

    @staticmethod
    def subset_rng(config: SweepConfig, sweep_index: int, trial_index: int) -> np.random.Generator:
        return np.random.default_rng(SeedDeriver.derive(config.seed, sweep_index, trial_index, stream=1))


def format_sweep_value(value) -> str:
    """Stable text label of a sweep value"""
    if value is None:
        return "noiseless"
    if isinstance(value, str):
        return value
    if float(value) == int(value) and not isinstance(value, float):
        return str(int(value))
    return repr(float(value))


def draw_observed_indices(num_sensors: int, count: Optional[int], rng: np.random.Generator) -> Optional[List[int]]:
    """Uniform subset of count sensor indices, sorted; None keeps every sensor"""
    if count is None or count >= num_sensors:
        return None
    return sorted(int(i) for i in rng.choice(num_sensors, size=count, replace=False))


def build_scenario(config: SweepConfig, value, sweep_index: int, trial_index: int) -> Scenario:
    """Scenario of one trial at one sweep point"""
    fields = {
        "num_sensors": config.num_sensors,
        "true_order": config.true_order,
        "num_snapshots": config.num_snapshots,
        "snr_db": config.snr_db,
        "separation": config.separation,
    }
    observed_count = config.observed_count

    if config.sweep == SweepAxis.SNR:
        fields["snr_db"] = value
    elif config.sweep == SweepAxis.K:
        fields["true_order"] = value
    elif config.sweep == SweepAxis.SEPARATION:
        fields["separation"] = value
        fields["true_order"] = 2
    elif config.sweep == SweepAxis.M_SEL:
        observed_count = value
    elif config.sweep == SweepAxis.M:
        fields["num_sensors"] = value

    fields["rng_seed"] = SeedDeriver.data_seed(config, sweep_index, trial_index)
    fields["observed_indices"] = draw_observed_indices(
        fields["num_sensors"], observed_count, SeedDeriver.subset_rng(config, sweep_index, trial_index)
    )
    return Scenario(**fields)


def run_trial(scenario: Scenario, engine_config: EngineConfig, seed: Optional[int] = None, **labels) -> TrialRecord:
    """Synthesize data, run the search to termination and score the knee"""
    seed = scenario.rng_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    truth, measurements = synthesize(scenario, rng)

    started = time.perf_counter()
    result = solve(measurements, engine_config, rng)
    elapsed = time.perf_counter() - started

    return TrialRecord.from_estimate(
        truth.frequencies,
        result.knee.frequencies,
        generations=result.generations,
        evaluations=result.evaluations,
        wall_seconds=elapsed,
        seed=seed,
        base_frequency=truth.base_frequency,
        **labels,
    )


def _true_frequencies(job: TrialJob) -> Optional[np.ndarray]:
    """Ground truth a failed trial was drawn with; None when drawing itself fails"""
    try:
        return draw_ground_truth(job.scenario, np.random.default_rng(job.seed)).frequencies
    except Exception:
        return None


def execute_job(job: TrialJob) -> TrialRecord:
    """Run one job; failures become error records instead of aborting the sweep"""
    labels = {
        "trial_index": job.trial_index,
        "sweep_index": job.sweep_index,
        "sweep_value": job.sweep_value,
    }
    try:
        record = run_trial(job.scenario, job.engine, job.seed, **labels)
    except Exception as e:
        harness_logger.error(f"Trial {job.trial_index} at {job.sweep_value} (seed {job.seed}) failed: {str(e)}")
        record = TrialRecord.failed(
            job.scenario.true_order,
            str(e),
            true_frequencies=_true_frequencies(job),
            seed=job.seed,
            **labels,
        )

    if job.deterministic:
        record.wall_seconds = 0.0
    return record


def build_jobs(config: SweepConfig) -> List[TrialJob]:
    """Jobs in (sweep index, trial index) order"""
    jobs = []
    for sweep_index, value in enumerate(config.values):
        engine = config.engine_config(value if config.sweep == SweepAxis.VARIANT else None)
        label = format_sweep_value(value)
        for trial_index in range(config.trials):
            scenario = build_scenario(config, value, sweep_index, trial_index)
            jobs.append(
                TrialJob(
                    scenario=scenario,
                    engine=engine,
                    seed=scenario.rng_seed,
                    trial_index=trial_index,
                    sweep_index=sweep_index,
                    sweep_value=label,
                    deterministic=config.deterministic,
                )
            )
    return jobs


def execute_jobs(jobs: Sequence[TrialJob], workers: int = 1) -> List[TrialRecord]:
    """Run jobs serially or on a process pool; results keep job order"""
    if workers <= 1 or len(jobs) <= 1:
        return [execute_job(job) for job in jobs]

    chunksize = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute_job, jobs, chunksize=chunksize))


def aggregate(records: Sequence[TrialRecord]) -> List[SweepSummaryRow]:
    """One summary row per sweep point, in sweep order"""
    groups = {}
    for record in records:
        groups.setdefault(record.sweep_index, []).append(record)

    rows = []
    for sweep_index in sorted(groups):
        group = groups[sweep_index]
        rmse = rmse_from_errors(r.frequency_error for r in group)
        rows.append(
            SweepSummaryRow(
                sweep_value=group[0].sweep_value or str(sweep_index),
                rmse=None if np.isnan(rmse) else rmse,
                success_rate=success_rate(group),
                mean_generations=float(np.mean([r.generations for r in group])),
                mean_evaluations=float(np.mean([r.evaluations for r in group])),
                mean_wall_seconds=float(np.mean([r.wall_seconds for r in group])),
                trials_included_in_rmse=sum(1 for r in group if r.frequency_error is not None),
            )
        )
    return rows


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """Run every trial of every sweep point and aggregate"""
    workers = workers or config.workers
    jobs = build_jobs(config)
    harness_logger.info(
        f"Sweep '{config.name}': axis={config.sweep.value} points={len(config.values)} "
        f"trials={config.trials} workers={workers}"
    )

    started = time.perf_counter()
    records = execute_jobs(jobs, workers)
    summary = aggregate(records)

    failures = sum(1 for r in records if r.error)
    harness_logger.info(
        f"Sweep '{config.name}' finished in {time.perf_counter() - started:.1f}s "
        f"({len(records)} trials, {failures} failed)"
    )
    return SweepResult(config=config, records=records, summary=summary)


def run_separation_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """Two-tone resolution sweep: K=2, frequencies at theta0 and theta0 + delta"""
    if config.sweep != SweepAxis.SEPARATION or config.true_order != 2:
        config = SweepConfig.model_validate({**config.model_dump(), "sweep": SweepAxis.SEPARATION, "true_order": 2})
    return run_sweep(config, workers)

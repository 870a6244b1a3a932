"""
CSV output of a sweep: an aggregate table plus a per-trial companion table
"""

import logging
from pathlib import Path
from typing import Sequence, Tuple

import pandas as pd

from config import HarnessDefaults
from solver.errors import DomainError
from solver.knee_metrics import TrialRecord
from utils.harness import aggregate

csv_logger = logging.getLogger("csv_export")

SUMMARY_COLUMNS = [
    "sweep_value",
    "rmse",
    "success_rate",
    "mean_generations",
    "mean_evaluations",
    "mean_wall_seconds",
    "trials_included_in_rmse",
]

TRIAL_COLUMNS = [
    "sweep_index",
    "sweep_value",
    "trial_index",
    "seed",
    "true_order",
    "estimated_order",
    "success",
    "frequency_error",
    "generations",
    "evaluations",
    "wall_seconds",
    "base_frequency",
    "true_frequencies",
    "estimated_frequencies",
    "error",
]


def format_frequencies(frequencies) -> str:
    return ";".join(HarnessDefaults.FREQUENCY_FORMAT % f for f in frequencies)


def output_paths(prefix: str) -> Tuple[Path, Path]:
    """<prefix>_summary.csv and <prefix>_trials.csv"""
    base = Path(prefix)
    if base.suffix == ".csv":
        base = base.with_suffix("")
    return (
        base.with_name(f"{base.name}_summary.csv"),
        base.with_name(f"{base.name}_trials.csv"),
    )


def summary_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    rows = [row.model_dump() for row in aggregate(records)]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def trials_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    rows = []
    for r in records:
        rows.append({
            "sweep_index": r.sweep_index,
            "sweep_value": r.sweep_value,
            "trial_index": r.trial_index,
            "seed": str(r.seed),
            "true_order": r.true_order,
            "estimated_order": r.estimated_order,
            "success": int(r.success),
            "frequency_error": r.frequency_error,
            "generations": r.generations,
            "evaluations": r.evaluations,
            "wall_seconds": r.wall_seconds,
            "base_frequency": r.base_frequency,
            "true_frequencies": format_frequencies(r.true_frequencies),
            "estimated_frequencies": format_frequencies(r.estimated_frequencies),
            "error": r.error or "",
        })
    return pd.DataFrame(rows, columns=TRIAL_COLUMNS)


def emit_csv(records: Sequence[TrialRecord], prefix: str) -> Tuple[Path, Path]:
    """
    Write the aggregate and per-trial tables for records.
    Undefined RMSE is written as nan. Raises OSError when the target is not writable.
    """
    if not records:
        raise DomainError("No trial records to write")

    summary_path, trials_path = output_paths(prefix)
    summary_path.parent.mkdir(parents=True, exist_ok=True)

    summary_frame(records).to_csv(summary_path, index=False, lineterminator="\n", na_rep="nan")
    trials_frame(records).to_csv(trials_path, index=False, lineterminator="\n", na_rep="nan")

    csv_logger.info(f"Wrote {summary_path} and {trials_path} ({len(records)} trials)")
    return summary_path, trials_path

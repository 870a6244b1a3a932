"""
Knee identification, stopping rule and Monte Carlo metrics
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from config import SolverDefaults
from schemas import EngineConfig
from solver.amplitude_solver import Candidate
from solver.archive_pruning import Archive
from solver.errors import DomainError
from solver.pareto import nondominated_indices
from solver.signal_model import wrap_distance


@dataclass(frozen=True)
class FrontPoint:
    order: int
    residual: float
    norm_order: float
    norm_residual: float
    candidate: Candidate


@dataclass
class TrialRecord:
    """Outcome of one Monte Carlo trial"""

    true_frequencies: np.ndarray
    estimated_frequencies: np.ndarray
    true_order: int
    estimated_order: int
    frequency_error: Optional[float]
    success: bool
    generations: int
    evaluations: int
    wall_seconds: float
    seed: int = 0
    trial_index: int = 0
    sweep_index: int = 0
    sweep_value: Optional[str] = None
    base_frequency: Optional[float] = None
    error: Optional[str] = None

    @classmethod
    def from_estimate(cls, true_frequencies, estimated_frequencies, **kwargs) -> "TrialRecord":
        true_frequencies = np.asarray(true_frequencies, dtype=float)
        estimated_frequencies = np.asarray(estimated_frequencies, dtype=float)
        return cls(
            true_frequencies=true_frequencies,
            estimated_frequencies=estimated_frequencies,
            true_order=int(true_frequencies.size),
            estimated_order=int(estimated_frequencies.size),
            frequency_error=matched_error(estimated_frequencies, true_frequencies),
            success=bool(estimated_frequencies.size == true_frequencies.size),
            **kwargs,
        )

    @classmethod
    def failed(cls, true_order: int, error: str, true_frequencies=None, **kwargs) -> "TrialRecord":
        """Record for a trial that raised; counts as a model order miss"""
        return cls(
            true_frequencies=np.asarray(true_frequencies if true_frequencies is not None else [], dtype=float),
            estimated_frequencies=np.empty(0),
            true_order=int(true_order),
            estimated_order=0,
            frequency_error=None,
            success=False,
            generations=0,
            evaluations=0,
            wall_seconds=0.0,
            error=error,
            **kwargs,
        )


# ===== KNEE =====

def _normalize(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    low, high = float(np.min(reference)), float(np.max(reference))
    if high - low <= 0.0:
        return np.zeros_like(values, dtype=float)
    return (values - low) / (high - low)


def _floored_residuals(archive: Archive, residual_floor: float) -> List[float]:
    floor = residual_floor * archive.energy if archive.energy else 0.0
    return [c.residual if c.residual > floor else 0.0 for c in archive.candidates()]


def front_points(archive: Archive, residual_floor: float = SolverDefaults.RESIDUAL_FLOOR) -> List[FrontPoint]:
    """Nondominated archive entries by ascending order, with [0, 1] coordinates"""
    if len(archive) == 0:
        raise DomainError("Cannot identify a knee in an empty archive")

    candidates = archive.candidates()
    residuals = _floored_residuals(archive, residual_floor)
    keep = nondominated_indices([(c.order, r) for c, r in zip(candidates, residuals)])

    orders = np.asarray([candidates[i].order for i in keep], dtype=float)
    values = np.asarray([residuals[i] for i in keep], dtype=float)
    norm_orders = _normalize(orders, orders)
    norm_values = _normalize(values, values)

    return [
        FrontPoint(
            order=candidates[i].order,
            residual=float(values[j]),
            norm_order=float(norm_orders[j]),
            norm_residual=float(norm_values[j]),
            candidate=candidates[i],
        )
        for j, i in enumerate(keep)
    ]


def slope_changes(points: Sequence[FrontPoint]) -> np.ndarray:
    """
    Loss of steepness at each front point, |s_in| - |s_out|, in normalized
    coordinates. The last point continues flat; the first point has no
    incoming segment and stays NaN.
    """
    count = len(points)
    xs = np.asarray([p.norm_order for p in points])
    ys = np.asarray([p.norm_residual for p in points])
    segments = np.diff(ys) / np.diff(xs)

    changes = np.full(count, np.nan)
    for i in range(1, count):
        incoming = segments[i - 1]
        outgoing = segments[i] if i < count - 1 else 0.0
        changes[i] = abs(incoming) - abs(outgoing)
    return changes


def identify_knee(archive: Archive, residual_floor: float = SolverDefaults.RESIDUAL_FLOOR) -> Candidate:
    """Kink method: the front point with the largest slope change"""
    points = front_points(archive, residual_floor)
    # Slope change needs an incoming and an outgoing segment
    if len(points) <= 2:
        return min(points, key=lambda p: p.residual).candidate

    changes = slope_changes(points)
    scores = np.where(np.isnan(changes), -np.inf, changes)
    # Ties go to the sparser model
    best = np.flatnonzero(scores >= scores.max() - SolverDefaults.KNEE_TIE_TOLERANCE)[0]
    return points[best].candidate


def knee_profile(archive: Archive, residual_floor: float = SolverDefaults.RESIDUAL_FLOOR) -> List[Tuple[FrontPoint, Optional[float]]]:
    """Front points paired with their slope change, for reporting"""
    points = front_points(archive, residual_floor)
    if len(points) < 2:
        return [(p, None) for p in points]
    changes = slope_changes(points)
    return [(p, None if np.isnan(c) else float(c)) for p, c in zip(points, changes)]


# ===== STOPPING =====

def relative_change(current: np.ndarray, previous: np.ndarray) -> float:
    """||current - previous||_F / ||previous||_F"""
    scale = float(np.linalg.norm(previous))
    difference = float(np.linalg.norm(current - previous))
    if scale == 0.0:
        return 0.0 if difference == 0.0 else np.inf
    return difference / scale


def termination_reason(
    history: Sequence[np.ndarray],
    generation: int,
    evaluations: int = 0,
    config: EngineConfig = EngineConfig(),
) -> Optional[str]:
    """Why the run should stop now, or None to continue"""
    if generation >= config.max_generations:
        return "max_generations"
    if evaluations >= config.max_evaluations:
        return "max_evaluations"

    # Convergence is only tested from min_generations on
    if generation < config.min_generations:
        return None

    needed = config.stall_generations
    if len(history) < needed + 1:
        return None
    recent = history[-(needed + 1):]
    if all(relative_change(b, a) < config.stopping_tolerance for a, b in zip(recent, recent[1:])):
        return "converged"
    return None


def stopping_met(
    history: Sequence[np.ndarray],
    generation: int,
    evaluations: int = 0,
    config: EngineConfig = EngineConfig(),
) -> bool:
    return termination_reason(history, generation, evaluations, config) is not None


# ===== METRICS =====

def match_frequencies(estimated: Sequence[float], true: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hungarian assignment of estimates to true frequencies minimizing the
    summed wrap-around distance. Returns the wrap distance of each true
    frequency to its matched estimate, and the matched estimate indices.
    """
    estimated = np.atleast_1d(np.asarray(estimated, dtype=float))
    true = np.atleast_1d(np.asarray(true, dtype=float))
    if estimated.size < true.size:
        raise DomainError("Fewer estimates than true frequencies")
    distance = wrap_distance(estimated[:, None], true[None, :])
    rows, cols = linear_sum_assignment(distance)
    order = np.argsort(cols)
    return distance[rows[order], cols[order]], rows[order]


def matched_error(estimated: Sequence[float], true: Sequence[float]) -> Optional[float]:
    """
    2-norm of the wrap-around errors after optimal assignment of estimates to
    true frequencies. None when fewer estimates than true frequencies.
    """
    if np.atleast_1d(estimated).size < np.atleast_1d(true).size:
        return None
    errors, _ = match_frequencies(estimated, true)
    return float(np.linalg.norm(errors))


def rmse_from_errors(errors: Iterable[Optional[float]]) -> float:
    """sqrt of the mean matched 2-norm over qualifying trials; NaN when none qualify"""
    included = [e for e in errors if e is not None]
    if not included:
        return float("nan")
    return float(np.sqrt(np.mean(included)))


def assignment_rmse(trials: Iterable[Tuple[Sequence[float], Sequence[float]]]) -> float:
    """RMSE over (estimated, true) pairs; trials with K-hat < K are excluded"""
    return rmse_from_errors(matched_error(est, true) for est, true in trials)


def success_rate(records: Sequence[TrialRecord]) -> float:
    """Fraction of trials whose estimated model order equals the true one"""
    if not records:
        raise DomainError("Success rate of an empty trial set is undefined")
    return float(np.mean([r.success for r in records]))

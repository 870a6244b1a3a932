"""
Local frequency sliding for a finished search

Evolutionary moves only place frequencies to about the mutation scale. Once
the search stops, every archive entry is slid by Levenberg-Marquardt steps on
the variable-projection residual Y - A(theta) A(theta)^+ Y, amplitudes
eliminated. A slid candidate replaces its entry only when its residual is
strictly lower, so per-length archive residuals stay non-increasing.
"""

import logging
from typing import Tuple

import numpy as np
import scipy.linalg as spla
from scipy.optimize import least_squares

from config import SolverDefaults
from solver.amplitude_solver import Candidate, evaluate
from solver.archive_pruning import Archive
from solver.signal_model import Measurements, steering_matrix, wrap_frequency

refinement_logger = logging.getLogger("refinement")


def _stack(matrix: np.ndarray) -> np.ndarray:
    """Complex matrix as one real vector, real parts first"""
    return np.concatenate([matrix.real.ravel(), matrix.imag.ravel()])


def _fit(thetas: np.ndarray, measurements: Measurements) -> Tuple[np.ndarray, np.ndarray]:
    basis = steering_matrix(wrap_frequency(thetas), measurements.observed_indices)
    amplitudes, _, _, _ = spla.lstsq(
        basis,
        measurements.data,
        cond=SolverDefaults.LSTSQ_RCOND,
        lapack_driver="gelsd",
    )
    return basis, amplitudes


def projection_residual(thetas: np.ndarray, measurements: Measurements) -> np.ndarray:
    """Stacked real residual of the least-squares fit at thetas"""
    basis, amplitudes = _fit(thetas, measurements)
    return _stack(measurements.data - basis @ amplitudes)


def projection_jacobian(thetas: np.ndarray, measurements: Measurements) -> np.ndarray:
    """
    Kaufman approximation of the variable-projection Jacobian: column k is
    -P_perp (dA/dtheta_k) S, with P_perp the projector off the span of A.
    """
    basis, amplitudes = _fit(thetas, measurements)
    indices = np.asarray(measurements.observed_indices, dtype=float)
    derivatives = 1j * np.pi * indices[:, None] * basis

    snapshots = measurements.num_snapshots
    directions = np.concatenate(
        [np.outer(derivatives[:, k], amplitudes[k]) for k in range(basis.shape[1])],
        axis=1,
    )
    coefficients, _, _, _ = spla.lstsq(
        basis,
        directions,
        cond=SolverDefaults.LSTSQ_RCOND,
        lapack_driver="gelsd",
    )
    projected = directions - basis @ coefficients

    return np.column_stack([
        -_stack(projected[:, k * snapshots:(k + 1) * snapshots])
        for k in range(basis.shape[1])
    ])


def slide_frequencies(
    candidate: Candidate,
    measurements: Measurements,
    max_evaluations: int,
) -> Tuple[Candidate, int]:
    """
    Slide the candidate's frequencies to a local least-squares optimum.
    Returns the better of the slid and original candidates and the number
    of amplitude fits spent, never more than max_evaluations.
    """
    # Shape check and final refit, plus one residual call MINPACK may make past max_nfev
    if max_evaluations < 5:
        return candidate, 0

    max_steps = (max_evaluations - 3) // 2
    try:
        result = least_squares(
            projection_residual,
            np.asarray(candidate.frequencies, dtype=float),
            jac=projection_jacobian,
            method="lm",
            xtol=SolverDefaults.SLIDE_TOLERANCE,
            ftol=SolverDefaults.SLIDE_TOLERANCE,
            max_nfev=max_steps,
            args=(measurements,),
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        refinement_logger.debug(f"Sliding order {candidate.order} failed: {e}")
        return candidate, max_evaluations

    spent = int(result.nfev) + int(result.njev or 0) + 2
    if not np.all(np.isfinite(result.x)):
        return candidate, spent

    slid = evaluate(wrap_frequency(result.x), measurements)
    if slid.residual < candidate.residual:
        return slid, spent
    return candidate, spent


def slide_archive(
    archive: Archive,
    measurements: Measurements,
    budget: int,
    per_candidate: int = SolverDefaults.SLIDE_EVALUATIONS,
) -> Tuple[Archive, int]:
    """Slide every archive entry within the remaining evaluation budget"""
    updated = archive
    spent = 0
    for candidate in archive.candidates():
        allowance = min(per_candidate, budget - spent)
        if allowance <= 0:
            break
        slid, used = slide_frequencies(candidate, measurements, allowance)
        spent += used
        if slid is not candidate:
            updated = updated.with_entry(slid)

    refinement_logger.debug(f"Slid {len(archive)} archive entries with {spent} evaluations")
    return updated, spent

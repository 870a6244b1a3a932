"""
Amplitude recovery and two-objective fitness of a frequency combination

Objectives are (model order, ||Y - A(theta) S||_F^2). The model order stands
in for the atomic l0 norm: d atoms reproducing Y-hat bound its norm by d.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg as spla

from config import SolverDefaults
from solver.signal_model import Measurements, steering_matrix


@dataclass(frozen=True)
class Candidate:
    """Variable-length frequency combination with its amplitudes and fitness"""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    residual: float

    @property
    def order(self) -> int:
        return int(self.frequencies.size)

    @property
    def fitness(self) -> Tuple[int, float]:
        return (self.order, self.residual)

    def synthesize(self, observed_indices: Sequence[int]) -> np.ndarray:
        """Reconstructed measurements A(theta) S"""
        return steering_matrix(self.frequencies, observed_indices) @ self.amplitudes

    def __repr__(self):
        return f"<Candidate(order={self.order}, residual={self.residual:.6g})>"


def recover_amplitudes(thetas: Sequence[float], measurements: Measurements) -> np.ndarray:
    """Minimum-norm least-squares amplitudes for the given frequencies"""
    basis = steering_matrix(thetas, measurements.observed_indices)
    # SVD-based solve of the Hermitian normal equations; near-duplicate
    # columns fall below rcond and get the minimum-norm split
    amplitudes, _, _, _ = spla.lstsq(
        basis,
        measurements.data,
        cond=SolverDefaults.LSTSQ_RCOND,
        lapack_driver="gelsd",
    )
    return amplitudes


def residual_energy(thetas: Sequence[float], amplitudes: np.ndarray, measurements: Measurements) -> float:
    """Squared Frobenius norm of Y - A(theta) S"""
    error = measurements.data - steering_matrix(thetas, measurements.observed_indices) @ amplitudes
    return float(np.vdot(error, error).real)


def evaluate(thetas: Sequence[float], measurements: Measurements) -> Candidate:
    """Build a Candidate: sort frequencies, fit amplitudes, score both objectives"""
    thetas = np.sort(np.atleast_1d(np.asarray(thetas, dtype=float)))
    amplitudes = recover_amplitudes(thetas, measurements)
    return Candidate(
        frequencies=thetas,
        amplitudes=amplitudes,
        residual=residual_energy(thetas, amplitudes, measurements),
    )

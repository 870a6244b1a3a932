"""
Signal model for line spectral estimation

Y = A(theta) S + N, where column k of A samples exp(i*pi*theta_k*m) at the
observed sensor indices m. Frequencies live on the circle [-1, 1).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as spla

from config import SolverDefaults
from schemas import Scenario
from solver.errors import DomainError

signal_logger = logging.getLogger("signal_model")

# Amplitudes ~ CN(1, 0.1), variance taken as total complex variance
AMPLITUDE_MEAN = 1.0
AMPLITUDE_VARIANCE = 0.1


@dataclass(frozen=True)
class GroundTruth:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    base_frequency: Optional[float] = None

    @property
    def order(self) -> int:
        return int(self.frequencies.size)


@dataclass(frozen=True)
class Measurements:
    """Observation matrix restricted to the observed sensor rows"""

    data: np.ndarray
    observed_indices: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        indices = np.asarray(self.observed_indices, dtype=int)
        if data.ndim != 2 or data.shape[0] != indices.size:
            raise DomainError("Measurement rows must match the observed index set")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "observed_indices", indices)

    @property
    def num_observed(self) -> int:
        return int(self.data.shape[0])

    @property
    def num_snapshots(self) -> int:
        return int(self.data.shape[1])

    @property
    def max_order(self) -> int:
        """Largest admissible candidate length, M_sel - 1"""
        return self.num_observed - 1

    @property
    def energy(self) -> float:
        """Squared Frobenius norm of Y"""
        return float(np.vdot(self.data, self.data).real)


def wrap_frequency(theta):
    """Reduce frequencies modulo 2 into [-1, 1)"""
    wrapped = np.mod(np.asarray(theta, dtype=float) + 1.0, 2.0) - 1.0
    # np.mod can round up to the period for tiny negative inputs
    return np.where(wrapped >= 1.0, wrapped - 2.0, wrapped)


def wrap_distance(a, b):
    """Distance between frequencies on the period-2 circle"""
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 2.0
    return np.minimum(diff, 2.0 - diff)


def _check_domain(thetas: np.ndarray) -> None:
    if np.any(~np.isfinite(thetas)) or np.any(thetas < -1.0) or np.any(thetas >= 1.0):
        raise DomainError("Frequencies must lie in [-1, 1)")


def steering_vector(theta: float, observed_indices: Sequence[int]) -> np.ndarray:
    """Sample the complex sinusoid exp(i*pi*theta*m) at the observed indices"""
    _check_domain(np.atleast_1d(np.asarray(theta, dtype=float)))
    indices = np.asarray(observed_indices, dtype=float)
    return np.exp(1j * np.pi * float(theta) * indices)


def steering_matrix(thetas: Sequence[float], observed_indices: Sequence[int]) -> np.ndarray:
    """Stack steering vectors column-wise, in the order of thetas"""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if thetas.size == 0:
        raise DomainError("At least one frequency is required (minimum model order is 1)")
    _check_domain(thetas)
    indices = np.asarray(observed_indices, dtype=float)
    return np.exp(1j * np.pi * np.outer(indices, thetas))


def draw_ground_truth(scenario: Scenario, rng: np.random.Generator) -> GroundTruth:
    """Draw frequencies uniformly on [-1, 1) and amplitudes from CN(1, 0.1)"""
    base_frequency = None
    if scenario.frequencies is not None:
        thetas = np.sort(np.asarray(scenario.frequencies, dtype=float))
    elif scenario.separation is not None:
        base_frequency = float(rng.uniform(-1.0, 1.0))
        pair = wrap_frequency([base_frequency, base_frequency + scenario.separation])
        thetas = np.sort(pair)
    else:
        # No separation control; redraw only on exact collisions
        while True:
            thetas = np.sort(rng.uniform(-1.0, 1.0, scenario.true_order))
            if np.unique(thetas).size == thetas.size:
                break

    shape = (scenario.true_order, scenario.num_snapshots)
    scale = np.sqrt(AMPLITUDE_VARIANCE / 2.0)
    amplitudes = AMPLITUDE_MEAN + scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return GroundTruth(frequencies=thetas, amplitudes=amplitudes, base_frequency=base_frequency)


def observe(truth: GroundTruth, scenario: Scenario, rng: np.random.Generator) -> Measurements:
    """Form Y = A S + N on the full array, then keep the observed rows"""
    full_indices = np.arange(scenario.num_sensors)
    clean = steering_matrix(truth.frequencies, full_indices) @ truth.amplitudes

    # Full M-row noise is always drawn so subsampled runs share the stream
    shape = clean.shape
    unit_noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    if scenario.snr_db is None:
        data = clean
    else:
        signal_power = float(np.mean(np.abs(clean) ** 2))
        noise_variance = signal_power * 10.0 ** (-scenario.snr_db / 10.0)
        data = clean + np.sqrt(noise_variance) * unit_noise

    indices = scenario.indices
    return Measurements(data=data[indices], observed_indices=indices)


def synthesize(scenario: Scenario, rng: np.random.Generator) -> Tuple[GroundTruth, Measurements]:
    """Draw a ground truth and its noisy, possibly incomplete, measurements"""
    truth = draw_ground_truth(scenario, rng)
    measurements = observe(truth, scenario, rng)
    signal_logger.debug(
        f"Synthesized K={truth.order} M={scenario.num_sensors} M_sel={measurements.num_observed} "
        f"L={scenario.num_snapshots} snr={scenario.snr_db}"
    )
    return truth, measurements


def capon_grid(num_observed: int, grid_factor: int = SolverDefaults.CAPON_GRID_FACTOR) -> np.ndarray:
    """Uniform grid of grid_factor * M_sel points on [-1, 1)"""
    size = grid_factor * num_observed
    return -1.0 + 2.0 * np.arange(size) / size


def capon_spectrum(
    measurements: Measurements,
    grid: np.ndarray,
    loading: float = SolverDefaults.CAPON_LOADING,
) -> np.ndarray:
    """Capon spectrum 1 / (a^H R^-1 a) with diagonal loading"""
    data = measurements.data
    m_sel = measurements.num_observed
    covariance = data @ data.conj().T / measurements.num_snapshots

    epsilon = loading * float(np.trace(covariance).real) / m_sel
    if epsilon <= 0.0:
        # All-zero data; any positive loading keeps R invertible
        epsilon = 1.0
    covariance = covariance + epsilon * np.eye(m_sel)

    scan = steering_matrix(grid, measurements.observed_indices)
    weighted = spla.solve(covariance, scan, assume_a="pos")
    denominator = np.einsum("ij,ij->j", scan.conj(), weighted).real
    return 1.0 / denominator


def capon_initial_solution(
    measurements: Measurements,
    max_order: Optional[int] = None,
    grid_factor: int = SolverDefaults.CAPON_GRID_FACTOR,
    loading: float = SolverDefaults.CAPON_LOADING,
) -> np.ndarray:
    """Return the max_order strongest Capon peaks, sorted ascending"""
    if max_order is None:
        max_order = measurements.max_order
    if max_order < 1:
        raise DomainError("Capon initialization needs at least two observed sensors")

    grid = capon_grid(measurements.num_observed, grid_factor)
    spectrum = capon_spectrum(measurements, grid, loading)

    # Circular non-maximum suppression within one grid step
    left = np.roll(spectrum, 1)
    right = np.roll(spectrum, -1)
    peaks = np.flatnonzero((spectrum > left) & (spectrum >= right))
    chosen = peaks[np.argsort(-spectrum[peaks], kind="stable")][:max_order]

    if chosen.size < max_order:
        remaining = np.setdiff1d(np.arange(grid.size), chosen)
        fill = remaining[np.argsort(-spectrum[remaining], kind="stable")][: max_order - chosen.size]
        chosen = np.concatenate([chosen, fill])

    return np.sort(grid[chosen])

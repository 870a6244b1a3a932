import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Results store must point at a scratch file before database.py is imported
_SCRATCH = tempfile.mkdtemp(prefix="mvesa-tests-")
os.environ.setdefault("MVESA_RESULTS_DB", f"sqlite+aiosqlite:///{_SCRATCH}/results.db")
os.environ.setdefault("MVESA_WORKERS", "1")

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from schemas import EngineConfig, Scenario  # noqa: E402
from solver.amplitude_solver import Candidate  # noqa: E402
from solver.signal_model import Measurements, steering_matrix  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_engine():
    """Engine small enough for quick end-to-end runs"""
    return EngineConfig(population_size=8, max_generations=4, max_evaluations=400)


@pytest.fixture
def single_tone():
    """Noiseless single tone at 0.3 on an 8-sensor array, one snapshot"""
    indices = np.arange(8)
    data = steering_matrix([0.3], indices) @ np.array([[1.0 + 0.5j]])
    return Measurements(data=data, observed_indices=indices)


@pytest.fixture
def two_tone_scenario():
    return Scenario(num_sensors=10, true_order=2, num_snapshots=5, snr_db=20.0, rng_seed=7)


def make_candidate(order: int, residual: float) -> Candidate:
    """Candidate with evenly spread frequencies and unit amplitudes"""
    frequencies = np.linspace(-0.9, 0.9, order) if order > 1 else np.array([0.0])
    return Candidate(frequencies=frequencies, amplitudes=np.ones((order, 1), dtype=complex), residual=residual)


@pytest.fixture
def candidate_factory():
    return make_candidate

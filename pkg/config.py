"""
Configuration for the MVESA line spectral estimation toolkit
Solver constants, harness defaults and environment-driven settings
"""

import os
import logging
from enum import Enum
from dataclasses import dataclass


class Profile(Enum):
    DESK = "desk"
    FULL = "full"


@dataclass
class SolverDefaults:
    """Algorithm constants for the evolutionary search"""

    # Population and variation
    POPULATION_SIZE = 30
    MUTATION_DISTRIBUTION_INDEX = 20.0
    CROSSOVER_ATTEMPTS = 10  # redraws before falling back to parent copies

    # Budget and stopping
    MAX_GENERATIONS = 100
    MAX_EVALUATIONS = 5000
    STOPPING_TOLERANCE = 1e-6
    STALL_GENERATIONS = 3
    MIN_GENERATIONS = 20  # convergence test is skipped before this

    # Final frequency sliding
    SLIDE_EVALUATIONS = 40  # amplitude fits per archive entry, 0 disables
    SLIDE_TOLERANCE = 1e-10

    # Capon initialization
    CAPON_GRID_FACTOR = 512  # grid points per observed sensor
    CAPON_LOADING = 1e-3  # diagonal loading relative to trace(R)/M_sel

    # Numerics
    LSTSQ_RCOND = 1e-10
    RESIDUAL_FLOOR = 1e-10  # relative to ||Y||_F^2
    KNEE_TIE_TOLERANCE = 1e-12


@dataclass
class HarnessDefaults:
    """Monte Carlo harness defaults"""

    DESK_TRIALS = 50
    FULL_TRIALS = 200
    BASE_SEED = 20230
    OUTPUT_PREFIX = "results/sweep"
    FREQUENCY_FORMAT = "%.12g"


class HarnessSettings:
    """Profile and environment dependent settings"""

    def __init__(self, profile: Profile = Profile.DESK):
        self.profile = profile
        self.harness_defaults = HarnessDefaults()
        self._setup_profile_config()

    def _setup_profile_config(self):
        """Setup profile-specific configuration"""
        if self.profile == Profile.FULL:
            # Full-scale reproduction
            self.default_trials = self.harness_defaults.FULL_TRIALS
        else:
            # Desk scale keeps a full sweep within minutes
            self.default_trials = self.harness_defaults.DESK_TRIALS

    @property
    def default_workers(self) -> int:
        """Worker processes used when a sweep does not set its own"""
        try:
            return max(1, int(os.getenv("MVESA_WORKERS", "1")))
        except ValueError:
            return 1

    @property
    def results_database_url(self) -> str:
        """Async SQLAlchemy URL of the results store"""
        return os.getenv("MVESA_RESULTS_DB", "sqlite+aiosqlite:///./mvesa_results.db")

    @property
    def log_level(self) -> str:
        return os.getenv("MVESA_LOG_LEVEL", "INFO").upper()

    @property
    def sql_echo(self) -> bool:
        return os.getenv("MVESA_SQL_ECHO", "0") == "1"


def get_settings() -> HarnessSettings:
    """Get settings based on the MVESA_PROFILE environment variable"""
    profile_name = os.getenv("MVESA_PROFILE", "desk").lower()
    try:
        profile = Profile(profile_name)
    except ValueError:
        profile = Profile.DESK

    return HarnessSettings(profile)


def configure_logging(level: str = None) -> None:
    """Apply the process-wide logging format"""
    logging.basicConfig(
        level=level or settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# Settings instance
settings = get_settings()

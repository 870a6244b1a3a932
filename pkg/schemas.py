from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Optional, List, Union, Any
from datetime import datetime
from enum import Enum
import numpy as np

from config import SolverDefaults, HarnessDefaults, settings

NOISELESS_MARKERS = {"noiseless", "none", "inf", "+inf"}


# Enums
class SolverVariant(str, Enum):
    FULL = "full"
    ARCHIVE_ONLY = "archive_only"
    NO_ARCHIVE = "no_archive"


class SweepAxis(str, Enum):
    SNR = "snr_db"
    K = "K"
    SEPARATION = "separation"
    M_SEL = "M_sel"
    M = "M"
    VARIANT = "variant"


def parse_snr(value: Any) -> Optional[float]:
    """Map the noiseless marker (or None) to None, anything else to float dB"""
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in NOISELESS_MARKERS:
            return None
        return float(value)
    value = float(value)
    if np.isinf(value) and value > 0:
        return None
    if np.isnan(value):
        raise ValueError("SNR cannot be NaN")
    return value


def _check_frequency(value: float) -> float:
    if not -1.0 <= value < 1.0:
        raise ValueError(f"Frequency {value} outside [-1, 1)")
    return float(value)


# ===== SOLVER INPUT SCHEMAS =====

class Scenario(BaseModel):
    """One synthetic experiment"""

    model_config = ConfigDict(frozen=True)

    num_sensors: int = Field(..., ge=2, description="Number of sensors M")
    true_order: int = Field(..., ge=1, description="True model order K*")
    num_snapshots: int = Field(1, ge=1, description="Number of snapshots L")
    snr_db: Optional[float] = Field(None, description="SNR in dB, None for noiseless")
    observed_indices: Optional[List[int]] = Field(None, description="Observed rows; all rows when omitted")
    rng_seed: int = Field(0, ge=0, description="Seed of the trial random stream")
    separation: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Exact spacing of a two-tone pair")
    frequencies: Optional[List[float]] = Field(None, description="Fixed ground-truth frequencies")

    @field_validator("snr_db", mode="before")
    @classmethod
    def validate_snr(cls, v):
        return parse_snr(v)

    @field_validator("frequencies")
    @classmethod
    def validate_frequencies(cls, v):
        if v is None:
            return v
        v = [_check_frequency(f) for f in v]
        if len(set(v)) != len(v):
            raise ValueError("Ground-truth frequencies must be pairwise distinct")
        return v

    @model_validator(mode="after")
    def validate_scenario(self):
        if self.true_order >= self.num_sensors:
            raise ValueError("True model order must be smaller than the number of sensors")

        if self.observed_indices is not None:
            indices = self.observed_indices
            if not indices:
                raise ValueError("Observed index set cannot be empty")
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise ValueError("Observed indices must be strictly increasing")
            if indices[0] < 0 or indices[-1] >= self.num_sensors:
                raise ValueError("Observed indices must lie within {0..M-1}")

        if self.separation is not None and self.true_order != 2:
            raise ValueError("Separation control places exactly two frequencies")

        if self.frequencies is not None and len(self.frequencies) != self.true_order:
            raise ValueError("Number of fixed frequencies must equal the true model order")
        return self

    @property
    def indices(self) -> np.ndarray:
        """Observed row indices as an integer array"""
        if self.observed_indices is None:
            return np.arange(self.num_sensors)
        return np.asarray(self.observed_indices, dtype=int)

    @property
    def num_observed(self) -> int:
        return int(self.indices.size)


class EngineConfig(BaseModel):
    """Evolutionary search parameters"""

    model_config = ConfigDict(frozen=True)

    population_size: int = Field(SolverDefaults.POPULATION_SIZE, ge=2, description="Population size N")
    mutation_distribution_index: float = Field(SolverDefaults.MUTATION_DISTRIBUTION_INDEX, gt=0, description="Polynomial mutation index eta")
    max_generations: int = Field(SolverDefaults.MAX_GENERATIONS, ge=1)
    max_evaluations: int = Field(SolverDefaults.MAX_EVALUATIONS, ge=1)
    stopping_tolerance: float = Field(SolverDefaults.STOPPING_TOLERANCE, gt=0)
    stall_generations: int = Field(SolverDefaults.STALL_GENERATIONS, ge=1)
    min_generations: int = Field(SolverDefaults.MIN_GENERATIONS, ge=0, description="Generations before the convergence test applies")
    slide_evaluations: int = Field(SolverDefaults.SLIDE_EVALUATIONS, ge=0, description="Fit budget per archive entry for the final sliding, 0 disables")
    crossover_attempts: int = Field(SolverDefaults.CROSSOVER_ATTEMPTS, ge=1)
    residual_floor: float = Field(SolverDefaults.RESIDUAL_FLOOR, ge=0)
    variant: SolverVariant = Field(SolverVariant.FULL, description="Archiving/pruning ablation variant")
    track_archive: bool = Field(False, description="Record per-generation archive residuals")


# ===== SWEEP SCHEMAS =====

class SweepConfig(BaseModel):
    """Monte Carlo sweep over one scenario axis, loaded from flat config keys"""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    name: str = Field("sweep", min_length=1)
    num_sensors: int = Field(15, ge=2, alias="m")
    true_order: int = Field(4, ge=1, alias="k")
    num_snapshots: int = Field(10, ge=1, alias="snapshots")
    snr_db: Optional[float] = Field(10.0, alias="snr")
    observed_count: Optional[int] = Field(None, ge=2, alias="m_sel")
    separation: Optional[float] = Field(None, gt=0.0, lt=1.0)

    sweep: SweepAxis = Field(SweepAxis.SNR)
    values: List[Union[float, str, None]] = Field(..., min_length=1)
    trials: int = Field(default_factory=lambda: settings.default_trials, ge=1)
    seed: int = Field(HarnessDefaults.BASE_SEED, ge=0)
    out: str = Field(HarnessDefaults.OUTPUT_PREFIX, min_length=1)
    workers: int = Field(default_factory=lambda: settings.default_workers, ge=1)
    deterministic: bool = Field(False, description="Zero wall-time columns for byte-identical output")

    # Engine overrides
    population_size: int = Field(SolverDefaults.POPULATION_SIZE, ge=2)
    mutation_index: float = Field(SolverDefaults.MUTATION_DISTRIBUTION_INDEX, gt=0)
    max_generations: int = Field(SolverDefaults.MAX_GENERATIONS, ge=1)
    max_evaluations: int = Field(SolverDefaults.MAX_EVALUATIONS, ge=1)
    stopping_tolerance: float = Field(SolverDefaults.STOPPING_TOLERANCE, gt=0)
    variant: SolverVariant = Field(SolverVariant.FULL)

    @model_validator(mode="before")
    @classmethod
    def default_separation_order(cls, data):
        # Two-tone sweeps fix K=2 unless the file says otherwise
        if isinstance(data, dict):
            axis = getattr(data.get("sweep"), "value", data.get("sweep"))
            if axis == SweepAxis.SEPARATION.value and "k" not in data and "true_order" not in data:
                data = {**data, "k": 2}
        return data

    @field_validator("snr_db", mode="before")
    @classmethod
    def validate_snr(cls, v):
        return parse_snr(v)

    @model_validator(mode="after")
    def validate_sweep(self):
        if self.true_order >= self.num_sensors:
            raise ValueError("True model order must be smaller than the number of sensors")
        if self.observed_count is not None and self.observed_count > self.num_sensors:
            raise ValueError("m_sel cannot exceed m")
        self.values = [self._validate_value(v) for v in self.values]
        if self.sweep == SweepAxis.SEPARATION and self.true_order != 2:
            raise ValueError("Separation sweeps place exactly two frequencies; set k: 2")
        return self

    def _validate_value(self, value):
        """Normalize one sweep value for the configured axis"""
        if self.sweep == SweepAxis.SNR:
            return parse_snr(value)
        if value is None:
            raise ValueError(f"Sweep axis {self.sweep.value} does not accept empty values")
        if self.sweep == SweepAxis.VARIANT:
            return SolverVariant(str(value)).value
        if self.sweep == SweepAxis.SEPARATION:
            value = float(value)
            if not 0.0 < value < 1.0:
                raise ValueError(f"Separation {value} outside (0, 1)")
            return value

        number = float(value)
        if number != int(number):
            raise ValueError(f"Sweep axis {self.sweep.value} takes integers, got {value}")
        number = int(number)
        if self.sweep == SweepAxis.K and not 1 <= number < self.num_sensors:
            raise ValueError(f"Model order {number} outside [1, M-1]")
        if self.sweep == SweepAxis.M_SEL and not 2 <= number <= self.num_sensors:
            raise ValueError(f"m_sel {number} outside [2, M]")
        if self.sweep == SweepAxis.M and number <= self.true_order:
            raise ValueError(f"M={number} must exceed the true model order")
        return number

    def engine_config(self, variant: Optional[str] = None) -> EngineConfig:
        """Engine parameters with this sweep's overrides applied"""
        return EngineConfig(
            population_size=self.population_size,
            mutation_distribution_index=self.mutation_index,
            max_generations=self.max_generations,
            max_evaluations=self.max_evaluations,
            stopping_tolerance=self.stopping_tolerance,
            variant=variant or self.variant,
        )


# ===== API SCHEMAS =====

class MeasurementsPayload(BaseModel):
    real: List[List[float]] = Field(..., min_length=2, description="Real part, M_sel rows by L snapshots")
    imag: Optional[List[List[float]]] = Field(None, description="Imaginary part; zeros when omitted")
    observed_indices: Optional[List[int]] = Field(None, description="Sensor index of each row")

    @model_validator(mode="after")
    def validate_shape(self):
        widths = {len(row) for row in self.real}
        if len(widths) != 1 or 0 in widths:
            raise ValueError("Measurement rows must be non-empty and of equal length")
        if self.imag is not None:
            if len(self.imag) != len(self.real) or any(len(row) != len(self.real[0]) for row in self.imag):
                raise ValueError("Real and imaginary parts must have the same shape")
        if self.observed_indices is not None:
            if len(self.observed_indices) != len(self.real):
                raise ValueError("One observed index per measurement row is required")
            if any(b <= a for a, b in zip(self.observed_indices, self.observed_indices[1:])):
                raise ValueError("Observed indices must be strictly increasing")
            if self.observed_indices[0] < 0:
                raise ValueError("Observed indices must be nonnegative")
        return self

    def to_array(self) -> np.ndarray:
        data = np.asarray(self.real, dtype=float).astype(complex)
        if self.imag is not None:
            data += 1j * np.asarray(self.imag, dtype=float)
        return data


class EstimateRequest(BaseModel):
    measurements: MeasurementsPayload
    engine: EngineConfig = Field(default_factory=EngineConfig)
    seed: int = Field(0, ge=0)


class FrontPointOut(BaseModel):
    order: int
    residual: float
    slope_change: Optional[float] = None


class EstimateResponse(BaseModel):
    frequencies: List[float]
    model_order: int
    residual: float
    generations: int
    evaluations: int
    termination: str
    front: List[FrontPointOut] = []


class TrialRequest(BaseModel):
    scenario: Scenario
    engine: EngineConfig = Field(default_factory=EngineConfig)
    seed: Optional[int] = Field(None, ge=0, description="Solver stream seed; the scenario's rng_seed when omitted")


def _split_frequencies(value):
    if isinstance(value, str):
        return [float(part) for part in value.split(";") if part]
    return value


class TrialRecordOut(BaseModel):
    sweep_index: int = 0
    sweep_value: Optional[str] = None
    trial_index: int = 0
    seed: int
    true_order: int
    estimated_order: int
    true_frequencies: List[float]
    estimated_frequencies: List[float]
    frequency_error: Optional[float] = None
    success: bool
    generations: int
    evaluations: int
    wall_seconds: float
    base_frequency: Optional[float] = None
    error: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)

    @field_validator("true_frequencies", "estimated_frequencies", mode="before")
    @classmethod
    def validate_frequency_list(cls, v):
        return _split_frequencies(v)


class SweepSummaryRow(BaseModel):
    sweep_value: str
    rmse: Optional[float] = None
    success_rate: float
    mean_generations: float
    mean_evaluations: float
    mean_wall_seconds: float
    trials_included_in_rmse: int


class SweepRunOut(BaseModel):
    id: int
    name: str
    axis: str
    status: str
    trials_per_point: int
    created_at: datetime
    finished_at: Optional[datetime] = None
    error: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)

    @field_validator("status", mode="before")
    @classmethod
    def validate_status(cls, v):
        return getattr(v, "value", v)


class SweepDetail(SweepRunOut):
    summary: List[SweepSummaryRow] = []


class SweepLaunchResponse(BaseModel):
    id: int
    status: str


# Paginated lists
class SweepList(BaseModel):
    sweeps: List[SweepRunOut]
    total: int
    skip: int
    limit: int


class TrialList(BaseModel):
    trials: List[TrialRecordOut]
    total: int
    skip: int
    limit: int

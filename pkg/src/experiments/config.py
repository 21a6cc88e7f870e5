# src/experiments/config.py

"""
Experiment configuration
Pydantic models for the Monte Carlo experiments; validation failures are
surfaced as ConfigError.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.moments.errors import ConfigError


class ExperimentId(str, Enum):
    CLT_FIXED_K = "clt_fixed_k"
    PROCESS_UNIT = "process_unit"
    PROCESS_HALFLINE = "process_halfline"
    PROCESS_REALLINE = "process_realline"
    LDP_T1 = "ldp_t1"
    APPENDIX_CHECKS = "appendix_checks"
    ORACLE_SUITE = "oracle_suite"


class Tolerances(BaseModel):
    """Named pass thresholds"""

    model_config = ConfigDict(extra="forbid")

    mean_se: float = Field(4.0, gt=0)              # means within mean_se standard errors
    limit_gap_abs: float = Field(0.1, ge=0)        # finite-n expectation vs limit mean
    cov_rel: float = Field(0.05, ge=0)             # covariances within max(cov_rel·|target|, cov_abs)
    cov_abs: float = Field(0.05, ge=0)
    ks_alpha: float = Field(0.01, gt=0, lt=1)
    lln_abs: float = Field(0.01, gt=0)
    cumulant_abs: float = Field(0.05, gt=0)
    duality_abs: float = Field(1e-6, gt=0)
    consistency_abs: float = Field(1e-8, gt=0)
    threshold_abs: float = Field(1e-3, gt=0)
    beta_scaling_rel: float = Field(0.02, gt=0)
    decay_exponent_min: float = 2.5
    mean_decay_exponent_min: float = 1.5
    expansion_bound: float = Field(5.0, gt=0)
    float_oracle_rel: float = Field(1e-9, gt=0)

    @classmethod
    def for_experiment(cls, experiment_id: "ExperimentId") -> "Tolerances":
        if experiment_id in (ExperimentId.PROCESS_UNIT, ExperimentId.PROCESS_HALFLINE,
                             ExperimentId.PROCESS_REALLINE):
            return cls(cov_rel=0.10, limit_gap_abs=0.02)
        return cls()


class ExperimentConfig(BaseModel):
    """One reproducible experiment run"""

    model_config = ConfigDict(extra="forbid")

    experiment_id: ExperimentId
    seed: int = Field(..., ge=0, lt=2 ** 64)
    n: int = Field(1000, ge=4)
    reps: int = Field(10_000, ge=100)
    k: int = Field(1, ge=0)
    grid: List[float] = Field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    gamma: float = 0.0                              # constant γ for the half-line and real-line laws
    workers: int = Field(1, ge=1)
    block_size: int = Field(500, ge=1)
    trials: int = Field(50, ge=1)                   # oracle trials per interval
    n_ladder: List[int] = Field(default_factory=lambda: [50, 100, 200])
    lambdas: List[float] = Field(default_factory=lambda: [-1.0, 0.5, 1.0])
    x_grid: List[float] = Field(default_factory=lambda: [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0])
    t_lambda_grid: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.25, -2.0), (0.25, 4.0), (0.5, 1.0), (0.5, 3.0), (0.75, 2.0), (1.0, 1.5)]
    )
    ladder: List[int] = Field(default_factory=lambda: [5, 10, 20, 50, 100, 200])
    beta_scaling_n: int = Field(10_000, ge=1)
    tolerances: Optional[Tolerances] = None

    @field_validator("grid")
    @classmethod
    def _grid_in_unit_interval(cls, grid: List[float]) -> List[float]:
        if not grid:
            raise ValueError("grid must not be empty")
        if any(t < 0 or t > 1 for t in grid):
            raise ValueError(f"grid points must lie in [0, 1]: {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"grid must be strictly increasing: {grid}")
        return grid

    @model_validator(mode="after")
    def _experiment_invariants(self) -> "ExperimentConfig":
        if self.experiment_id is ExperimentId.CLT_FIXED_K and self.k < 1:
            raise ValueError("the fixed-k CLT needs k ≥ 1")
        if self.experiment_id is ExperimentId.ORACLE_SUITE and not 1 <= self.k <= 8:
            raise ValueError("oracle certification runs with 1 ≤ k ≤ 8")
        if self.experiment_id is ExperimentId.PROCESS_HALFLINE and self.gamma <= -1:
            raise ValueError("half-line γ must exceed −1")
        if self.tolerances is None:
            self.tolerances = Tolerances.for_experiment(self.experiment_id)
        return self

    # ---------- construction helpers ----------

    @classmethod
    def build(cls, **kwargs) -> "ExperimentConfig":
        try:
            return cls(**kwargs)
        except ValidationError as exc:
            raise ConfigError(f"invalid experiment configuration: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            raise ConfigError(f"invalid experiment configuration: {exc}") from exc

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

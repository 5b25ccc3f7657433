"""
Experiment Configuration
Pydantic models for the model / experiment / solver / output sections
"""
from enum import Enum
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from estimation.estimator import SolverOptions

RANDOM_NORMAL = "random-normal"


class ExperimentKind(str, Enum):
    MSE_VS_N = "mse_vs_n"
    ESTIMATOR_COMPARISON = "estimator_comparison"
    CRLB_SCAN_SIGMA_N = "crlb_scan_sigma_n"
    CRLB_SCAN_SIGMA_E = "crlb_scan_sigma_e"
    GAP_BOUNDS_SWEEP = "gap_bounds_sweep"
    PROBABILITY_VS_N = "probability_vs_n"
    LIKELIHOOD_PROFILE = "likelihood_profile"


class MatrixPolicy(str, Enum):
    ONCE = "once"
    PER_TRIAL = "per_trial"


class ScanGrid(BaseModel):
    """Log-spaced grid along the single scan axis"""
    model_config = ConfigDict(extra="forbid")

    min: float = Field(gt=0)
    max: float = Field(gt=0)
    points: int = Field(default=200, ge=2)
    # prepend an exact 0 to the log grid (gap sweeps only)
    include_zero: bool = False

    @model_validator(mode="after")
    def _ordered(self) -> "ScanGrid":
        if self.max <= self.min:
            raise ValueError("scan.max must exceed scan.min")
        return self

    def values(self) -> np.ndarray:
        grid = np.geomspace(self.min, self.max, self.points)
        if self.include_zero:
            return np.concatenate(([0.0], grid))
        return grid


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: int = Field(default=1, ge=1)
    sigma_e2: float = Field(default=0.0, ge=0)
    sigma_n2: Optional[float] = Field(default=None, gt=0)
    # when set, sigma_n2 is derived as sigma_z2 - sigma_e2 * ||w0||^2
    sigma_z2: Optional[float] = Field(default=None, gt=0)
    sigma_z2_factor: float = Field(default=4.0, gt=0)
    w0: Union[List[float], Literal["random-normal"]] = Field(default_factory=lambda: [1.0])

    @model_validator(mode="after")
    def _w0_matches_p(self) -> "ModelSection":
        if isinstance(self.w0, list):
            if len(self.w0) != self.p:
                raise ValueError(f"w0 has {len(self.w0)} entries but p = {self.p}")
            if self.p == 1 and self.w0[0] == 0.0:
                raise ValueError("scalar w0 must be nonzero")
        if self.sigma_n2 is not None and self.sigma_z2 is not None:
            raise ValueError("give sigma_n2 or sigma_z2, not both")
        return self


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    n_values: List[int] = Field(default_factory=list)
    n_measurements: int = Field(default=1, ge=1)
    scan: Optional[ScanGrid] = None
    sigma_e2_values: List[float] = Field(default_factory=list)
    positive_counts: List[int] = Field(default_factory=list)
    trials: int = Field(default=500, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    r_w_factor: float = Field(default=4.0, gt=0)
    matrix_policy: MatrixPolicy = MatrixPolicy.ONCE
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _grids(self) -> "ExperimentSection":
        if any(n < 1 for n in self.n_values):
            raise ValueError("n_values entries must be positive")
        if any(s <= 0 for s in self.sigma_e2_values):
            raise ValueError("sigma_e2_values entries must be positive")
        return self


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    summary: bool = False


class ExperimentConfig(BaseModel):
    """Validated experiment description"""
    model_config = ConfigDict(extra="forbid")

    model: ModelSection = Field(default_factory=ModelSection)
    experiment: ExperimentSection
    solver: SolverOptions = Field(default_factory=SolverOptions)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _kind_requirements(self) -> "ExperimentConfig":
        kind = self.experiment.kind
        model = self.model
        scalar_kinds = {
            ExperimentKind.CRLB_SCAN_SIGMA_N,
            ExperimentKind.CRLB_SCAN_SIGMA_E,
            ExperimentKind.PROBABILITY_VS_N,
            ExperimentKind.LIKELIHOOD_PROFILE,
        }
        if kind in scalar_kinds and (model.p != 1 or not isinstance(model.w0, list)):
            raise ValueError(f"{kind.value} needs a scalar model (p = 1) with explicit w0")

        scan = self.experiment.scan
        if scan is not None and scan.include_zero and kind is not ExperimentKind.GAP_BOUNDS_SWEEP:
            raise ValueError("scan.include_zero is only valid for gap_bounds_sweep")

        if kind in (ExperimentKind.MSE_VS_N, ExperimentKind.ESTIMATOR_COMPARISON,
                    ExperimentKind.PROBABILITY_VS_N):
            if not self.experiment.n_values:
                raise ValueError("experiment.n_values must not be empty")

        if kind in (ExperimentKind.MSE_VS_N, ExperimentKind.ESTIMATOR_COMPARISON):
            if model.sigma_n2 is None and model.sigma_z2 is None:
                raise ValueError("model.sigma_n2 (or model.sigma_z2) is required")

        if kind is ExperimentKind.CRLB_SCAN_SIGMA_N:
            if self.experiment.scan is None:
                raise ValueError("experiment.scan is required for a sigma_n2 scan")
        if kind is ExperimentKind.CRLB_SCAN_SIGMA_E:
            if self.experiment.scan is None:
                raise ValueError("experiment.scan is required for a sigma_e2 scan")
            if model.sigma_n2 is None:
                raise ValueError("model.sigma_n2 is required for a sigma_e2 scan")

        if kind is ExperimentKind.GAP_BOUNDS_SWEEP:
            if self.experiment.scan is None:
                raise ValueError("experiment.scan (gamma range) is required")
            if self.experiment.n_measurements < model.p:
                raise ValueError("experiment.n_measurements must be at least p")

        if kind is ExperimentKind.PROBABILITY_VS_N:
            if not self.experiment.sigma_e2_values:
                raise ValueError("experiment.sigma_e2_values must not be empty")
            if model.sigma_n2 is None and model.sigma_z2 is None:
                raise ValueError("model.sigma_n2 (or model.sigma_z2) is required")

        if kind is ExperimentKind.LIKELIHOOD_PROFILE:
            if self.experiment.scan is None:
                raise ValueError("experiment.scan (w range) is required")
            if model.sigma_n2 is None:
                raise ValueError("model.sigma_n2 is required for a likelihood profile")
            counts = self.experiment.positive_counts
            if not counts:
                raise ValueError("experiment.positive_counts must not be empty")
            if any(k < 0 or k > self.experiment.n_measurements for k in counts):
                raise ValueError("experiment.positive_counts entries must lie in [0, n_measurements]")
        return self

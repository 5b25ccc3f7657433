"""
Base Experiment Class
All Monte Carlo and scan experiments inherit from this
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from estimation.errors import ConfigError
from estimation.model import RngSeed, make_gaussian_matrix, make_ones_row
from estimation.numerics import DenseMatrix, DenseVector
from experiments.config import RANDOM_NORMAL, ExperimentConfig

# stream layout under one master seed
STREAM_W0 = 0
STREAM_MATRIX = 1
PROBABILITY_STREAM_BASE = 1 << 40
TRIAL_STREAM_BASE = 1 << 48
MATRIX_STREAM_BASE = 1 << 56
N_INDEX_SHIFT = 24

Cell = Optional[float]


@dataclass
class ExperimentResult:
    """In-memory result table handed to the orchestrator"""
    kind: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Cell, ...]]
    summary: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


class BaseExperiment(ABC):
    """Base class for all experiments"""

    columns: Tuple[str, ...] = ()

    def __init__(self, name: str, show_progress: bool = True):
        self.name = name
        self.show_progress = show_progress

    @abstractmethod
    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        """
        Run the experiment described by config

        Args:
            config: Validated experiment configuration

        Returns:
            ExperimentResult with one row per grid point
        """
        pass

    def _result(
        self,
        config: ExperimentConfig,
        rows: Sequence[Tuple[Cell, ...]],
        summary: Dict[str, float],
        warnings: Optional[List[str]] = None
    ) -> ExperimentResult:
        return ExperimentResult(
            kind=config.experiment.kind.value,
            columns=self.columns,
            rows=list(rows),
            summary=summary,
            warnings=warnings or []
        )

    @staticmethod
    def seed(config: ExperimentConfig, stream_index: int) -> RngSeed:
        return RngSeed(config.experiment.master_seed, stream_index)

    def trial_seed(self, config: ExperimentConfig, n_index: int, trial: int) -> RngSeed:
        return self.seed(config, TRIAL_STREAM_BASE + (n_index << N_INDEX_SHIFT) + trial)

    def resolve_w0(self, config: ExperimentConfig) -> DenseVector:
        """Explicit w0, or a N(0, I) draw from its own stream"""
        model = config.model
        if model.w0 == RANDOM_NORMAL:
            return self.seed(config, STREAM_W0).generator().standard_normal(model.p)
        return np.asarray(model.w0, dtype=float)

    @staticmethod
    def resolve_sigma_n2(config: ExperimentConfig, w0: DenseVector, sigma_e2: float) -> float:
        """Given sigma_n^2, or sigma_z^2 - sigma_e^2 ||w0||^2 when sigma_z^2 is fixed"""
        model = config.model
        if model.sigma_n2 is not None:
            return model.sigma_n2
        if model.sigma_z2 is None:
            raise ConfigError("noise variance missing", keys=["model.sigma_n2"])
        sigma_n2 = model.sigma_z2 - sigma_e2 * float(w0 @ w0)
        if sigma_n2 <= 0.0:
            raise ConfigError(
                f"sigma_z2 = {model.sigma_z2} leaves no room for additive noise "
                f"at sigma_e2 = {sigma_e2}",
                keys=["model.sigma_z2"]
            )
        return sigma_n2

    def mean_matrix(
        self,
        config: ExperimentConfig,
        n: int,
        n_index: int = 0,
        trial: Optional[int] = None
    ) -> DenseMatrix:
        """
        Mean sensing matrix for N measurements

        Scalar models use the all-ones row. Vector models draw Gaussian
        entries: once per experiment (the first N columns of one draw) or,
        when trial is given, from that trial's own stream.
        """
        p = config.model.p
        if p == 1:
            return make_ones_row(n)
        if trial is not None:
            stream = MATRIX_STREAM_BASE + (n_index << N_INDEX_SHIFT) + trial
            return make_gaussian_matrix(p, n, self.seed(config, stream))
        n_max = max(config.experiment.n_values or [n])
        return make_gaussian_matrix(p, max(n, n_max), self.seed(config, STREAM_MATRIX))[:, :n]

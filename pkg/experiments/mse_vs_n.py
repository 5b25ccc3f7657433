"""
MSE versus N
Monte Carlo MSE of the ML and perturbation-ignored estimators against the CRLB,
optionally with the perturbation-known baseline
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from estimation.crlb import fim_and_crlb
from estimation.estimator import (
    ml_estimate,
    mismodel_limit_mse,
    perturbation_ignored_estimate,
)
from estimation.model import (
    PerturbedSignModel,
    simulate_measurements,
    simulate_with_perturbation,
)
from experiments.base_experiment import BaseExperiment, ExperimentResult
from experiments.config import ExperimentConfig, MatrixPolicy
from utils.parallel_executor import run_trials_parallel

SEPARATED_WARNING_FRACTION = 0.5


class TrialOutcome(NamedTuple):
    sq_err_ml: float
    sq_err_ignored: float
    sq_err_known: Optional[float]
    ml_at_limit: bool
    crlb_trace: Optional[float]


@dataclass(frozen=True)
class MseCurvePoint:
    n: int
    mse_ml: float
    mse_ignored: float
    mse_known: Optional[float]
    crlb_trace: float
    trials_used: int
    separated_fraction: float
    median_ml: float
    median_ignored: float

    def as_row(self) -> tuple:
        return (
            self.n, self.mse_ml, self.mse_ignored, self.mse_known,
            self.crlb_trace, self.separated_fraction, self.trials_used
        )


def aggregate_trials(
    n: int,
    outcomes: Sequence[TrialOutcome],
    crlb_trace: Optional[float] = None
) -> MseCurvePoint:
    """Fold trial outcomes, already in trial-index order, into one curve point"""
    ml = np.array([o.sq_err_ml for o in outcomes])
    ignored = np.array([o.sq_err_ignored for o in outcomes])
    known = [o.sq_err_known for o in outcomes if o.sq_err_known is not None]
    if crlb_trace is None:
        crlb_trace = float(np.mean([o.crlb_trace for o in outcomes]))
    return MseCurvePoint(
        n=n,
        mse_ml=float(np.mean(ml)),
        mse_ignored=float(np.mean(ignored)),
        mse_known=float(np.mean(known)) if known else None,
        crlb_trace=crlb_trace,
        trials_used=len(outcomes),
        separated_fraction=float(np.mean([o.ml_at_limit for o in outcomes])),
        median_ml=float(np.median(ml)),
        median_ignored=float(np.median(ignored))
    )


class MseVsNExperiment(BaseExperiment):
    """ML and perturbation-ignored MSE for each N, with the CRLB at w0"""

    columns = ("N", "mse_ml", "mse_ignored", "mse_known", "crlb_trace",
               "separated_fraction", "trials")
    include_known = False

    def __init__(self, show_progress: bool = True):
        super().__init__("MSE vs N", show_progress)

    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        w0 = self.resolve_w0(config)
        sigma_e2 = config.model.sigma_e2
        sigma_n2 = self.resolve_sigma_n2(config, w0, sigma_e2)
        r_w = config.experiment.r_w_factor * float(np.linalg.norm(w0))

        points: List[MseCurvePoint] = []
        for n_index, n in enumerate(config.experiment.n_values):
            points.append(await self._run_point(config, n_index, n, w0, sigma_e2, sigma_n2, r_w))

        warnings = [
            f"N = {point.n}: {point.separated_fraction:.0%} of ML estimates hit the norm limit"
            for point in points
            if point.separated_fraction > SEPARATED_WARNING_FRACTION
        ]
        return self._result(config, [p.as_row() for p in points],
                            self._summary(points, w0, sigma_e2, sigma_n2), warnings)

    async def _run_point(
        self,
        config: ExperimentConfig,
        n_index: int,
        n: int,
        w0: np.ndarray,
        sigma_e2: float,
        sigma_n2: float,
        r_w: float
    ) -> MseCurvePoint:
        per_trial = config.experiment.matrix_policy is MatrixPolicy.PER_TRIAL
        fixed_H = None if per_trial else self.mean_matrix(config, n)
        crlb_trace = None
        if fixed_H is not None:
            crlb_trace = fim_and_crlb(PerturbedSignModel(fixed_H, sigma_e2, sigma_n2), w0).crlb_trace
        opts = config.solver

        def trial(index: int) -> TrialOutcome:
            H = fixed_H if fixed_H is not None else self.mean_matrix(config, n, n_index, index)
            model = PerturbedSignModel(H, sigma_e2, sigma_n2)
            seed = self.trial_seed(config, n_index, index)
            if self.include_known:
                y, realized = simulate_with_perturbation(model, w0, seed)
            else:
                y = simulate_measurements(model, w0, seed)

            ml = ml_estimate(model, y, r_w, opts)
            ignored = perturbation_ignored_estimate(H, y, sigma_n2, r_w, opts)
            sq_err_known = None
            if self.include_known:
                known = perturbation_ignored_estimate(realized, y, sigma_n2, r_w, opts)
                sq_err_known = float(np.sum((known.w_hat - w0) ** 2))
            return TrialOutcome(
                sq_err_ml=float(np.sum((ml.w_hat - w0) ** 2)),
                sq_err_ignored=float(np.sum((ignored.w_hat - w0) ** 2)),
                sq_err_known=sq_err_known,
                ml_at_limit=not ml.is_interior,
                crlb_trace=None if fixed_H is not None else fim_and_crlb(model, w0).crlb_trace
            )

        outcomes = await run_trials_parallel(
            trial,
            config.experiment.trials,
            workers=config.experiment.workers,
            description=f"{self.name}, N = {n}",
            show_progress=self.show_progress
        )
        return aggregate_trials(n, outcomes, crlb_trace)

    @staticmethod
    def _summary(
        points: List[MseCurvePoint],
        w0: np.ndarray,
        sigma_e2: float,
        sigma_n2: float
    ) -> dict:
        last = points[-1]
        summary = {
            "largest_N": float(last.n),
            "mse_ml": last.mse_ml,
            "mse_ignored": last.mse_ignored,
            "median_ml": last.median_ml,
            "median_ignored": last.median_ignored,
            "crlb_trace": last.crlb_trace,
            "mse_ml_over_crlb": last.mse_ml / last.crlb_trace,
            "mismodel_limit_mse": mismodel_limit_mse(w0, sigma_e2, sigma_n2),
        }
        if last.mse_known is not None:
            summary["mse_known"] = last.mse_known
        return summary


class EstimatorComparisonExperiment(MseVsNExperiment):
    """Adds the perturbation-known estimator: probit ML on the realized H + E"""

    include_known = True

    def __init__(self, show_progress: bool = True):
        super().__init__(show_progress)
        self.name = "Estimator comparison"

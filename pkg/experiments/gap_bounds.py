"""
Gap Bounds Sweep
Extra CRLB trace caused by perturbation at fixed sigma_z^2, swept over
gamma = sigma_e^2 ||w0||^2 / sigma_n^2
"""
import numpy as np

from estimation.crlb import crlb_gap_bounds, split_noise_variances
from estimation.model import PerturbedSignModel
from experiments.base_experiment import BaseExperiment, ExperimentResult
from experiments.config import ExperimentConfig

SMALL_GAMMA = 0.1
LARGE_GAMMA = 10.0


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x"""
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class GapBoundsExperiment(BaseExperiment):
    """One row of (gamma, lower, gap, upper) per grid point"""

    columns = ("gamma", "lower", "gap", "upper")

    def __init__(self, show_progress: bool = True):
        super().__init__("Gap bounds sweep", show_progress)

    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        w0 = self.resolve_w0(config)
        w_norm2 = float(w0 @ w0)
        sigma_z2 = config.model.sigma_z2 or config.model.sigma_z2_factor * w_norm2
        H = self.mean_matrix(config, config.experiment.n_measurements)

        rows = []
        for gamma in config.experiment.scan.values():
            sigma_e2, sigma_n2 = split_noise_variances(sigma_z2, float(gamma), w_norm2)
            bounds = crlb_gap_bounds(PerturbedSignModel(H, sigma_e2, sigma_n2), w0)
            rows.append((float(gamma), bounds.lower, bounds.gap, bounds.upper))

        table = np.array(rows)
        gamma, lower, gap, upper = table.T
        # the gamma = 0 endpoint has no logarithm
        small = (gamma > 0.0) & (gamma <= SMALL_GAMMA)
        large = gamma >= LARGE_GAMMA
        summary = {
            "sigma_z2": sigma_z2,
            "slope_lower_small_gamma": loglog_slope(gamma[small], lower[small]),
            "slope_upper_small_gamma": loglog_slope(gamma[small], upper[small]),
            "slope_lower_large_gamma": loglog_slope(gamma[large], lower[large]),
            "slope_upper_large_gamma": loglog_slope(gamma[large], upper[large]),
            "sandwich_violations": float(np.sum((gap < lower) | (gap > upper))),
        }
        warnings = []
        if summary["sandwich_violations"]:
            warnings.append(f"{int(summary['sandwich_violations'])} grid points outside the bounds")
        return self._result(config, rows, summary, warnings)

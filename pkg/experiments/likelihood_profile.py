"""
Likelihood Profile
Scalar w-space negative log-likelihood over a grid of w, one curve per count
of +1 measurements, showing when a finite optimum exists
"""
import math

import numpy as np

from estimation.likelihood import neg_log_likelihood_w_profile, v_to_w
from estimation.model import PerturbedSignModel, make_ones_row
from estimation.numerics import std_normal_quantile
from estimation.probability import UnimodalityQuery, k_window
from experiments.base_experiment import BaseExperiment, ExperimentResult
from experiments.config import ExperimentConfig


def count_signs(n: int, positives: int) -> np.ndarray:
    """Sign vector with `positives` leading +1 entries; order is irrelevant for H = ones"""
    return np.where(np.arange(n) < positives, 1.0, -1.0)


def closed_form_optimum(n: int, positives: int, sigma_e2: float, sigma_n2: float) -> float:
    """
    w minimizing the scalar objective, or nan when no finite minimizer exists

    The v optimum is Phi^-1(k/N); it maps back to w only inside ||v|| < 1/sigma_e.
    """
    if not 0 < positives < n:
        return math.nan
    v_star = std_normal_quantile(positives / n)
    if sigma_e2 * v_star * v_star >= 1.0:
        return math.nan
    return float(v_to_w([v_star], sigma_e2, sigma_n2)[0])


class LikelihoodProfileExperiment(BaseExperiment):
    """Rows of (positives, w, neg_log_likelihood) for each requested count"""

    columns = ("positives", "w", "neg_log_likelihood")

    def __init__(self, show_progress: bool = True):
        super().__init__("Likelihood profile", show_progress)

    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        n = config.experiment.n_measurements
        sigma_e2 = config.model.sigma_e2
        sigma_n2 = config.model.sigma_n2
        model = PerturbedSignModel(make_ones_row(n), sigma_e2, sigma_n2)
        grid = config.experiment.scan.values()

        rows = []
        summary = {}
        warnings = []
        for positives in config.experiment.positive_counts:
            profile = neg_log_likelihood_w_profile(model, count_signs(n, positives), grid)
            rows.extend((positives, float(w), float(value)) for w, value in zip(grid, profile))

            best = int(np.argmin(profile))
            interior = 0 < best < len(grid) - 1
            expected = closed_form_optimum(n, positives, sigma_e2, sigma_n2)
            summary[f"argmin_w_{positives}"] = float(grid[best])
            summary[f"interior_{positives}"] = float(interior)
            summary[f"closed_form_w_{positives}"] = expected
            if interior != (not math.isnan(expected)):
                warnings.append(
                    f"k = {positives}: grid [{grid[0]:g}, {grid[-1]:g}] does not bracket "
                    f"the optimum"
                )

        if sigma_e2 > 0.0:
            k_minus, k_plus = k_window(UnimodalityQuery(n, 1.0, sigma_e2, sigma_n2))
            summary["k_minus"] = float(k_minus)
            summary["k_plus"] = float(k_plus)
        return self._result(config, rows, summary, warnings)

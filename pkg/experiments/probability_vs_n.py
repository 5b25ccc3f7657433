"""
Unimodality Probability versus N
Exact, normal-approximation and Monte Carlo values on an (N, sigma_e^2) grid
"""
import itertools

import numpy as np

from estimation.errors import ConfigError
from estimation.probability import (
    MIN_MC_TRIALS,
    UnimodalityQuery,
    p_unimodal_exact,
    p_unimodal_mc,
    p_unimodal_normal_approx,
)
from experiments.base_experiment import (
    PROBABILITY_STREAM_BASE,
    BaseExperiment,
    ExperimentResult,
)
from experiments.config import ExperimentConfig
from utils.parallel_executor import run_trials_parallel

NORMAL_APPROX_MIN_N = 50


class ProbabilityVsNExperiment(BaseExperiment):
    """Scalar all-ones model; sigma_n^2 fixed, or sigma_z^2 fixed"""

    columns = ("N", "sigma_e2", "p_exact", "p_approx", "p_mc", "p_mc_stderr")

    def __init__(self, show_progress: bool = True):
        super().__init__("Probability vs N", show_progress)

    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        trials = config.experiment.trials
        if trials < MIN_MC_TRIALS:
            raise ConfigError(f"Monte Carlo needs at least {MIN_MC_TRIALS} trials",
                              keys=["experiment.trials"])
        w0 = self.resolve_w0(config)
        grid = list(itertools.product(config.experiment.n_values,
                                      config.experiment.sigma_e2_values))
        queries = [
            UnimodalityQuery(n, float(w0[0]), sigma_e2,
                             self.resolve_sigma_n2(config, w0, sigma_e2))
            for n, sigma_e2 in grid
        ]

        def evaluate(index: int) -> tuple:
            q = queries[index]
            mc = p_unimodal_mc(q, trials, self.seed(config, PROBABILITY_STREAM_BASE + index))
            return (q.n, q.sigma_e2, p_unimodal_exact(q), p_unimodal_normal_approx(q),
                    mc.estimate, mc.stderr)

        rows = await run_trials_parallel(
            evaluate,
            len(queries),
            workers=config.experiment.workers,
            description=self.name,
            show_progress=self.show_progress
        )

        table = np.array(rows, dtype=float)
        _, _, exact, approx, mc, stderr = table.T
        summary = {
            "max_abs_approx_error": float(np.max(np.abs(approx - exact))),
            "mc_outside_3_stderr": float(np.sum(np.abs(mc - exact) > 3.0 * stderr)),
        }
        warnings = []
        small = sorted({q.n for q in queries if q.n < NORMAL_APPROX_MIN_N})
        if small:
            warnings.append(f"normal approximation is rough for N = {small}")
        return self._result(config, rows, summary, warnings)

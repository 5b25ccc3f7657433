"""
CRLB Scan
Scalar CRLB and its Chernoff bound along sigma_n^2 (sigma_e^2 fixed)
or along sigma_e^2 (sigma_n^2 fixed), with the located optima
"""
from estimation.crlb import (
    approx_opt_sigma_e2,
    approx_opt_sigma_n2,
    optimal_sigma_e2,
    optimal_sigma_n2,
    scalar_crlb,
    scalar_crlb_chernoff,
)
from experiments.base_experiment import BaseExperiment, ExperimentResult
from experiments.config import ExperimentConfig, ExperimentKind


class CrlbScanExperiment(BaseExperiment):
    """Evaluates both bounds on the scan grid and pins their minimizers"""

    columns = ("axis", "crlb", "chernoff")

    def __init__(self, show_progress: bool = True):
        super().__init__("CRLB scan", show_progress)

    async def run(self, config: ExperimentConfig) -> ExperimentResult:
        w = float(config.model.w0[0])
        n = config.experiment.n_measurements
        scan = config.experiment.scan
        bounds = (scan.min, scan.max)

        if config.experiment.kind is ExperimentKind.CRLB_SCAN_SIGMA_N:
            sigma_e2 = config.model.sigma_e2
            evaluate = lambda s: (scalar_crlb(w, sigma_e2, s, n),
                                  scalar_crlb_chernoff(w, sigma_e2, s, n))
            summary = {
                "argmin_crlb": optimal_sigma_n2(w, sigma_e2, bounds),
                "argmin_chernoff": optimal_sigma_n2(w, sigma_e2, bounds, chernoff=True),
                "approx_opt": approx_opt_sigma_n2(w, sigma_e2),
            }
        else:
            sigma_n2 = config.model.sigma_n2
            evaluate = lambda s: (scalar_crlb(w, s, sigma_n2, n),
                                  scalar_crlb_chernoff(w, s, sigma_n2, n))
            summary = {
                "argmin_crlb": optimal_sigma_e2(w, sigma_n2, bounds),
                "argmin_chernoff": optimal_sigma_e2(w, sigma_n2, bounds, chernoff=True),
                "approx_opt": approx_opt_sigma_e2(w, sigma_n2),
            }

        rows = [(float(s), *evaluate(float(s))) for s in scan.values()]
        summary["chernoff_violations"] = float(sum(1 for _, c, ch in rows if ch < c))
        return self._result(config, rows, summary)

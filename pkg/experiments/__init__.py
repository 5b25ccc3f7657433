# Experiments package
from experiments.base_experiment import BaseExperiment, ExperimentResult
from experiments.config import ExperimentConfig, ExperimentKind
from experiments.crlb_scan import CrlbScanExperiment
from experiments.gap_bounds import GapBoundsExperiment
from experiments.likelihood_profile import LikelihoodProfileExperiment
from experiments.mse_vs_n import EstimatorComparisonExperiment, MseVsNExperiment
from experiments.probability_vs_n import ProbabilityVsNExperiment


def get_experiment(kind: ExperimentKind, show_progress: bool = True) -> BaseExperiment:
    """Experiment instance for one config kind"""
    registry = {
        ExperimentKind.MSE_VS_N: MseVsNExperiment,
        ExperimentKind.ESTIMATOR_COMPARISON: EstimatorComparisonExperiment,
        ExperimentKind.CRLB_SCAN_SIGMA_N: CrlbScanExperiment,
        ExperimentKind.CRLB_SCAN_SIGMA_E: CrlbScanExperiment,
        ExperimentKind.GAP_BOUNDS_SWEEP: GapBoundsExperiment,
        ExperimentKind.PROBABILITY_VS_N: ProbabilityVsNExperiment,
        ExperimentKind.LIKELIHOOD_PROFILE: LikelihoodProfileExperiment,
    }
    return registry[kind](show_progress=show_progress)


__all__ = [
    "BaseExperiment",
    "ExperimentConfig",
    "ExperimentKind",
    "ExperimentResult",
    "get_experiment",
]

"""
Cramer-Rao Bounds
Fisher information J = M Lambda M^T, the scalar all-ones CRLB with its
Chernoff approximation and optimal-noise formulas, and the trace-gap bounds
comparing a perturbed model against a perturbation-free one at equal sigma_z^2
"""
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import minimize_scalar

from estimation.errors import DomainError, NotPositiveDefinite, SingularFim
from estimation.model import PerturbedSignModel, equivalent_noise_variance
from estimation.numerics import (
    DenseMatrix,
    DenseVector,
    solve_spd,
    std_normal_log_cdf,
    std_normal_log_pdf,
    sym_eigenvalues,
)

SINGULAR_RTOL = 1e-12
GRID_POINTS = 2000


@dataclass(frozen=True, eq=False)
class FisherReport:
    lambda_diag: DenseVector
    shrink_M: DenseMatrix
    fim: DenseMatrix
    crlb_matrix: DenseMatrix
    crlb_trace: float


class GapBounds(NamedTuple):
    lower: float
    upper: float
    gap: float


def _check_sigma_n2(sigma_n2: float) -> None:
    if not sigma_n2 > 0.0:
        raise DomainError(f"sigma_n2 must be positive, got {sigma_n2}")


def _lambda_from_scaled(t: DenseVector, sigma_z2: float) -> DenseVector:
    # phi(t)^2 / (sigma_z^2 Phi(t) Phi(-t)), assembled in log space
    log_lambda = (
        2.0 * std_normal_log_pdf(t)
        - std_normal_log_cdf(t)
        - std_normal_log_cdf(-t)
        - math.log(sigma_z2)
    )
    return np.exp(log_lambda)


def lambda_diag(model: PerturbedSignModel, w: ArrayLike) -> DenseVector:
    """
    Diagonal of Lambda

    lambda_ii = (1 / (2 pi sigma_z^2)) (1/Phi(t_i) + 1/Phi(-t_i)) exp(-t_i^2),
    t_i = h_i^T w / sigma_z, computed in the equivalent phi^2 / (Phi Phi(-.))
    form so that |t_i| up to ~35 stays representable.
    """
    w = model.check_parameter(w)
    sigma_z2 = equivalent_noise_variance(model, w)
    t = np.atleast_1d(model.H.T @ w / math.sqrt(sigma_z2))
    return _lambda_from_scaled(t, sigma_z2)


def shrink_matrix(model: PerturbedSignModel, w: ArrayLike) -> DenseMatrix:
    """M = (I - (sigma_e^2 / sigma_z^2) w w^T) H"""
    w = model.check_parameter(w)
    sigma_z2 = equivalent_noise_variance(model, w)
    projector = np.eye(model.p) - (model.sigma_e2 / sigma_z2) * np.outer(w, w)
    return projector @ model.H


def _inverse_fim(fim: DenseMatrix) -> DenseMatrix:
    p = fim.shape[0]
    trace = float(np.trace(fim))
    if not np.isfinite(trace) or trace <= 0.0:
        raise SingularFim("Fisher information has no positive trace")
    smallest = sym_eigenvalues(fim)[-1]
    if smallest <= SINGULAR_RTOL * trace / p:
        raise SingularFim(
            f"smallest FIM eigenvalue {smallest:.3e} below {SINGULAR_RTOL:g} * trace / p"
        )
    try:
        inverse = solve_spd(fim, np.eye(p))
    except NotPositiveDefinite as exc:
        raise SingularFim(str(exc)) from exc
    return 0.5 * (inverse + inverse.T)


def fim_and_crlb(model: PerturbedSignModel, w: ArrayLike) -> FisherReport:
    """
    Fisher information and CRLB at w

    Raises:
        SingularFim: the FIM is numerically singular (e.g. sigma_n^2 -> 0)
    """
    lam = lambda_diag(model, w)
    M = shrink_matrix(model, w)
    fim = (M * lam) @ M.T
    fim = 0.5 * (fim + fim.T)
    crlb_matrix = _inverse_fim(fim)
    return FisherReport(
        lambda_diag=lam,
        shrink_M=M,
        fim=fim,
        crlb_matrix=crlb_matrix,
        crlb_trace=float(np.trace(crlb_matrix))
    )


def scalar_crlb(w: float, sigma_e2: float, sigma_n2: float, n: int) -> float:
    """
    CRLB for scalar w with H = [1, ..., 1]

    (2 pi sigma_z^2 / N) (1 + sigma_e^2 w^2 / sigma_n^2)^2
        Phi(-w/sigma_z) Phi(w/sigma_z) exp(w^2 / sigma_z^2)
    """
    _check_sigma_n2(sigma_n2)
    sigma_z2 = w * w * sigma_e2 + sigma_n2
    a = w / math.sqrt(sigma_z2)
    log_value = (
        math.log(2.0 * math.pi * sigma_z2 / n)
        + 2.0 * math.log1p(sigma_e2 * w * w / sigma_n2)
        + std_normal_log_cdf(-a)
        + std_normal_log_cdf(a)
        + a * a
    )
    return math.exp(log_value)


def scalar_crlb_chernoff(w: float, sigma_e2: float, sigma_n2: float, n: int) -> float:
    """Chernoff upper bound on scalar_crlb"""
    _check_sigma_n2(sigma_n2)
    sigma_z2 = w * w * sigma_e2 + sigma_n2
    return (
        math.pi * sigma_z2 / (2.0 * n)
        * (1.0 + sigma_e2 * w * w / sigma_n2) ** 2
        * math.exp(w * w / (2.0 * sigma_z2))
    )


def chernoff_log_objective(sigma_n2: float, sigma_e2: float, w: float) -> float:
    """log of the Chernoff bound with the constant terms dropped"""
    _check_sigma_n2(sigma_n2)
    sigma_z2 = sigma_n2 + sigma_e2 * w * w
    return 3.0 * math.log(sigma_z2) + w * w / (2.0 * sigma_z2) - 2.0 * math.log(sigma_n2)


def _check_nonzero(w: float) -> None:
    if w == 0.0:
        raise DomainError("optimal-noise formulas need w != 0")


def approx_opt_sigma_n2(w: float, sigma_e2: float) -> float:
    """Stationary point of chernoff_log_objective in sigma_n^2"""
    _check_nonzero(w)
    if sigma_e2 < 0.0:
        raise DomainError(f"sigma_e2 must be nonnegative, got {sigma_e2}")
    return 0.5 * w * w * (
        math.sqrt(9.0 * sigma_e2**2 + sigma_e2 + 0.25) + 0.5 + sigma_e2
    )


def approx_opt_sigma_e2(w: float, sigma_n2: float) -> float:
    """Approximate optimal perturbation strength; zero when sigma_n^2 / w^2 > 1/6"""
    _check_nonzero(w)
    _check_sigma_n2(sigma_n2)
    ratio = sigma_n2 / (w * w)
    return 1.0 / 6.0 - ratio if ratio <= 1.0 / 6.0 else 0.0


def grid_argmin(
    objective: Callable[[float], float],
    lower: float,
    upper: float,
    n_points: int = GRID_POINTS
) -> float:
    """
    Minimize a 1-D function on [lower, upper]

    Log-spaced grid scan, then one bounded golden-section refinement between
    the neighbours of the best grid point.
    """
    if not 0.0 < lower < upper:
        raise DomainError(f"need 0 < lower < upper, got [{lower}, {upper}]")
    grid = np.geomspace(lower, upper, n_points)
    values = np.array([objective(x) for x in grid])
    best = int(np.argmin(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, n_points - 1)]
    if left == right:
        return float(grid[best])
    refined = minimize_scalar(objective, bounds=(left, right), method="bounded",
                              options={"xatol": 1e-10 * right})
    if refined.success and refined.fun <= values[best]:
        return float(refined.x)
    return float(grid[best])


def optimal_sigma_n2(
    w: float,
    sigma_e2: float,
    bounds: Tuple[float, float] = (1e-3, 1e2),
    chernoff: bool = False
) -> float:
    """sigma_n^2 minimizing the scalar CRLB (or its Chernoff bound) at fixed sigma_e^2"""
    bound = scalar_crlb_chernoff if chernoff else scalar_crlb
    return grid_argmin(lambda s: bound(w, sigma_e2, s, 1), *bounds)


def optimal_sigma_e2(
    w: float,
    sigma_n2: float,
    bounds: Tuple[float, float] = (1e-5, 1e1),
    chernoff: bool = False
) -> float:
    """sigma_e^2 minimizing the scalar CRLB (or its Chernoff bound) at fixed sigma_n^2"""
    bound = scalar_crlb_chernoff if chernoff else scalar_crlb
    return grid_argmin(lambda s: bound(w, s, sigma_n2, 1), *bounds)


def split_noise_variances(sigma_z2: float, gamma: float, w_norm2: float) -> Tuple[float, float]:
    """
    (sigma_e^2, sigma_n^2) with sigma_z^2 fixed and
    gamma = sigma_e^2 ||w||^2 / sigma_n^2
    """
    if not sigma_z2 > 0.0 or gamma < 0.0 or not w_norm2 > 0.0:
        raise DomainError("need sigma_z2 > 0, gamma >= 0 and ||w||^2 > 0")
    sigma_n2 = sigma_z2 / (1.0 + gamma)
    return gamma * sigma_n2 / w_norm2, sigma_n2


def crlb_gap_bounds(model: PerturbedSignModel, w: ArrayLike) -> GapBounds:
    """
    Extra CRLB trace caused by perturbation at fixed sigma_z^2

    The comparison model has sigma_e^2 = 0 and sigma_n^2 = sigma_z^2; its FIM
    J~ = H Lambda H^T shares Lambda with the perturbed model, whose FIM is
    J = N J~ N with N = I - (sigma_e^2 / sigma_z^2) w w^T. The gap
    tr(J^-1) - tr(J~^-1) lies between (gamma^2 + 2 gamma) / lambda~_max and
    (gamma^2 + 2 gamma) / lambda~_min.

    Returns:
        GapBounds(lower, upper, gap)
    """
    w = model.check_parameter(w)
    sigma_z2 = equivalent_noise_variance(model, w)
    t = np.atleast_1d(model.H.T @ w / math.sqrt(sigma_z2))
    lam = _lambda_from_scaled(t, sigma_z2)

    fim_free = (model.H * lam) @ model.H.T
    fim_free = 0.5 * (fim_free + fim_free.T)
    eigenvalues = sym_eigenvalues(fim_free)

    shrink = np.eye(model.p) - (model.sigma_e2 / sigma_z2) * np.outer(w, w)
    fim = shrink @ fim_free @ shrink
    fim = 0.5 * (fim + fim.T)

    gamma = model.sigma_e2 * float(w @ w) / model.sigma_n2
    factor = gamma * gamma + 2.0 * gamma
    gap = float(np.trace(_inverse_fim(fim)) - np.trace(_inverse_fim(fim_free)))
    return GapBounds(
        lower=factor / eigenvalues[0],
        upper=factor / eigenvalues[-1],
        gap=gap
    )

"""
ML Estimator
Damped Newton on the convex v-space problem, norm-limit projection onto
||w|| <= R_w, and the perturbation-ignored (probit) estimator
"""
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linprog

from estimation.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DomainError,
    InvalidRadius,
    RankDeficient,
)
from estimation.likelihood import neg_log_likelihood_v, v_objective, v_to_w
from estimation.model import PerturbedSignModel, as_sign_vector, check_identifiability
from estimation.numerics import DenseMatrix, DenseVector, solve_spd

MIN_STEP = 1e-16
STALL_DECREASE = 1e-12
# margins this far below zero, relative to ||v|| max ||h_i||, count as touching zero
QUASI_SEPARATION_TOL = 1e-8


class SolverOptions(BaseModel):
    """Newton solver settings"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    grad_tol: float = Field(default=1e-10, gt=0)
    max_iters: int = Field(default=100, ge=1)
    divergence_norm_factor: float = Field(default=1e3, gt=0)
    armijo_c: float = Field(default=1e-4, gt=0, lt=1)
    backtrack_ratio: float = Field(default=0.5, gt=0, lt=1)


class SolverStatus(str, Enum):
    INTERIOR = "interior"
    PROJECTED = "projected"
    SEPARATED = "separated"


class UnconstrainedSolution(NamedTuple):
    v: DenseVector
    converged: bool
    iterations: int
    grad_norm: float
    objective_trace: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Outcome of one norm-limited ML estimate"""
    w_hat: DenseVector
    v_solution: DenseVector
    status: SolverStatus
    iterations: int
    final_grad_norm: float
    neg_log_likelihood: float

    @property
    def is_interior(self) -> bool:
        return self.status is SolverStatus.INTERIOR


def _armijo_step(
    H: DenseMatrix,
    y: DenseVector,
    v: DenseVector,
    value: float,
    gradient: DenseVector,
    step: DenseVector,
    opts: SolverOptions
) -> Tuple[DenseVector, float]:
    """Backtrack from the full Newton step until the Armijo condition holds"""
    slope = float(gradient @ step)
    # objective values near the optimum are only known to a few ulps
    slack = 4.0 * np.finfo(float).eps * max(abs(value), 1.0)
    alpha = 1.0
    while alpha >= MIN_STEP:
        candidate = v + alpha * step
        candidate_value = v_objective(H, y, candidate)
        if candidate_value <= value + opts.armijo_c * alpha * slope + slack:
            return candidate, candidate_value
        alpha *= opts.backtrack_ratio
    raise ConvergenceFailure(
        f"line search found no acceptable step (|grad| = {np.linalg.norm(gradient):.3e})"
    )


def has_recession_direction(H: ArrayLike, y: ArrayLike) -> bool:
    """
    Whether some d != 0 has y_i h_i^T d >= 0 for every i with at least one strict

    Along such a d the objective decreases without bound, so no finite
    minimizer exists. Covers quasi-separation, where some margins stay at
    zero, as well as complete separation.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = as_sign_vector(y)
    signed = H * y
    result = linprog(
        -signed.sum(axis=1),
        A_ub=-signed.T,
        b_ub=np.zeros(signed.shape[1]),
        bounds=[(-1.0, 1.0)] * signed.shape[0],
        method="highs"
    )
    if result.status != 0:
        return False
    return -result.fun > QUASI_SEPARATION_TOL * max(1.0, float(np.abs(signed).sum()))


def _touches_separation(H: DenseMatrix, margins: DenseVector, v: DenseVector) -> bool:
    scale = float(np.linalg.norm(v)) * float(np.max(np.linalg.norm(H, axis=0)))
    return scale > 0.0 and float(np.min(margins)) >= -QUASI_SEPARATION_TOL * scale


def solve_unconstrained_v(
    H: ArrayLike,
    y: ArrayLike,
    opts: Optional[SolverOptions] = None,
    *,
    v0: Optional[ArrayLike] = None,
    divergence_radius: float = 1.0
) -> UnconstrainedSolution:
    """
    Minimize -sum_i log Phi(y_i h_i^T v) over all of R^p

    The solve stops as not converged when the data turn out to have no finite
    minimizer: an iterate separates every measurement (all margins > 0), the
    gradient vanishes only because every margin is nonnegative along a
    recession direction (quasi-separation), the iterate norm passes
    divergence_norm_factor * max(divergence_radius, 1), or the iteration cap
    is reached while the objective is still decreasing.

    Args:
        H: p x N mean sensing matrix of full row rank
        y: Sign vector of length N
        opts: Solver settings
        v0: Starting point (default 0)
        divergence_radius: Scale of the divergence threshold, normally R_v

    Returns:
        UnconstrainedSolution

    Raises:
        RankDeficient: H is not of full row rank or N < p
        NotPositiveDefinite: a Newton system could not be solved
        ConvergenceFailure: the iteration stalled away from any optimum
    """
    opts = opts or SolverOptions()
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = as_sign_vector(y)
    p, n = H.shape
    if n != y.shape[0]:
        raise DimensionMismatch(f"H has {n} columns but y has {y.shape[0]} entries")
    if n < p or not check_identifiability(H):
        raise RankDeficient(f"mean sensing matrix ({p} x {n}) is not of full row rank")

    v = np.zeros(p) if v0 is None else np.array(v0, dtype=float).reshape(p)
    threshold = opts.divergence_norm_factor * max(divergence_radius, 1.0)

    evaluation = neg_log_likelihood_v(H, y, v)
    trace = [evaluation.value]
    iterations = 0
    while True:
        grad_norm = float(np.linalg.norm(evaluation.gradient))
        if grad_norm <= opts.grad_tol:
            # a vanishing gradient far along a recession direction is not an optimum
            if _touches_separation(H, evaluation.margins, v) and has_recession_direction(H, y):
                break
            return UnconstrainedSolution(v, True, iterations, grad_norm, tuple(trace))

        # any v with every margin positive certifies complete separation
        if np.all(evaluation.margins > 0.0):
            break
        if np.linalg.norm(v) > threshold:
            break
        if iterations >= opts.max_iters:
            if len(trace) > 1 and trace[-2] - trace[-1] > STALL_DECREASE:
                break
            raise ConvergenceFailure(
                f"no progress after {iterations} iterations (|grad| = {grad_norm:.3e})"
            )

        step = solve_spd(evaluation.hessian, -evaluation.gradient)
        v, value = _armijo_step(H, y, v, evaluation.value, evaluation.gradient, step, opts)
        evaluation = neg_log_likelihood_v(H, y, v)
        trace.append(value)
        iterations += 1

    return UnconstrainedSolution(v, False, iterations, grad_norm, tuple(trace))


def _projection_direction(H: DenseMatrix, y: DenseVector, v: DenseVector) -> DenseVector:
    norm = np.linalg.norm(v)
    if norm > 0.0:
        return v / norm
    descent = -neg_log_likelihood_v(H, y, v).gradient
    return descent / np.linalg.norm(descent)


def ml_estimate(
    model: PerturbedSignModel,
    y: ArrayLike,
    R_w: float,
    opts: Optional[SolverOptions] = None
) -> EstimateReport:
    """
    Norm-limited ML estimate of w

    Solves the unconstrained v problem, projects onto the ball of radius
    R_v = R_w / sqrt(R_w^2 sigma_e^2 + sigma_n^2) when the optimum lies
    outside it or does not exist, and maps back to w.

    Args:
        model: Perturbed sign model
        y: Observed sign vector
        R_w: Norm limit on the estimate
        opts: Solver settings

    Returns:
        EstimateReport with status interior, projected or separated
    """
    if not R_w > 0.0:
        raise InvalidRadius(f"R_w must be positive, got {R_w}")
    y = as_sign_vector(y)
    if y.shape[0] != model.n_measurements:
        raise DimensionMismatch(
            f"model has {model.n_measurements} measurements but y has {y.shape[0]}"
        )

    r_v = R_w / np.sqrt(R_w**2 * model.sigma_e2 + model.sigma_n2)
    solution = solve_unconstrained_v(model.H, y, opts, divergence_radius=r_v)
    v_norm = float(np.linalg.norm(solution.v))

    if solution.converged and v_norm <= r_v:
        status = SolverStatus.INTERIOR
        v_solution = solution.v
    else:
        status = SolverStatus.PROJECTED if solution.converged else SolverStatus.SEPARATED
        v_solution = r_v * _projection_direction(model.H, y, solution.v)

    return EstimateReport(
        w_hat=v_to_w(v_solution, model.sigma_e2, model.sigma_n2),
        v_solution=v_solution,
        status=status,
        iterations=solution.iterations,
        final_grad_norm=solution.grad_norm,
        neg_log_likelihood=v_objective(model.H, y, v_solution)
    )


def perturbation_ignored_estimate(
    H: ArrayLike,
    y: ArrayLike,
    sigma_n2: float,
    R_w: float,
    opts: Optional[SolverOptions] = None
) -> EstimateReport:
    """Probit ML estimate that treats sigma_e^2 as zero"""
    return ml_estimate(PerturbedSignModel(H, 0.0, sigma_n2), y, R_w, opts)


def _check_sigma_n2(sigma_n2: float) -> None:
    if not sigma_n2 > 0.0:
        raise DomainError(f"sigma_n2 must be positive, got {sigma_n2}")


def relate_ignored_to_ml(w_t: ArrayLike, sigma_e2: float, sigma_n2: float) -> DenseVector:
    """Perturbation-ignored estimate implied by the ML estimate w_t"""
    _check_sigma_n2(sigma_n2)
    w_t = np.atleast_1d(np.asarray(w_t, dtype=float))
    return w_t / np.sqrt(1.0 + (sigma_e2 / sigma_n2) * float(w_t @ w_t))


def mismodel_limit_mse(w0: ArrayLike, sigma_e2: float, sigma_n2: float) -> float:
    """Limit of the perturbation-ignored squared error as N grows"""
    _check_sigma_n2(sigma_n2)
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    energy = float(w0 @ w0)
    shrink = (1.0 + (sigma_e2 / sigma_n2) * energy) ** -0.5
    return energy * (1.0 - shrink) ** 2


def small_perturbation_relative_error(w0: ArrayLike, sigma_e2: float, sigma_n2: float) -> float:
    """sigma_e^2 ||w0||^2 / (2 sigma_n^2), valid when sigma_e^2 ||w0||^2 << sigma_n^2"""
    _check_sigma_n2(sigma_n2)
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    return sigma_e2 * float(w0 @ w0) / (2.0 * sigma_n2)

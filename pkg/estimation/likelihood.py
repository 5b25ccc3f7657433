"""
Negative Log-Likelihood
Native w-parameterization and the convex v-parameterization v = w / sigma_z(w)
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from estimation.errors import DimensionMismatch, DomainError, InfeasibleV
from estimation.model import PerturbedSignModel, SignVector, as_sign_vector
from estimation.numerics import (
    DenseMatrix,
    DenseVector,
    inverse_mills,
    std_normal_log_cdf,
)

VParameter = DenseVector


@dataclass(frozen=True, eq=False)
class ObjectiveEvaluation:
    """Value, gradient and Hessian of the v-space objective at one point"""
    value: float
    gradient: DenseVector
    hessian: DenseMatrix
    margins: DenseVector
    beta: DenseVector


def _check_variances(sigma_e2: float, sigma_n2: float) -> None:
    if not sigma_n2 > 0.0:
        raise DomainError(f"sigma_n2 must be positive, got {sigma_n2}")
    if not sigma_e2 >= 0.0:
        raise DomainError(f"sigma_e2 must be nonnegative, got {sigma_e2}")


def w_to_v(w: ArrayLike, sigma_e2: float, sigma_n2: float) -> VParameter:
    """v = w / sqrt(||w||^2 sigma_e^2 + sigma_n^2)"""
    _check_variances(sigma_e2, sigma_n2)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return w / np.sqrt(float(w @ w) * sigma_e2 + sigma_n2)


def v_to_w(v: ArrayLike, sigma_e2: float, sigma_n2: float) -> DenseVector:
    """
    w = sigma_n v / sqrt(1 - sigma_e^2 ||v||^2)

    Raises:
        InfeasibleV: ||v||^2 >= 1 / sigma_e^2
    """
    _check_variances(sigma_e2, sigma_n2)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    denominator = 1.0 - sigma_e2 * float(v @ v)
    if denominator <= 0.0:
        raise InfeasibleV(
            f"||v||^2 = {float(v @ v):.6g} violates ||v||^2 < 1/sigma_e^2 = {1.0 / sigma_e2:.6g}"
        )
    return np.sqrt(sigma_n2) * v / np.sqrt(denominator)


def _check_dimensions(H: DenseMatrix, y: SignVector, x: DenseVector) -> None:
    if H.shape[1] != y.shape[0]:
        raise DimensionMismatch(f"H has {H.shape[1]} columns but y has {y.shape[0]} entries")
    if H.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"H has {H.shape[0]} rows but parameter has {x.shape[0]} entries")


def measurement_margins(H: ArrayLike, y: ArrayLike, v: ArrayLike) -> DenseVector:
    """t_i = y_i h_i^T v"""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = as_sign_vector(y)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    _check_dimensions(H, y, v)
    return y * (H.T @ v)


def neg_log_likelihood_w(model: PerturbedSignModel, y: ArrayLike, w: ArrayLike) -> float:
    """-sum_i log Phi(y_i h_i^T w / sigma_z(w))"""
    y = as_sign_vector(y)
    w = model.check_parameter(w)
    _check_dimensions(model.H, y, w)
    sigma_z = np.sqrt(float(w @ w) * model.sigma_e2 + model.sigma_n2)
    t = y * (model.H.T @ w) / sigma_z
    return float(-np.sum(std_normal_log_cdf(t)))


def neg_log_likelihood_w_profile(
    model: PerturbedSignModel,
    y: ArrayLike,
    w_grid: ArrayLike
) -> DenseVector:
    """
    Scalar w-space objective over a grid

    The w-space objective is nonconvex; the profile shows whether it has an
    interior minimum or keeps decreasing towards |w| -> infinity.
    """
    if model.p != 1:
        raise DimensionMismatch(f"profile needs a scalar model, got p = {model.p}")
    y = as_sign_vector(y)
    grid = np.atleast_1d(np.asarray(w_grid, dtype=float))
    sigma_z = np.sqrt(grid**2 * model.sigma_e2 + model.sigma_n2)
    h = model.H[0]
    t = (y * h)[None, :] * (grid / sigma_z)[:, None]
    return -np.sum(std_normal_log_cdf(t), axis=1)


def v_objective(H: ArrayLike, y: ArrayLike, v: ArrayLike) -> float:
    """Objective value only, for line searches"""
    return float(-np.sum(std_normal_log_cdf(measurement_margins(H, y, v))))


def neg_log_likelihood_v(
    H: ArrayLike,
    y: ArrayLike,
    v: ArrayLike,
    margins: Optional[DenseVector] = None
) -> ObjectiveEvaluation:
    """
    Convex v-space objective with its gradient and Hessian

    value    = -sum_i log Phi(t_i)
    gradient = -sum_i y_i k(t_i) h_i
    hessian  =  sum_i beta_i h_i h_i^T

    Args:
        H: p x N mean sensing matrix
        y: Sign vector of length N
        v: Point of evaluation
        margins: Precomputed t_i = y_i h_i^T v, if already available

    Returns:
        ObjectiveEvaluation
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    y = as_sign_vector(y)
    if margins is None:
        margins = measurement_margins(H, y, v)

    k = inverse_mills(margins)
    # same as (phi^2 + t phi Phi) / Phi^2 without squaring tiny Phi
    beta = k * (k + margins)
    # fixed summation order keeps the result bit-reproducible
    value = float(-np.sum(std_normal_log_cdf(margins)))
    gradient = -(H @ (y * k))
    hessian = (H * beta) @ H.T
    hessian = 0.5 * (hessian + hessian.T)
    return ObjectiveEvaluation(
        value=value,
        gradient=gradient,
        hessian=hessian,
        margins=margins,
        beta=beta
    )

"""
Numerics Kernel
Standard-normal special functions and the small dense linear algebra
used by the model, likelihood and bound computations
"""
import math
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla
from scipy import special

from estimation.errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
)

DenseMatrix = NDArray[np.float64]
DenseVector = NDArray[np.float64]
RealOrArray = Union[float, NDArray[np.float64]]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

PIVOT_EPS = 1e-12
SYMMETRY_RTOL = 1e-10


def _out(values: NDArray[np.float64], like: ArrayLike) -> RealOrArray:
    """Return a Python float for scalar input, an array otherwise"""
    if np.ndim(like) == 0:
        return float(values)
    return values


def std_normal_cdf(x: ArrayLike) -> RealOrArray:
    """Phi(x)"""
    return _out(special.ndtr(np.asarray(x, dtype=float)), x)


def std_normal_log_cdf(x: ArrayLike) -> RealOrArray:
    """
    log Phi(x) without intermediate underflow

    scipy's log_ndtr switches to the scaled complementary error function in
    the left tail, so the value stays accurate down to x = -40 and beyond.
    """
    return _out(special.log_ndtr(np.asarray(x, dtype=float)), x)


def std_normal_log_pdf(x: ArrayLike) -> RealOrArray:
    x = np.asarray(x, dtype=float)
    return _out(-0.5 * x * x - LOG_SQRT_2PI, x)


def inverse_mills(x: ArrayLike) -> RealOrArray:
    """
    k(x) = phi(x) / Phi(x)

    Written as sqrt(2/pi) / erfcx(-x/sqrt(2)); the exp(-x^2/2) factors of
    phi and Phi cancel analytically, so there is no 0/0 in the left tail.
    Underflows to 0 only where phi itself does (x > ~37.5).
    """
    x = np.asarray(x, dtype=float)
    return _out(SQRT_2_OVER_PI / special.erfcx(-x / math.sqrt(2.0)), x)


def std_normal_quantile(p: ArrayLike) -> RealOrArray:
    """
    Phi^{-1}(p) for 0 < p < 1

    Raises:
        DomainError: p <= 0 or p >= 1 (the optimum would be infinite)
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"quantile argument must lie in (0, 1), got {p!r}")
    return _out(special.ndtri(arr), p)


def log_binomial(n: ArrayLike, k: ArrayLike) -> RealOrArray:
    """log C(n, k) via log-gamma"""
    n_arr = np.asarray(n, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise DomainError(f"log_binomial requires 0 <= k <= n, got n={n!r}, k={k!r}")
    values = (
        special.gammaln(n_arr + 1.0)
        - special.gammaln(k_arr + 1.0)
        - special.gammaln(n_arr - k_arr + 1.0)
    )
    return _out(values, np.broadcast_arrays(n_arr, k_arr)[0])


def _check_symmetric(A: DenseMatrix) -> DenseMatrix:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    if np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise DomainError("matrix is not symmetric")
    return A


def solve_spd(A: DenseMatrix, b: ArrayLike) -> NDArray[np.float64]:
    """
    Solve A x = b for symmetric positive definite A

    Args:
        A: p x p symmetric positive definite matrix
        b: right-hand side, a vector of length p or a p x m matrix

    Returns:
        Solution with the shape of b

    Raises:
        NotPositiveDefinite: a Cholesky pivot is <= 1e-12 * trace(A) / p
    """
    A = _check_symmetric(A)
    b = np.asarray(b, dtype=float)
    p = A.shape[0]
    if b.shape[0] != p:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix is {p} x {p}")

    threshold = PIVOT_EPS * np.trace(A) / p
    if threshold <= 0.0:
        raise NotPositiveDefinite("matrix trace is not positive")
    try:
        factor, lower = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc

    pivots = np.diag(factor) ** 2
    if np.any(pivots <= threshold):
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below threshold {threshold:.3e}"
        )
    return sla.cho_solve((factor, lower), b, check_finite=False)


def sym_eigenvalues(A: DenseMatrix) -> DenseVector:
    """Eigenvalues of a symmetric matrix, sorted descending"""
    A = _check_symmetric(A)
    try:
        values = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"symmetric eigenvalue iteration failed: {exc}") from exc
    return values[::-1].copy()

"""
Perturbed Sign-Measurement Model
y = sign((H + E)^T w + n) with E_ij ~ N(0, sigma_e^2) and n_i ~ N(0, sigma_n^2)
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from estimation.errors import DimensionMismatch, DomainError
from estimation.numerics import DenseMatrix, DenseVector, sym_eigenvalues

SignVector = NDArray[np.float64]

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class RngSeed:
    """
    Address of one random stream

    (master_seed, stream_index) pairs are fed to a SeedSequence spawn key and
    drive a Philox counter-based generator, so distinct stream indices give
    independent streams that can be drawn from concurrently.
    """
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= value < 2**64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_index,)
        )
        return np.random.Generator(np.random.Philox(sequence))

    def child(self, stream_index: int) -> "RngSeed":
        return RngSeed(self.master_seed, stream_index)


@dataclass(frozen=True, eq=False)
class PerturbedSignModel:
    """Mean sensing matrix H (p x N) with perturbation and additive-noise variances"""
    H: DenseMatrix
    sigma_e2: float
    sigma_n2: float

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        object.__setattr__(self, "H", H)
        if not np.all(np.isfinite(H)):
            raise DomainError("H has non-finite entries")
        if not self.sigma_n2 > 0.0:
            raise DomainError(f"sigma_n2 must be positive, got {self.sigma_n2}")
        if not self.sigma_e2 >= 0.0:
            raise DomainError(f"sigma_e2 must be nonnegative, got {self.sigma_e2}")

    @property
    def p(self) -> int:
        return self.H.shape[0]

    @property
    def n_measurements(self) -> int:
        return self.H.shape[1]

    def check_parameter(self, w: ArrayLike) -> DenseVector:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.shape != (self.p,):
            raise DimensionMismatch(f"parameter has shape {w.shape}, model expects ({self.p},)")
        return w


def as_sign_vector(y: ArrayLike) -> SignVector:
    """Validate that every entry is exactly +1 or -1"""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not np.all((y == 1.0) | (y == -1.0)):
        raise DomainError("sign vector entries must be exactly +1 or -1")
    return y


def sign(x: ArrayLike) -> SignVector:
    """+1 for positive values, -1 for nonpositive ones"""
    return np.where(np.asarray(x) > 0.0, 1.0, -1.0)


def equivalent_noise_variance(model: PerturbedSignModel, w: ArrayLike) -> float:
    """sigma_z^2 = ||w||^2 sigma_e^2 + sigma_n^2"""
    w = model.check_parameter(w)
    return float(w @ w) * model.sigma_e2 + model.sigma_n2


def simulate_with_perturbation(
    model: PerturbedSignModel,
    w0: ArrayLike,
    seed: RngSeed
) -> Tuple[SignVector, DenseMatrix]:
    """
    Draw the full perturbation matrix E and the measurements it produces

    Returns:
        (y, H + E), the realized sensing matrix included
    """
    w0 = model.check_parameter(w0)
    rng = seed.generator()
    p, n = model.H.shape
    E = np.sqrt(model.sigma_e2) * rng.standard_normal((p, n))
    noise = np.sqrt(model.sigma_n2) * rng.standard_normal(n)
    realized = model.H + E
    return sign(realized.T @ w0 + noise), realized


def simulate_measurements(
    model: PerturbedSignModel,
    w0: ArrayLike,
    seed: RngSeed,
    *,
    materialize_perturbation: bool = False,
    noiseless: bool = False
) -> SignVector:
    """
    Simulate y = sign(h_i^T w0 + e_i^T w0 + n_i)

    e_i^T w0 is drawn directly as N(0, sigma_e^2 ||w0||^2); E itself is only
    built when materialize_perturbation is set.

    Args:
        model: Model holding H, sigma_e2, sigma_n2
        w0: True parameter
        seed: Stream address; identical seeds give identical outputs
        materialize_perturbation: Draw the full p x N matrix E instead
        noiseless: Force every noise draw to zero (y = sign(H^T w0))

    Returns:
        Sign vector of length N
    """
    w0 = model.check_parameter(w0)
    mean = model.H.T @ w0
    if noiseless:
        return sign(mean)
    if materialize_perturbation:
        y, _ = simulate_with_perturbation(model, w0, seed)
        return y

    rng = seed.generator()
    n = model.n_measurements
    multiplicative = np.sqrt(model.sigma_e2 * float(w0 @ w0)) * rng.standard_normal(n)
    additive = np.sqrt(model.sigma_n2) * rng.standard_normal(n)
    return sign(mean + multiplicative + additive)


def make_ones_row(n: int) -> DenseMatrix:
    """The 1 x N all-ones mean sensing matrix of the scalar model"""
    if n < 1:
        raise DomainError(f"N must be at least 1, got {n}")
    return np.ones((1, n))


def make_gaussian_matrix(p: int, n: int, seed: RngSeed) -> DenseMatrix:
    """p x N matrix with i.i.d. N(0, 1) entries"""
    if p < 1 or n < 1:
        raise DomainError(f"matrix dimensions must be positive, got {p} x {n}")
    return seed.generator().standard_normal((p, n))


def check_identifiability(H: ArrayLike) -> bool:
    """True iff H has full row rank"""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    p = H.shape[0]
    gram = H @ H.T
    trace = np.trace(gram)
    if trace <= 0.0:
        return False
    smallest = sym_eigenvalues(gram)[-1]
    return bool(smallest > RANK_RTOL * trace / p)

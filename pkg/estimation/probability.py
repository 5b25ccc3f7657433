"""
Unimodality Probability
Probability that the unconstrained v-space optimum lies inside the open ball
||v|| < 1/sigma_e, i.e. that the w-space likelihood has a finite optimum,
for the scalar model with H = [1, ..., 1]
"""
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import logsumexp

from estimation.errors import DomainError
from estimation.model import RngSeed
from estimation.numerics import log_binomial, std_normal_cdf, std_normal_log_cdf

MIN_MC_TRIALS = 100
MC_CHUNK = 2048


@dataclass(frozen=True)
class UnimodalityQuery:
    n: int
    w0: float
    sigma_e2: float
    sigma_n2: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"N must be at least 1, got {self.n}")
        if not self.sigma_e2 > 0.0:
            raise DomainError(f"sigma_e2 must be positive, got {self.sigma_e2}")
        if not self.sigma_n2 > 0.0:
            raise DomainError(f"sigma_n2 must be positive, got {self.sigma_n2}")

    @property
    def sigma_z(self) -> float:
        return math.sqrt(self.w0 * self.w0 * self.sigma_e2 + self.sigma_n2)

    @property
    def success_probability(self) -> float:
        """q* = Phi(w0 / sigma_z), the probability that a measurement is +1"""
        return std_normal_cdf(self.w0 / self.sigma_z)


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float


def k_window(q: UnimodalityQuery) -> Tuple[int, int]:
    """
    (k-, k+): counts of +1 measurements for which |v_u*| < 1/sigma_e

    k- = floor(N Phi(-1/sigma_e)) + 1 and k+ = ceil(N Phi(1/sigma_e)) - 1;
    the window is empty when k- > k+.
    """
    radius = 1.0 / math.sqrt(q.sigma_e2)
    k_minus = math.floor(q.n * std_normal_cdf(-radius)) + 1
    k_plus = math.ceil(q.n * std_normal_cdf(radius)) - 1
    return k_minus, k_plus


def p_unimodal_exact(q: UnimodalityQuery) -> float:
    """Binomial probability of k in [k-, k+], summed in log space"""
    k_minus, k_plus = k_window(q)
    if k_minus > k_plus:
        return 0.0
    a = q.w0 / q.sigma_z
    k = np.arange(k_minus, k_plus + 1, dtype=float)
    log_terms = (
        log_binomial(q.n, k)
        + k * std_normal_log_cdf(a)
        + (q.n - k) * std_normal_log_cdf(-a)
    )
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def p_unimodal_normal_approx(q: UnimodalityQuery) -> float:
    """Phi(eta+) - Phi(eta-) from the normal approximation of the binomial count"""
    radius = 1.0 / math.sqrt(q.sigma_e2)
    a = q.w0 / q.sigma_z
    center = std_normal_cdf(a)
    spread = math.sqrt(std_normal_cdf(a) * std_normal_cdf(-a))
    scale = math.sqrt(q.n) / spread
    eta_plus = (std_normal_cdf(radius) - center) * scale
    eta_minus = (std_normal_cdf(-radius) - center) * scale
    value = std_normal_cdf(eta_plus) - std_normal_cdf(eta_minus)
    return float(min(1.0, max(0.0, value)))


def p_unimodal_mc(q: UnimodalityQuery, trials: int, seed: RngSeed) -> MonteCarloEstimate:
    """
    Monte Carlo estimate of the unimodality probability

    Each trial simulates N sign measurements y_i = sign(w0 + e_i w0 + n_i)
    and checks whether the count of +1 entries falls in [k-, k+].
    """
    if trials < MIN_MC_TRIALS:
        raise DomainError(f"need at least {MIN_MC_TRIALS} trials, got {trials}")
    k_minus, k_plus = k_window(q)
    rng = seed.generator()
    multiplicative_scale = math.sqrt(q.sigma_e2) * abs(q.w0)
    additive_scale = math.sqrt(q.sigma_n2)

    hits = 0
    remaining = trials
    while remaining > 0:
        rows = min(MC_CHUNK, remaining)
        multiplicative = multiplicative_scale * rng.standard_normal((rows, q.n))
        additive = additive_scale * rng.standard_normal((rows, q.n))
        ones = np.count_nonzero(q.w0 + multiplicative + additive > 0.0, axis=1)
        hits += int(np.count_nonzero((ones >= k_minus) & (ones <= k_plus)))
        remaining -= rows

    estimate = hits / trials
    return MonteCarloEstimate(estimate, math.sqrt(estimate * (1.0 - estimate) / trials))

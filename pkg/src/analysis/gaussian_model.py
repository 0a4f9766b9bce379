"""
Gaussian exponent model
For zero-mean Gaussian weights with standard deviation sigma, the probability
that a weight's binary exponent equals x is

    P(X = x) = erf(2^(x+1) / (sigma sqrt 2)) - erf(2^x / (sigma sqrt 2))

The continuous extension peaks where u = 2^x / (sigma sqrt 2) = sqrt(ln 2 / 3).
"""

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from analysis.exponent_stats import N_EXPONENTS, ExponentHistogram
from core.bf16 import EXPONENT_BIAS
from core.errors import ModelParameterError

CRITICAL_U = math.sqrt(math.log(2) / 3)
DEFAULT_X_RANGE = range(-60, 11)


@dataclass(frozen=True)
class GaussianExponentModel:
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ModelParameterError(f"sigma must be positive and finite, got {self.sigma}")

    def pmf(self, x: int) -> float:
        return gaussian_pmf(self, x)

    def pmf_range(self, xs: Iterable[int] = DEFAULT_X_RANGE) -> np.ndarray:
        return np.array([gaussian_pmf(self, x) for x in xs], dtype=np.float64)

    def critical_exponent(self) -> float:
        """Real x* with 2^x* = sigma sqrt(2) u0"""
        return math.log2(self.sigma * math.sqrt(2) * CRITICAL_U)

    def mode(self) -> int:
        return gaussian_mode(self)


def gaussian_pmf(model: GaussianExponentModel, x: int) -> float:
    if not math.isfinite(x):
        raise ModelParameterError(f"exponent must be finite, got {x}")
    lo = math.ldexp(1.0, int(x)) / (model.sigma * math.sqrt(2))
    hi = 2.0 * lo
    # erfc keeps precision once both erf values crowd 1
    if lo > 1.0:
        return math.erfc(lo) - math.erfc(hi)
    return math.erf(hi) - math.erf(lo)


def gaussian_mode(model: GaussianExponentModel) -> int:
    """Integer mode: the better of the two neighbours of the critical point"""
    x_star = model.critical_exponent()
    below, above = math.floor(x_star), math.ceil(x_star)
    if gaussian_pmf(model, above) > gaussian_pmf(model, below):
        return above
    return below


def gaussian_exponent_histogram(sigma: float, total: int) -> ExponentHistogram:
    """pmf realized as integer counts over the exponent field E = x + 127"""
    model = GaussianExponentModel(sigma)
    counts = np.zeros(N_EXPONENTS, dtype=np.int64)
    for e in range(1, N_EXPONENTS - 1):
        counts[e] = int(round(gaussian_pmf(model, e - EXPONENT_BIAS) * total))
    return ExponentHistogram(counts, int(counts.sum()))


def sigma_grid(count: int = 56, low_log2: float = -10.0, high_log2: float = 2.0) -> np.ndarray:
    """Log-spaced sigma values between 2^low_log2 and 2^high_log2"""
    return np.exp2(np.linspace(low_log2, high_log2, count))

"""
Exponent distribution statistics
Histogram, contiguous window selection, top-k coverage, entropy and the
AverageBits cost of an n-bit codeword scheme.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from core.bf16 import as_words, exponent_array
from core.config import Config
from core.errors import EmptyInputError, ModelParameterError

logger = logging.getLogger(__name__)

N_EXPONENTS = 256


@dataclass(frozen=True)
class ExponentHistogram:
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if self.counts.shape != (N_EXPONENTS,):
            raise ValueError(f"histogram needs {N_EXPONENTS} bins, got {self.counts.shape}")
        if int(self.counts.sum()) != self.total:
            raise ValueError("histogram counts do not sum to total")

    def probabilities(self) -> np.ndarray:
        if self.total == 0:
            raise EmptyInputError("histogram is empty")
        return self.counts / self.total

    def __add__(self, other: 'ExponentHistogram') -> 'ExponentHistogram':
        return ExponentHistogram(self.counts + other.counts, self.total + other.total)


@dataclass(frozen=True)
class ExponentWindow:
    """Seven consecutive exponents [base_exp + 1, base_exp + 7]"""
    base_exp: int
    covered: int = 0
    width: int = Config.WINDOW_WIDTH

    def __post_init__(self):
        if not -1 <= self.base_exp <= N_EXPONENTS - 1 - self.width:
            raise ModelParameterError(f"base_exp {self.base_exp} puts the window outside [0, 255]")

    @property
    def low(self) -> int:
        return self.base_exp + 1

    @property
    def high(self) -> int:
        return self.base_exp + self.width

    def contains(self, exponent: int) -> bool:
        return self.low <= exponent <= self.high


def compute_histogram(weights) -> ExponentHistogram:
    words = as_words(weights).ravel()
    counts = np.bincount(exponent_array(words), minlength=N_EXPONENTS).astype(np.int64)
    return ExponentHistogram(counts, int(words.size))


def histogram_from_counts(counts: Sequence[int]) -> ExponentHistogram:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size < N_EXPONENTS:
        counts = np.concatenate([counts, np.zeros(N_EXPONENTS - counts.size, dtype=np.int64)])
    if np.any(counts < 0):
        raise ValueError("histogram counts must be non-negative")
    return ExponentHistogram(counts, int(counts.sum()))


def _window_sums(counts: np.ndarray, width: int) -> np.ndarray:
    cumulative = np.concatenate([[0], np.cumsum(counts)])
    return cumulative[width:] - cumulative[:-width]


def select_window(h: ExponentHistogram, width: int = Config.WINDOW_WIDTH) -> ExponentWindow:
    """Contiguous window with the largest mass; ties go to the smallest start"""
    if h.total == 0:
        raise EmptyInputError("cannot select a window from an empty histogram")
    sums = _window_sums(h.counts, width)
    start = int(np.argmax(sums))
    window = ExponentWindow(base_exp=start - 1, covered=int(sums[start]), width=width)
    logger.debug("selected window [%d, %d] covering %d of %d", window.low, window.high, window.covered, h.total)
    return window


def select_shared_window(histograms: Iterable[ExponentHistogram]) -> ExponentWindow:
    """One window for many matrices, chosen on their pooled histogram"""
    pooled = None
    for h in histograms:
        pooled = h if pooled is None else pooled + h
    if pooled is None:
        raise EmptyInputError("no histograms to pool")
    return select_window(pooled)


def window_covered(h: ExponentHistogram, window: ExponentWindow) -> int:
    return int(h.counts[window.low:window.high + 1].sum())


def window_coverage(h: ExponentHistogram, window: ExponentWindow) -> float:
    if h.total == 0:
        raise EmptyInputError("coverage of an empty histogram is undefined")
    return window_covered(h, window) / h.total


def _check_codeword_bits(n: int):
    if not 1 <= n <= 8:
        raise ModelParameterError(f"codeword bits must be in [1, 8], got {n}")


def coverage_ratio_topk(h: ExponentHistogram, n: int) -> float:
    """r_n: share of the 2^n - 1 most frequent exponents, contiguous or not"""
    _check_codeword_bits(n)
    if h.total == 0:
        raise EmptyInputError("coverage of an empty histogram is undefined")
    k = (1 << n) - 1
    top = np.sort(h.counts)[::-1][:k]
    return int(top.sum()) / h.total


def topk_exponents(h: ExponentHistogram, k: int) -> List[Tuple[int, int]]:
    """The k most frequent exponents as (E, count); ties toward smaller E"""
    order = np.lexsort((np.arange(N_EXPONENTS), -h.counts))
    return [(int(e), int(h.counts[e])) for e in order[:k]]


def top_share(h: ExponentHistogram, k: int) -> float:
    if h.total == 0:
        raise EmptyInputError("share of an empty histogram is undefined")
    return sum(count for _, count in topk_exponents(h, k)) / h.total


def is_top7_contiguous(h: ExponentHistogram) -> bool:
    nonzero = int(np.count_nonzero(h.counts))
    k = min(Config.WINDOW_WIDTH, nonzero)
    exps = [e for e, _ in topk_exponents(h, k)]
    return not exps or max(exps) - min(exps) + 1 == len(exps)


def entropy_of_probabilities(probs) -> float:
    p = np.asarray(probs, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def shannon_entropy(h: ExponentHistogram) -> float:
    """Bits per symbol of the exponent field"""
    return entropy_of_probabilities(h.probabilities())


def entropy_bound_ratio(h: ExponentHistogram) -> float:
    """Lossless bound when only the exponent is entropy coded: 16 / (8 + H)"""
    return 16.0 / (16 - 8 + shannon_entropy(h))


def average_bits(n: int, r: float) -> float:
    """AverageBits(n) = r (n + 8) + (1 - r) (n + 16)"""
    if n < 1:
        raise ModelParameterError(f"codeword bits must be >= 1, got {n}")
    if not 0.0 <= r <= 1.0:
        raise ModelParameterError(f"coverage must be in [0, 1], got {r}")
    return r * (n + 8) + (1 - r) * (n + 16)


def coverage_for_average_bits(n: int, bits: float) -> float:
    """Inverse of average_bits in r"""
    if n < 1:
        raise ModelParameterError(f"codeword bits must be >= 1, got {n}")
    return (n + 16 - bits) / 8.0


def top_k_contiguous(pmf, k: int) -> bool:
    """True iff the k largest entries (ties toward smaller index) form one run"""
    values = np.asarray(pmf, dtype=np.float64)
    if not 1 <= k <= values.size:
        raise ModelParameterError(f"k must be in [1, {values.size}], got {k}")
    order = np.lexsort((np.arange(values.size), -values))[:k]
    return int(order.max() - order.min() + 1) == k


def check_unimodal(pmf, tol: float = 1e-12) -> Tuple[bool, int]:
    """
    Check that a sequence rises to one peak then falls

    Returns:
        (is_unimodal, index of the first maximum). Flat runs are tolerated.
    """
    values = np.asarray(pmf, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("empty sequence")
    peak = int(np.argmax(values))
    steps = np.diff(values)
    rising_ok = bool(np.all(steps[:peak] >= -tol))
    falling_ok = bool(np.all(steps[peak:] <= tol))
    return rising_ok and falling_ok, peak

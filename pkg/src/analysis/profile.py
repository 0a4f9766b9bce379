"""
Matrix and corpus compressibility profiles
Collects every exponent statistic for one weight matrix, and aggregates many
matrices both per-matrix (averaged) and pooled (summed histogram).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from analysis.exponent_stats import (
    ExponentHistogram, ExponentWindow, average_bits, compute_histogram,
    coverage_ratio_topk, entropy_bound_ratio, is_top7_contiguous,
    select_window, shannon_entropy, top_share, window_coverage,
)
from core.errors import EmptyInputError


@dataclass
class MatrixProfile:
    name: str
    elements: int
    histogram: ExponentHistogram
    window: ExponentWindow
    coverage: float
    topk_coverage: Dict[int, float]
    top3_share: float
    top7_contiguous: bool
    entropy: float
    entropy_bound: float
    average_bits_table: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """JSON-ready summary; histogram reported as sparse {E: count}"""
        return {
            'name': self.name,
            'elements': self.elements,
            'window': {'base_exp': self.window.base_exp, 'low': self.window.low,
                       'high': self.window.high, 'covered': self.window.covered},
            'coverage': self.coverage,
            'topk_coverage': {f'r{n}': v for n, v in sorted(self.topk_coverage.items())},
            'top3_share': self.top3_share,
            'top7_contiguous': self.top7_contiguous,
            'entropy_bits': self.entropy,
            'entropy_bound_ratio': self.entropy_bound,
            'average_bits': {str(n): v for n, v in sorted(self.average_bits_table.items())},
            'histogram': {str(e): int(c) for e, c in enumerate(self.histogram.counts) if c},
        }


def profile_histogram(name: str, h: ExponentHistogram) -> MatrixProfile:
    if h.total == 0:
        raise EmptyInputError(f"{name}: nothing to profile")
    topk = {n: coverage_ratio_topk(h, n) for n in range(1, 9)}
    window = select_window(h)
    return MatrixProfile(
        name=name,
        elements=h.total,
        histogram=h,
        window=window,
        coverage=window_coverage(h, window),
        topk_coverage=topk,
        top3_share=top_share(h, 3),
        top7_contiguous=is_top7_contiguous(h),
        entropy=shannon_entropy(h),
        entropy_bound=entropy_bound_ratio(h),
        average_bits_table={n: average_bits(n, topk[n]) for n in range(1, 9)},
    )


def profile_matrix(name: str, words) -> MatrixProfile:
    return profile_histogram(name, compute_histogram(words))


@dataclass
class CorpusSummary:
    matrices: int
    mean_coverage: float
    mean_entropy: float
    mean_top3_share: float
    contiguity_rate: float
    pooled_coverage: float
    pooled_entropy: float

    def to_dict(self) -> dict:
        return dict(sorted(self.__dict__.items()))


def profile_corpus(profiles: Sequence[MatrixProfile]) -> CorpusSummary:
    if not profiles:
        raise EmptyInputError("no matrices to summarize")
    pooled = profiles[0].histogram
    for p in profiles[1:]:
        pooled = pooled + p.histogram
    pooled_window = select_window(pooled)
    return CorpusSummary(
        matrices=len(profiles),
        mean_coverage=float(np.mean([p.coverage for p in profiles])),
        mean_entropy=float(np.mean([p.entropy for p in profiles])),
        mean_top3_share=float(np.mean([p.top3_share for p in profiles])),
        contiguity_rate=sum(p.top7_contiguous for p in profiles) / len(profiles),
        pooled_coverage=window_coverage(pooled, pooled_window),
        pooled_entropy=shannon_entropy(pooled),
    )


def profiles_table_rows(profiles: List[MatrixProfile]) -> List[dict]:
    """Flat per-matrix rows for CSV emission"""
    rows = []
    for p in profiles:
        row = {
            'name': p.name, 'elements': p.elements, 'base_exp': p.window.base_exp,
            'coverage': p.coverage, 'top3_share': p.top3_share,
            'top7_contiguous': p.top7_contiguous, 'entropy_bits': p.entropy,
            'entropy_bound_ratio': p.entropy_bound,
        }
        row.update({f'r{n}': v for n, v in sorted(p.topk_coverage.items())})
        rows.append(row)
    return rows

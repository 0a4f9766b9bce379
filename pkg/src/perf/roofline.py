"""
Compute-intensity and roofline model
CI is FLOPs per byte of global-memory traffic for Y = W X with
W in R^{MxK}, X in R^{KxN}, BF16 operands:

    dense       MNK / (MK + KN + MN)
    decoupled   2MNK / (MK (2/CR + 4) + 2 (KN + MN))
    fused       2MNK / (MK (2/CR) + 2 (KN + MN))

The "+4" in the decoupled form is the decompressed weight written once and
read once at 2 bytes each.
"""

from dataclasses import dataclass
from typing import Iterable

import pandas as pd

from core.errors import ModelParameterError


@dataclass(frozen=True)
class GemmShape:
    M: int
    N: int
    K: int

    def __post_init__(self):
        if min(self.M, self.N, self.K) < 1:
            raise ModelParameterError(f"GEMM dims must be positive, got {self.M}x{self.N}x{self.K}")


@dataclass(frozen=True)
class CompressionProfile:
    CR: float

    def __post_init__(self):
        if not self.CR > 0:
            raise ModelParameterError(f"compression ratio must be positive, got {self.CR}")


@dataclass(frozen=True)
class HardwareProfile:
    peak_flops: float
    mem_bandwidth: float

    def __post_init__(self):
        if not (self.peak_flops > 0 and self.mem_bandwidth > 0):
            raise ModelParameterError("peak FLOP/s and memory bandwidth must be positive")

    @property
    def ridge_point(self) -> float:
        """CI where the memory and compute ceilings meet"""
        return self.peak_flops / self.mem_bandwidth


def ci_gemm(s: GemmShape) -> float:
    return s.M * s.N * s.K / (s.M * s.K + s.K * s.N + s.M * s.N)


def ci_decoupled(s: GemmShape, p: CompressionProfile) -> float:
    return 2 * s.M * s.N * s.K / (s.M * s.K * (2 / p.CR + 4) + 2 * (s.K * s.N + s.M * s.N))


def ci_fused(s: GemmShape, p: CompressionProfile) -> float:
    return 2 * s.M * s.N * s.K / (s.M * s.K * (2 / p.CR) + 2 * (s.K * s.N + s.M * s.N))


def roofline_attainable(ci: float, hw: HardwareProfile) -> float:
    return min(hw.peak_flops, ci * hw.mem_bandwidth)


def predicted_speedup(s: GemmShape, p: CompressionProfile, hw: HardwareProfile) -> float:
    """Fused over dense attainable throughput"""
    return roofline_attainable(ci_fused(s, p), hw) / roofline_attainable(ci_gemm(s), hw)


def degradation_report(M: int, K: int, n_list: Iterable[int], CR: float) -> pd.DataFrame:
    """One row per N: the three CIs, decoupled degradation % and fused gain %"""
    profile = CompressionProfile(CR)
    rows = []
    for n in n_list:
        shape = GemmShape(M, n, K)
        base = ci_gemm(shape)
        decoupled = ci_decoupled(shape, profile)
        fused = ci_fused(shape, profile)
        rows.append({
            'N': n,
            'ci_gemm': base,
            'ci_decoupled': decoupled,
            'ci_fused': fused,
            'degradation_pct': 100.0 * (1 - decoupled / base),
            'fused_gain_pct': 100.0 * (fused / base - 1),
        })
    return pd.DataFrame(rows, columns=['N', 'ci_gemm', 'ci_decoupled', 'ci_fused',
                                       'degradation_pct', 'fused_gain_pct'])


def speedup_report(M: int, K: int, n_list: Iterable[int], CR: float, hw: HardwareProfile) -> pd.DataFrame:
    """Predicted fused speedup per N on a given hardware profile"""
    profile = CompressionProfile(CR)
    rows = []
    for n in n_list:
        shape = GemmShape(M, n, K)
        rows.append({
            'N': n,
            'attainable_gemm': roofline_attainable(ci_gemm(shape), hw),
            'attainable_fused': roofline_attainable(ci_fused(shape, profile), hw),
            'predicted_speedup': predicted_speedup(shape, profile, hw),
            'memory_bound': ci_gemm(shape) < hw.ridge_point,
        })
    return pd.DataFrame(rows)

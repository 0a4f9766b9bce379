"""
Round-trip verification
compress -> serialize -> deserialize -> reference decoder and warp decoder,
compared bitwise against the input and against each other.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np

from analysis.exponent_stats import ExponentWindow, compute_histogram, coverage_ratio_topk
from codec.compressor import WeightMatrix, compress
from codec.reference_decoder import decompress_reference
from codec.warp_decoder import decompress_warp
from tbeformat.compressed_matrix import CompressedMatrix
from tbeformat.container import deserialize, serialize

logger = logging.getLogger(__name__)


@dataclass
class RoundTripReport:
    success: bool
    rows: int
    cols: int
    first_mismatch: Optional[Tuple[int, int]]
    decoders_agree: bool
    container_bytes: int
    compression_ratio: float
    bits_per_element: float
    r3: float
    window_coverage: float
    base_exp: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out['first_mismatch'] = list(self.first_mismatch) if self.first_mismatch else None
        return dict(sorted(out.items()))


def first_mismatch(expected: np.ndarray, actual: np.ndarray) -> Optional[Tuple[int, int]]:
    if expected.shape != actual.shape:
        return (0, 0)
    diff = np.argwhere(expected != actual)
    if diff.size == 0:
        return None
    return int(diff[0][0]), int(diff[0][1])


def verify_roundtrip(weights, window: Optional[ExponentWindow] = None,
                     workers: Optional[int] = None) -> RoundTripReport:
    w = weights if isinstance(weights, WeightMatrix) else WeightMatrix.from_array(weights)
    compressed = compress(w, window=window, workers=workers)
    blob = serialize(compressed)
    loaded = deserialize(blob)

    reference = decompress_reference(loaded).data
    warp = decompress_warp(loaded)
    mismatch = first_mismatch(w.data, reference)
    decoders_agree = first_mismatch(reference, warp) is None

    report = RoundTripReport(
        success=mismatch is None and decoders_agree and loaded == compressed,
        rows=w.rows,
        cols=w.cols,
        first_mismatch=mismatch,
        decoders_agree=decoders_agree,
        container_bytes=len(blob),
        compression_ratio=loaded.compression_ratio(),
        bits_per_element=loaded.bits_per_element(),
        r3=coverage_ratio_topk(compute_histogram(w.data), 3),
        window_coverage=loaded.measured_coverage(),
        base_exp=loaded.base_exp,
    )
    if not report.success:
        logger.warning("round trip failed for %dx%d: mismatch at %s, decoders agree=%s",
                       w.rows, w.cols, mismatch, decoders_agree)
    return report


def verify_container(m: CompressedMatrix) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Both decoders over an already-loaded container; (agree, first disagreement)"""
    reference = decompress_reference(m).data
    warp = decompress_warp(m)
    mismatch = first_mismatch(reference, warp)
    return mismatch is None, mismatch

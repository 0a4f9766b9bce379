"""
Offline compressor
Phase I profiles the exponent histogram and picks the seven-exponent window;
Phase II encodes every BlockTile independently (3-bit codewords split over
three bit-planes, sign+mantissa bytes to H, full words to L) and merges the
blocks in canonical order.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from analysis.exponent_stats import ExponentWindow, compute_histogram, select_window
from core.bf16 import as_words, exponent_array, pack_sm_array
from core.config import Config
from core.errors import EmptyInputError, ShapeMismatchError
from tbeformat.compressed_matrix import CompressedMatrix, align_up, pad_word_for
from tbeformat.tiling import padded_extent, to_canonical
from utils.batch_processor import BatchProcessor, log_progress

logger = logging.getLogger(__name__)

POSITION_SHIFTS = np.arange(Config.FRAG_ELEMENTS, dtype=np.uint64)


@dataclass(frozen=True)
class WeightMatrix:
    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        data = as_words(self.data)
        if data.size != self.rows * self.cols:
            raise ShapeMismatchError(f"{data.size} words for a {self.rows}x{self.cols} matrix")
        object.__setattr__(self, 'data', data.reshape(self.rows, self.cols))

    @classmethod
    def from_array(cls, array) -> 'WeightMatrix':
        array = as_words(array)
        if array.ndim == 1:
            array = array.reshape(1, -1)
        if array.ndim != 2:
            raise ShapeMismatchError(f"weight matrix must be 2-D, got shape {array.shape}")
        return cls(array.shape[0], array.shape[1], array)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass
class BlockEncoding:
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    h: np.ndarray
    l: np.ndarray  # noqa: E741


def encode_block(block: np.ndarray, window: ExponentWindow) -> BlockEncoding:
    """Encode one BlockTile given as (64 frags, 64 positions) in canonical order"""
    exponents = exponent_array(block)
    in_window = (exponents >= window.low) & (exponents <= window.high)
    codes = np.where(in_window, exponents - window.base_exp, 0).astype(np.uint64)

    planes = [
        np.bitwise_or.reduce(((codes >> np.uint64(bit)) & np.uint64(1)) << POSITION_SHIFTS, axis=1)
        for bit in range(Config.CODEWORD_BITS)
    ]

    h = pack_sm_array(block[in_window])
    l_words = block[~in_window]
    h = np.concatenate([h, np.zeros(align_up(h.size) - h.size, dtype=np.uint8)])
    l_words = np.concatenate([l_words, np.zeros(align_up(2 * l_words.size) // 2 - l_words.size, dtype=np.uint16)])
    return BlockEncoding(planes[0], planes[1], planes[2], h, l_words)


def _merge(encodings: List[BlockEncoding]):
    offsets = np.zeros((len(encodings), 2), dtype=np.uint64)
    h_pos = l_pos = 0
    for i, enc in enumerate(encodings):
        offsets[i] = (h_pos, 2 * l_pos)
        h_pos += enc.h.size
        l_pos += enc.l.size
    return (
        np.concatenate([e.b1 for e in encodings]),
        np.concatenate([e.b2 for e in encodings]),
        np.concatenate([e.b3 for e in encodings]),
        np.concatenate([e.h for e in encodings]),
        np.concatenate([e.l for e in encodings]),
        offsets,
    )


def compress(weights, window: Optional[ExponentWindow] = None, workers: Optional[int] = None) -> CompressedMatrix:
    """
    Compress a BF16 weight matrix into TCA-TBE

    Args:
        weights: WeightMatrix or 2-D array of uint16 bit patterns
        window: Exponent window to use; selected from the matrix when None
        workers: Worker threads for BlockTile encoding (defaults to Config.WORKERS)

    Returns:
        CompressedMatrix, byte-identical for any worker count
    """
    w = weights if isinstance(weights, WeightMatrix) else WeightMatrix.from_array(weights)
    if w.rows < 1 or w.cols < 1:
        raise EmptyInputError(f"cannot compress a {w.rows}x{w.cols} matrix")

    if window is None:
        window = select_window(compute_histogram(w.data))
    pad_word = pad_word_for(window.base_exp)

    padded_rows, padded_cols = padded_extent(w.rows), padded_extent(w.cols)
    padded = np.full((padded_rows, padded_cols), pad_word, dtype=np.uint16)
    padded[:w.rows, :w.cols] = w.data
    blocks = to_canonical(padded)

    processor = BatchProcessor(max_workers=workers or Config.WORKERS)
    processor.set_progress_callback(log_progress)
    encodings = processor.map_ordered(lambda block: encode_block(block, window), list(blocks),
                                      operation_name="Encoding BlockTiles")
    b1, b2, b3, h, l_words, offsets = _merge(encodings)

    logger.debug("compressed %dx%d: window [%d, %d], H %d bytes, L %d words",
                 w.rows, w.cols, window.low, window.high, h.size, l_words.size)
    return CompressedMatrix(
        logical_rows=w.rows, logical_cols=w.cols,
        padded_rows=padded_rows, padded_cols=padded_cols,
        base_exp=window.base_exp, pad_word=pad_word,
        b1=b1, b2=b2, b3=b3, h=h, l=l_words, offsets=offsets,
    )

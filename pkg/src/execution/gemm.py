"""
Dense, fused and decoupled GEMM paths
All three accumulate Y = W X in FP32 in one canonical order: for every output
element, k ascending (K walked in 64-wide BlockTile columns), each step a
rounded FP32 product followed by a rounded FP32 add. With that order fixed,
the three paths agree bitwise.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from codec.compressor import WeightMatrix
from codec.reference_decoder import decompress_reference
from codec.warp_decoder import FragTileCode, decode_fragment_warp
from core.bf16 import as_words, widen
from core.config import Config
from core.errors import ShapeMismatchError
from execution.traffic import BF16_BYTES, GemmTrafficCounter, WorkingSet
from tbeformat.compressed_matrix import CompressedMatrix
from tbeformat.tiling import BT, FRAGS_PER_TCT, FT, fragment_origin
from utils.batch_processor import BatchProcessor, log_progress

logger = logging.getLogger(__name__)

# (row, col) of each FragTile inside a BlockTile, canonical order
FRAG_ORIGINS = [fragment_origin(0, 0, *divmod(i, FRAGS_PER_TCT)) for i in range(Config.FRAGS_PER_BLOCK)]


@dataclass(frozen=True)
class ActivationMatrix:
    k_dim: int
    n_dim: int
    data: np.ndarray

    def __post_init__(self):
        data = as_words(self.data)
        if data.size != self.k_dim * self.n_dim:
            raise ShapeMismatchError(f"{data.size} words for a {self.k_dim}x{self.n_dim} activation")
        object.__setattr__(self, 'data', data.reshape(self.k_dim, self.n_dim))

    @classmethod
    def from_array(cls, array) -> 'ActivationMatrix':
        array = as_words(array)
        if array.ndim != 2:
            raise ShapeMismatchError(f"activation must be 2-D, got shape {array.shape}")
        return cls(array.shape[0], array.shape[1], array)


@dataclass(frozen=True)
class OutputMatrix:
    m_dim: int
    n_dim: int
    data: np.ndarray

    def bitwise_equal(self, other: 'OutputMatrix') -> bool:
        return (self.data.shape == other.data.shape
                and np.array_equal(self.data.view(np.uint32), other.data.view(np.uint32)))


def _bands(rows: int):
    return [(start, min(start + BT, rows)) for start in range(0, rows, BT)]


def dense_gemm_ref(w: WeightMatrix, x: ActivationMatrix, workers: Optional[int] = None,
                   counter: Optional[GemmTrafficCounter] = None) -> OutputMatrix:
    """Reference FP32 GEMM over an uncompressed weight matrix"""
    if w.cols != x.k_dim:
        raise ShapeMismatchError(f"W is {w.rows}x{w.cols} but X has {x.k_dim} rows")
    wf = widen(w.data)
    xf = widen(x.data)
    k_dim = w.cols

    def band(bounds):
        start, end = bounds
        y = np.zeros((end - start, x.n_dim), dtype=np.float32)
        for k_block in range(0, k_dim, BT):
            for k in range(k_block, min(k_block + BT, k_dim)):
                y += wf[start:end, k:k + 1] * xf[k:k + 1, :]
        return y

    processor = BatchProcessor(max_workers=workers or Config.WORKERS)
    processor.set_progress_callback(log_progress)
    out = np.concatenate(processor.map_ordered(band, _bands(w.rows), "Dense GEMM bands"), axis=0)
    if counter is not None:
        counter.add(decompressed_bytes_read=BF16_BYTES * w.rows * k_dim,
                    activation_bytes_read=BF16_BYTES * k_dim * x.n_dim,
                    output_bytes_model=BF16_BYTES * w.rows * x.n_dim,
                    flops=2 * w.rows * k_dim * x.n_dim)
    return OutputMatrix(w.rows, x.n_dim, out)


def fused_gemm(cm: CompressedMatrix, x: ActivationMatrix, workers: Optional[int] = None,
               counter: Optional[GemmTrafficCounter] = None) -> OutputMatrix:
    """
    Load-compressed, compute-decompressed GEMM

    Decodes one FragTile at a time with the warp decoder, feeds its eight
    K-columns into the band accumulator, and drops it. Padded weight rows are
    never emitted and padded K columns contribute nothing.
    """
    if cm.logical_cols != x.k_dim:
        raise ShapeMismatchError(f"W is {cm.logical_rows}x{cm.logical_cols} but X has {x.k_dim} rows")
    counter = counter if counter is not None else GemmTrafficCounter()
    xf = widen(x.data)
    m_dim, k_dim = cm.logical_rows, cm.logical_cols

    def band(bounds):
        start, end = bounds
        block_row = start // BT
        rows = end - start
        y = np.zeros((rows, x.n_dim), dtype=np.float32)
        working_set = WorkingSet(counter)
        decoded = 0
        for block_col in range(cm.blocks_per_row):
            block = block_row * cm.blocks_per_row + block_col
            h_seg, l_seg = cm.block_segments(block)
            h_starts, l_starts = cm.fragment_starts(block)
            for within, (r0, c0) in enumerate(FRAG_ORIGINS):
                k0 = block_col * BT + c0
                if r0 >= rows or k0 >= k_dim:
                    continue
                fragment = block * Config.FRAGS_PER_BLOCK + within
                code = FragTileCode(int(cm.b1[fragment]), int(cm.b2[fragment]), int(cm.b3[fragment]))
                words = decode_fragment_warp(code, h_seg, l_seg, int(h_starts[within]),
                                             int(l_starts[within]), cm.base_exp).words
                working_set.acquire(words.size)
                tile = widen(words).reshape(FT, FT)
                r1 = min(r0 + FT, rows)
                for kk in range(min(FT, k_dim - k0)):
                    k = k0 + kk
                    y[r0:r1] += tile[:r1 - r0, kk:kk + 1] * xf[k:k + 1, :]
                working_set.release(words.size)
                decoded += 1
        counter.add(fragments_decoded=decoded)
        return y

    processor = BatchProcessor(max_workers=workers or Config.WORKERS)
    processor.set_progress_callback(log_progress)
    out = np.concatenate(processor.map_ordered(band, _bands(m_dim), "Fused GEMM bands"), axis=0)
    counter.add(compressed_bytes_read=cm.payload_bits() // 8,
                activation_bytes_read=BF16_BYTES * k_dim * x.n_dim,
                output_bytes_model=BF16_BYTES * m_dim * x.n_dim,
                flops=2 * m_dim * k_dim * x.n_dim)
    logger.debug("fused GEMM %dx%dx%d, peak decoded working set %d",
                 m_dim, k_dim, x.n_dim, counter.peak_decoded_elements)
    return OutputMatrix(m_dim, x.n_dim, out)


def decoupled_pipeline(cm: CompressedMatrix, x: ActivationMatrix, workers: Optional[int] = None,
                       counter: Optional[GemmTrafficCounter] = None) -> OutputMatrix:
    """Decompress the whole matrix to memory, then run the dense GEMM"""
    if cm.logical_cols != x.k_dim:
        raise ShapeMismatchError(f"W is {cm.logical_rows}x{cm.logical_cols} but X has {x.k_dim} rows")
    w = decompress_reference(cm)
    if counter is not None:
        counter.add(compressed_bytes_read=cm.payload_bits() // 8,
                    decompressed_bytes_written=BF16_BYTES * cm.padded_rows * cm.padded_cols)
        counter.observe_working_set(cm.padded_rows * cm.padded_cols)
    return dense_gemm_ref(w, x, workers=workers, counter=counter)

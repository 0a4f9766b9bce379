"""
Sequential reference decoder
Walks BlockTiles in canonical order; within a block, set bits of the spatial
mask consume H entries in order and clear bits consume L entries in order.
"""

import logging

import numpy as np

from codec.compressor import POSITION_SHIFTS, WeightMatrix
from core.bf16 import assemble_from_sm_array
from core.config import Config
from core.errors import CorruptionError
from tbeformat.compressed_matrix import CompressedMatrix
from tbeformat.tiling import from_canonical

logger = logging.getLogger(__name__)

ONE = np.uint64(1)


def _plane_bits(words: np.ndarray) -> np.ndarray:
    return ((words[:, None] >> POSITION_SHIFTS) & ONE).astype(np.uint16)


def decode_block_reference(m: CompressedMatrix, block: int) -> np.ndarray:
    """Decode one BlockTile to (64 frags, 64 positions) words"""
    per_block = Config.FRAGS_PER_BLOCK
    frags = slice(block * per_block, (block + 1) * per_block)
    codes = _plane_bits(m.b1[frags]) | (_plane_bits(m.b2[frags]) << 1) | (_plane_bits(m.b3[frags]) << 2)
    high_path = codes != 0

    h_seg, l_seg = m.block_segments(block)
    n_h = int(high_path.sum())
    n_l = high_path.size - n_h
    if n_h > h_seg.size or n_l > l_seg.size:
        raise CorruptionError(
            f"block {block}: needs {n_h} H / {n_l} L entries, segments hold {h_seg.size} / {l_seg.size}")

    out = np.empty(codes.shape, dtype=np.uint16)
    out[high_path] = assemble_from_sm_array(h_seg[:n_h], m.base_exp + codes[high_path].astype(np.int32))
    out[~high_path] = l_seg[:n_l]
    return out


def decompress_blocks(m: CompressedMatrix) -> np.ndarray:
    """All BlockTiles decoded, canonical layout (blocks, 64, 64)"""
    return np.stack([decode_block_reference(m, b) for b in range(m.n_blocktiles)])


def decompress_padded(m: CompressedMatrix) -> np.ndarray:
    return from_canonical(decompress_blocks(m), m.padded_rows, m.padded_cols)


def decompress_reference(m: CompressedMatrix) -> WeightMatrix:
    """Exact reconstruction at the logical shape"""
    padded = decompress_padded(m)
    logger.debug("reference decode of %dx%d", m.logical_rows, m.logical_cols)
    return WeightMatrix.from_array(padded[:m.logical_rows, :m.logical_cols])


def decode_fragment_reference(m: CompressedMatrix, fragment: int) -> np.ndarray:
    """64 words of one FragTile, by sequential consumption within its block"""
    block, within = divmod(fragment, Config.FRAGS_PER_BLOCK)
    return decode_block_reference(m, block)[within]

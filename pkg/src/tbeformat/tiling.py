"""
Three-level tiling of a padded weight matrix

    BlockTile 64x64  ->  4x4 TensorCoreTiles (row-major)
    TensorCoreTile 16x16  ->  2x2 FragTiles (column-major)
    FragTile 8x8  ->  64 positions, pos = row * 8 + col

BlockTiles are ordered row-major over the matrix. The nesting
(block, tensor-core tile, frag tile, pos) is the canonical order shared by
bit-planes, buffers and offsets.
"""

from typing import NamedTuple, Tuple

import numpy as np

from core.config import Config
from core.errors import CoordinateError

BT = Config.BLOCK_TILE
TT = Config.TENSOR_CORE_TILE
FT = Config.FRAG_TILE
TCT_SIDE = Config.TCTS_PER_BLOCK_SIDE
FRAG_SIDE = Config.FRAGS_PER_TCT_SIDE
FRAGS_PER_TCT = FRAG_SIDE * FRAG_SIDE


class TileCoordinates(NamedTuple):
    block_row: int
    block_col: int
    tct_index: int
    frag_index: int
    pos: int


def padded_extent(n: int) -> int:
    """Next multiple of the BlockTile side"""
    return -(-n // BT) * BT


def _check_dims(padded_rows: int, padded_cols: int):
    if padded_rows <= 0 or padded_cols <= 0 or padded_rows % BT or padded_cols % BT:
        raise CoordinateError(f"padded dims must be positive multiples of {BT}, got {padded_rows}x{padded_cols}")


def coords_of(r: int, c: int, padded_rows: int, padded_cols: int) -> TileCoordinates:
    _check_dims(padded_rows, padded_cols)
    if not (0 <= r < padded_rows and 0 <= c < padded_cols):
        raise CoordinateError(f"({r}, {c}) outside {padded_rows}x{padded_cols}")
    rr, cc = r % BT, c % BT
    tct_index = (rr // TT) * TCT_SIDE + cc // TT
    frag_index = ((cc % TT) // FT) * FRAG_SIDE + (rr % TT) // FT
    pos = (rr % FT) * FT + cc % FT
    return TileCoordinates(r // BT, c // BT, tct_index, frag_index, pos)


def fragment_origin(block_row: int, block_col: int, tct_index: int, frag_index: int) -> Tuple[int, int]:
    """Top-left matrix index of a FragTile"""
    if not 0 <= tct_index < TCT_SIDE * TCT_SIDE:
        raise CoordinateError(f"tct index {tct_index} out of range")
    if not 0 <= frag_index < FRAGS_PER_TCT:
        raise CoordinateError(f"frag index {frag_index} out of range")
    tct_r, tct_c = divmod(tct_index, TCT_SIDE)
    frag_c, frag_r = divmod(frag_index, FRAG_SIDE)
    return (block_row * BT + tct_r * TT + frag_r * FT,
            block_col * BT + tct_c * TT + frag_c * FT)


def index_of(t: TileCoordinates, padded_rows: int, padded_cols: int) -> Tuple[int, int]:
    _check_dims(padded_rows, padded_cols)
    if not (0 <= t.block_row < padded_rows // BT and 0 <= t.block_col < padded_cols // BT):
        raise CoordinateError(f"block ({t.block_row}, {t.block_col}) outside the BlockTile grid")
    if not 0 <= t.pos < FT * FT:
        raise CoordinateError(f"pos {t.pos} out of range")
    r0, c0 = fragment_origin(t.block_row, t.block_col, t.tct_index, t.frag_index)
    return r0 + t.pos // FT, c0 + t.pos % FT


def fragment_number(t: TileCoordinates, padded_cols: int) -> int:
    """Global index of the FragTile holding t in canonical order"""
    block = t.block_row * (padded_cols // BT) + t.block_col
    return block * Config.FRAGS_PER_BLOCK + t.tct_index * FRAGS_PER_TCT + t.frag_index


def fragment_location(fragment: int, padded_cols: int) -> Tuple[int, int, int, int]:
    """Inverse of fragment_number: (block_row, block_col, tct_index, frag_index)"""
    block, within = divmod(fragment, Config.FRAGS_PER_BLOCK)
    block_row, block_col = divmod(block, padded_cols // BT)
    tct_index, frag_index = divmod(within, FRAGS_PER_TCT)
    return block_row, block_col, tct_index, frag_index


def to_canonical(padded: np.ndarray) -> np.ndarray:
    """(R, C) matrix -> (blocks, 64 frags, 64 positions) in canonical order"""
    rows, cols = padded.shape
    _check_dims(rows, cols)
    grid = padded.reshape(rows // BT, TCT_SIDE, FRAG_SIDE, FT, cols // BT, TCT_SIDE, FRAG_SIDE, FT)
    # axes: block_r, tct_r, frag_r, r, block_c, tct_c, frag_c, c
    ordered = grid.transpose(0, 4, 1, 5, 6, 2, 3, 7)
    return np.ascontiguousarray(ordered).reshape(-1, Config.FRAGS_PER_BLOCK, FT * FT)


def from_canonical(blocks: np.ndarray, padded_rows: int, padded_cols: int) -> np.ndarray:
    """Inverse of to_canonical"""
    _check_dims(padded_rows, padded_cols)
    grid = blocks.reshape(padded_rows // BT, padded_cols // BT, TCT_SIDE, TCT_SIDE,
                          FRAG_SIDE, FRAG_SIDE, FT, FT)
    # axes: block_r, block_c, tct_r, tct_c, frag_c, frag_r, r, c
    ordered = grid.transpose(0, 2, 5, 6, 1, 3, 4, 7)
    return np.ascontiguousarray(ordered).reshape(padded_rows, padded_cols)

"""
Lockstep warp decoder
Simulates 32 SIMT lanes decoding one 8x8 FragTile. Lane l owns positions
p = 2l and p = 2l + 1. Every lane runs the same instruction sequence: the
H index (popcount of mask bits below p) and the L index (p minus that count)
are both computed, and the mask bit selects which buffer word is used.
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from core.bf16 import assemble_fields, unpack_sm
from core.config import Config
from core.errors import CoordinateError, CorruptionError
from tbeformat.compressed_matrix import CompressedMatrix
from tbeformat.tiling import BT, FRAGS_PER_TCT, fragment_location, from_canonical

logger = logging.getLogger(__name__)

WARP = Config.WARP_SIZE
ELEMENTS_PER_LANE = Config.FRAG_ELEMENTS // WARP
LANES = np.arange(WARP, dtype=np.uint64)
ONE = np.uint64(1)

# Per-element instructions issued by every lane
SHARED_OPS = (
    'position', 'prefix_mask', 'popcount_h', 'index_l', 'mask_bit',
    'codeword', 'exponent', 'assemble', 'select',
)
# Predicated arms: a lane issues the H arm when its mask bit is set, else the L arm
H_ARM = ('load_h',)
L_ARM = ('load_l',)


def ops_per_element() -> int:
    return len(SHARED_OPS) + max(len(H_ARM), len(L_ARM))


class FragTileCode(NamedTuple):
    b1: int
    b2: int
    b3: int

    @property
    def spatial_mask(self) -> int:
        return self.b1 | self.b2 | self.b3

    def codeword(self, p: int) -> int:
        return ((self.b3 >> p) & 1) << 2 | ((self.b2 >> p) & 1) << 1 | ((self.b1 >> p) & 1)


@dataclass
class LaneState:
    lane_id: int
    k: int
    p: int
    mask_bit: int
    idx_h: int
    idx_l: int
    codeword: int
    exponent: Optional[int]
    word: int


@dataclass
class FragmentContext:
    """Everything a warp needs to decode one FragTile"""
    code: FragTileCode
    h_seg: np.ndarray
    l_seg: np.ndarray
    frag_h_start: int
    frag_l_start: int
    base_exp: int


@dataclass
class WarpResult:
    words: np.ndarray
    lane_ops: np.ndarray
    h_loads: np.ndarray
    trace: List[LaneState] = field(default_factory=list)


def fragment_context(m: CompressedMatrix, fragment: int) -> FragmentContext:
    if not 0 <= fragment < m.n_fragtiles:
        raise CoordinateError(f"fragment {fragment} outside [0, {m.n_fragtiles})")
    block, within = divmod(fragment, Config.FRAGS_PER_BLOCK)
    h_seg, l_seg = m.block_segments(block)
    h_starts, l_starts = m.fragment_starts(block)
    code = FragTileCode(int(m.b1[fragment]), int(m.b2[fragment]), int(m.b3[fragment]))
    return FragmentContext(code, h_seg, l_seg, int(h_starts[within]), int(l_starts[within]), m.base_exp)


def fragment_for(m: CompressedMatrix, block_row: int, block_col: int, tct_index: int, frag_index: int) -> int:
    if not (0 <= block_row < m.padded_rows // BT and 0 <= block_col < m.blocks_per_row):
        raise CoordinateError(f"block ({block_row}, {block_col}) outside the BlockTile grid")
    fragment = ((block_row * m.blocks_per_row + block_col) * Config.FRAGS_PER_BLOCK
                + tct_index * FRAGS_PER_TCT + frag_index)
    if fragment_location(fragment, m.padded_cols) != (block_row, block_col, tct_index, frag_index):
        raise CoordinateError(f"tct {tct_index} / frag {frag_index} out of range")
    return fragment


def decode_lane(frag: FragTileCode, h_seg, l_seg, frag_h_start: int, frag_l_start: int,
                base_exp: int, lane: int) -> Tuple[int, int]:
    """Scalar decode of the two elements owned by one lane"""
    return tuple(state.word for state in lane_states(frag, h_seg, l_seg, frag_h_start, frag_l_start, base_exp, lane))


def lane_states(frag: FragTileCode, h_seg, l_seg, frag_h_start: int, frag_l_start: int,
                base_exp: int, lane: int) -> List[LaneState]:
    if not 0 <= lane < WARP:
        raise CoordinateError(f"lane {lane} outside [0, {WARP})")
    m = frag.spatial_mask
    states = []
    for k in range(ELEMENTS_PER_LANE):
        p = ELEMENTS_PER_LANE * lane + k
        mask = (1 << p) - 1
        idx_h = bin(m & mask).count('1')
        idx_l = p - idx_h
        bit = (m >> p) & 1
        c = frag.codeword(p)
        e = base_exp + c
        if bit:
            addr = frag_h_start + idx_h
            if addr >= len(h_seg):
                raise CorruptionError(f"lane {lane}: H read at {addr} past segment end {len(h_seg)}")
            sign, mantissa = unpack_sm(int(h_seg[addr]))
            word = assemble_fields(sign, e, mantissa)
        else:
            addr = frag_l_start + idx_l
            if addr >= len(l_seg):
                raise CorruptionError(f"lane {lane}: L read at {addr} past segment end {len(l_seg)}")
            word = int(l_seg[addr])
        states.append(LaneState(lane, k, p, bit, idx_h, idx_l, c, e if bit else None, word))
    return states


def decode_fragment_warp(frag: FragTileCode, h_seg, l_seg, frag_h_start: int, frag_l_start: int,
                         base_exp: int, trace: bool = False) -> WarpResult:
    """
    Decode all 64 elements with 32 lanes in lockstep

    Each shared instruction is applied to the whole lane vector at once and
    the two load arms run under the mask bit as a predicate. lane_ops counts
    what each lane actually issued; unequal counts mean the lanes diverged.
    """
    b1, b2, b3 = (np.uint64(frag.b1), np.uint64(frag.b2), np.uint64(frag.b3))
    m = b1 | b2 | b3
    h_seg = np.asarray(h_seg, dtype=np.uint8)
    l_seg = np.asarray(l_seg, dtype=np.uint16)
    lane_ops = np.zeros(WARP, dtype=np.int64)
    h_loads = np.zeros(WARP, dtype=np.int64)
    words = np.empty(Config.FRAG_ELEMENTS, dtype=np.uint16)
    states: List[LaneState] = []

    for k in range(ELEMENTS_PER_LANE):
        p = np.uint64(ELEMENTS_PER_LANE) * LANES + np.uint64(k)
        mask = (ONE << p) - ONE
        idx_h = np.bitwise_count(m & mask).astype(np.int64)
        idx_l = p.astype(np.int64) - idx_h
        bit = ((m >> p) & ONE).astype(bool)
        c = (((b1 >> p) & ONE) | (((b2 >> p) & ONE) << ONE) | (((b3 >> p) & ONE) << np.uint64(2))).astype(np.int64)
        e = base_exp + c

        h_addr = frag_h_start + idx_h
        l_addr = frag_l_start + idx_l
        if np.any(bit & (h_addr >= h_seg.size)) or np.any(~bit & (l_addr >= l_seg.size)):
            raise CorruptionError("warp read past the end of a buffer segment")
        packed = np.zeros(WARP, dtype=np.uint16)
        packed[bit] = h_seg[h_addr[bit]]
        full = np.zeros(WARP, dtype=np.uint16)
        full[~bit] = l_seg[l_addr[~bit]]

        assembled = ((packed & 0x80) << 8) | ((e.astype(np.uint16) & 0xFF) << 7) | (packed & 0x7F)
        selected = np.where(bit, assembled, full).astype(np.uint16)
        lane_ops += len(SHARED_OPS)
        lane_ops[bit] += len(H_ARM)
        lane_ops[~bit] += len(L_ARM)
        h_loads += bit
        words[p.astype(np.int64)] = selected

        if trace:
            for lane in range(WARP):
                states.append(LaneState(
                    lane, k, int(p[lane]), int(bit[lane]), int(idx_h[lane]), int(idx_l[lane]),
                    int(c[lane]), int(e[lane]) if bit[lane] else None, int(selected[lane]),
                ))

    if np.any(lane_ops != lane_ops[0]):
        raise AssertionError("lanes diverged: unequal instruction counts")
    states.sort(key=lambda s: s.p)
    return WarpResult(words, lane_ops, h_loads, states)


def decode_fragment_from_matrix(m: CompressedMatrix, fragment: int, trace: bool = False) -> WarpResult:
    ctx = fragment_context(m, fragment)
    return decode_fragment_warp(ctx.code, ctx.h_seg, ctx.l_seg, ctx.frag_h_start, ctx.frag_l_start,
                                ctx.base_exp, trace=trace)


def decode_block_warp(m: CompressedMatrix, block: int) -> np.ndarray:
    """All 64 FragTiles of a block via the warp decoder, (64, 64) canonical"""
    per_block = Config.FRAGS_PER_BLOCK
    h_seg, l_seg = m.block_segments(block)
    h_starts, l_starts = m.fragment_starts(block)
    out = np.empty((per_block, Config.FRAG_ELEMENTS), dtype=np.uint16)
    for within in range(per_block):
        fragment = block * per_block + within
        code = FragTileCode(int(m.b1[fragment]), int(m.b2[fragment]), int(m.b3[fragment]))
        out[within] = decode_fragment_warp(code, h_seg, l_seg, int(h_starts[within]),
                                           int(l_starts[within]), m.base_exp).words
    return out


def decompress_warp(m: CompressedMatrix) -> np.ndarray:
    """Whole matrix through the warp decoder, logical shape"""
    blocks = np.stack([decode_block_warp(m, b) for b in range(m.n_blocktiles)])
    return from_canonical(blocks, m.padded_rows, m.padded_cols)[:m.logical_rows, :m.logical_cols]

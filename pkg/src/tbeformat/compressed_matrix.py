"""
In-memory TCA-TBE representation
Three bit-planes per FragTile, the PackedSignMantissa (H) and FullValue (L)
buffers segmented per BlockTile, and the per-BlockTile offset pairs.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.bf16 import assemble_fields
from core.config import Config
from core.errors import (
    HeaderInvariantError, NonCanonicalEncodingError, OffsetInvariantError, PaddingError,
    PopcountMismatchError,
)
from tbeformat.tiling import BT, FT, to_canonical

logger = logging.getLogger(__name__)

ALIGN = Config.SEGMENT_ALIGN_BYTES
FRAG_BITS = Config.FRAG_ELEMENTS
OFFSET_PAIR_BITS = 2 * 64


def align_up(n: int, alignment: int = ALIGN) -> int:
    return -(-n // alignment) * alignment


def pad_word_for(base_exp: int) -> int:
    """In-window padding value: +2^(low - 127), zero mantissa"""
    return assemble_fields(0, base_exp + 1, 0)


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    if out is array:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class CompressedMatrix:
    logical_rows: int
    logical_cols: int
    padded_rows: int
    padded_cols: int
    base_exp: int
    pad_word: int
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    h: np.ndarray
    l: np.ndarray  # noqa: E741
    offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'b1', _frozen(self.b1, np.uint64))
        object.__setattr__(self, 'b2', _frozen(self.b2, np.uint64))
        object.__setattr__(self, 'b3', _frozen(self.b3, np.uint64))
        object.__setattr__(self, 'h', _frozen(self.h, np.uint8))
        object.__setattr__(self, 'l', _frozen(self.l, np.uint16))
        object.__setattr__(self, 'offsets', _frozen(np.reshape(self.offsets, (-1, 2)), np.uint64))

    # Geometry

    @property
    def n_fragtiles(self) -> int:
        return (self.padded_rows // FT) * (self.padded_cols // FT)

    @property
    def n_blocktiles(self) -> int:
        return (self.padded_rows // BT) * (self.padded_cols // BT)

    @property
    def blocks_per_row(self) -> int:
        return self.padded_cols // BT

    @property
    def logical_elements(self) -> int:
        return self.logical_rows * self.logical_cols

    def spatial_masks(self) -> np.ndarray:
        """M = b1 | b2 | b3 per FragTile"""
        return self.b1 | self.b2 | self.b3

    def fragment_popcounts(self) -> np.ndarray:
        return np.bitwise_count(self.spatial_masks()).astype(np.int64)

    # Segments

    def block_h_range(self, block: int) -> Tuple[int, int]:
        start = int(self.offsets[block, 0])
        end = int(self.offsets[block + 1, 0]) if block + 1 < self.n_blocktiles else self.h.size
        return start, end

    def block_l_range(self, block: int) -> Tuple[int, int]:
        """Word range of a block's L segment"""
        start = int(self.offsets[block, 1]) // 2
        end = int(self.offsets[block + 1, 1]) // 2 if block + 1 < self.n_blocktiles else self.l.size
        return start, end

    def block_segments(self, block: int) -> Tuple[np.ndarray, np.ndarray]:
        hs, he = self.block_h_range(block)
        ls, le = self.block_l_range(block)
        return self.h[hs:he], self.l[ls:le]

    def fragment_starts(self, block: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-FragTile read starts inside a block's H and L segments

        Recomputed by an exclusive prefix scan of popcounts over the block's
        fragments in canonical order: H advances by popcount(M), L by
        64 - popcount(M).
        """
        per_block = Config.FRAGS_PER_BLOCK
        counts = self.fragment_popcounts()[block * per_block:(block + 1) * per_block]
        h_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        l_starts = np.concatenate([[0], np.cumsum(FRAG_BITS - counts)[:-1]])
        return h_starts.astype(np.int64), l_starts.astype(np.int64)

    # Size accounting

    def payload_bits(self, include_offsets: bool = True) -> int:
        """Bit-planes + H + L (+ offsets), alignment padding included, header excluded"""
        bits = 3 * 64 * self.n_fragtiles + 8 * self.h.size + 16 * self.l.size
        if include_offsets:
            bits += OFFSET_PAIR_BITS * self.n_blocktiles
        return bits

    def bits_per_element(self, include_offsets: bool = True) -> float:
        return self.payload_bits(include_offsets) / self.logical_elements

    def compression_ratio(self, include_offsets: bool = True) -> float:
        return 16 * self.logical_elements / self.payload_bits(include_offsets)

    def measured_coverage(self) -> float:
        """Share of logical elements on the high-frequency path (padding excluded)"""
        padding = self.padded_rows * self.padded_cols - self.logical_elements
        in_window = int(self.fragment_popcounts().sum()) - padding
        return in_window / self.logical_elements

    # Validation

    def validate(self):
        """Check every structural invariant; raises a ContainerFormatError subclass"""
        self._validate_header()
        self._validate_offsets()
        self._validate_segments()
        self._validate_padding_elements()
        return self

    def _validate_header(self):
        if self.logical_rows < 1 or self.logical_cols < 1:
            raise HeaderInvariantError("logical dims must be positive")
        for logical, padded, axis in ((self.logical_rows, self.padded_rows, 'rows'),
                                      (self.logical_cols, self.padded_cols, 'cols')):
            if padded % BT or padded < logical or padded - logical >= BT:
                raise HeaderInvariantError(f"padded {axis} {padded} is not the 64-multiple above {logical}")
        if not -1 <= self.base_exp <= 255 - Config.WINDOW_WIDTH:
            raise HeaderInvariantError(f"base_exp {self.base_exp} outside [-1, 248]")
        if self.pad_word != pad_word_for(self.base_exp):
            raise HeaderInvariantError(f"pad word 0x{self.pad_word:04X} is not the in-window padding value")
        for name in ('b1', 'b2', 'b3'):
            if getattr(self, name).size != self.n_fragtiles:
                raise HeaderInvariantError(
                    f"{name} holds {getattr(self, name).size} words, expected {self.n_fragtiles}")
        if self.offsets.shape[0] != self.n_blocktiles:
            raise HeaderInvariantError(f"{self.offsets.shape[0]} offset pairs for {self.n_blocktiles} BlockTiles")

    def _validate_offsets(self):
        h_starts = self.offsets[:, 0].astype(np.int64)
        l_starts = self.offsets[:, 1].astype(np.int64)
        if h_starts[0] != 0 or l_starts[0] != 0:
            raise OffsetInvariantError("first BlockTile must start at offset 0")
        if np.any(h_starts % ALIGN) or np.any(l_starts % ALIGN):
            raise OffsetInvariantError("offsets must be 16-byte aligned")
        if np.any(np.diff(h_starts) < 0) or np.any(np.diff(l_starts) < 0):
            raise OffsetInvariantError("offsets must be non-decreasing")
        if h_starts[-1] > self.h.size or l_starts[-1] > 2 * self.l.size:
            raise OffsetInvariantError("offset points past the end of its buffer")

    def _validate_segments(self):
        counts = self.fragment_popcounts().reshape(self.n_blocktiles, Config.FRAGS_PER_BLOCK).sum(axis=1)
        for block in range(self.n_blocktiles):
            n_h = int(counts[block])
            n_l = Config.BLOCK_ELEMENTS - n_h
            hs, he = self.block_h_range(block)
            ls, le = self.block_l_range(block)
            if he - hs != align_up(n_h):
                raise PopcountMismatchError(
                    f"block {block}: bit-planes mark {n_h} H entries, segment holds {he - hs} bytes")
            if 2 * (le - ls) != align_up(2 * n_l):
                raise PopcountMismatchError(
                    f"block {block}: bit-planes mark {n_l} L entries, segment holds {le - ls} words")
            if np.any(self.h[hs + n_h:he]) or np.any(self.l[ls + n_l:le]):
                raise PaddingError(f"block {block}: alignment padding is not zero")
            codewords = ((self.l[ls:ls + n_l] >> 7) & 0xFF).astype(np.int64) - self.base_exp
            if np.any((codewords >= 1) & (codewords <= Config.WINDOW_WIDTH)):
                raise NonCanonicalEncodingError(f"block {block}: fallback word with an in-window exponent")

    def _validate_padding_elements(self):
        """Every element outside the logical matrix must decode to pad_word"""
        if self.padded_rows == self.logical_rows and self.padded_cols == self.logical_cols:
            return
        outside = np.ones((self.padded_rows, self.padded_cols), dtype=bool)
        outside[:self.logical_rows, :self.logical_cols] = False
        outside = to_canonical(outside)
        shifts = np.arange(FRAG_BITS, dtype=np.uint64)
        per_block = Config.FRAGS_PER_BLOCK
        for block in np.flatnonzero(outside.any(axis=(1, 2))):
            frags = slice(block * per_block, (block + 1) * per_block)
            planes = [((p[frags, None] >> shifts) & np.uint64(1)).astype(np.int64)
                      for p in (self.b1, self.b2, self.b3)]
            codeword = planes[0] | planes[1] << 1 | planes[2] << 2
            in_window = (codeword > 0).reshape(-1)
            hs, _ = self.block_h_range(block)
            h_index = hs + np.cumsum(in_window) - 1
            pad = outside[block].reshape(-1)
            # pad_word is codeword 1 with a zero sign/mantissa byte
            if np.any(codeword.reshape(-1)[pad] != 1) or np.any(self.h[h_index[pad]]):
                raise PaddingError(f"block {block}: a padding element is not the pad word")

    # Equality

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedMatrix):
            return NotImplemented
        scalars = ('logical_rows', 'logical_cols', 'padded_rows', 'padded_cols', 'base_exp', 'pad_word')
        arrays = ('b1', 'b2', 'b3', 'h', 'l', 'offsets')
        return (all(getattr(self, s) == getattr(other, s) for s in scalars)
                and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays))

    __hash__ = None

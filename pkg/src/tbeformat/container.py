"""
ZTBE v1 container
Little-endian byte layout:

    magic "ZTBE" | version u16 | flags u16 |
    logical_rows u32 | logical_cols u32 | padded_rows u32 | padded_cols u32 |
    base_exp i16 | pad_word u16 |
    n_fragtiles u64 | h_len_bytes u64 | l_len_words u64 | n_blocktiles u64 |
    B1 | B2 | B3 (u64 each) | offsets (u64 h_start, u64 l_start) | H (u8) | L (u16)
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from core.config import Config
from core.errors import (
    BadMagicError, HeaderInvariantError, TrailingDataError, TruncatedContainerError,
    VersionMismatchError,
)
from tbeformat.compressed_matrix import CompressedMatrix
from tbeformat.tiling import BT, FT

logger = logging.getLogger(__name__)

HEADER = struct.Struct('<4sHHIIIIhHQQQQ')
FLAGS = 0


def serialize(m: CompressedMatrix) -> bytes:
    header = HEADER.pack(
        Config.MAGIC, Config.VERSION, FLAGS,
        m.logical_rows, m.logical_cols, m.padded_rows, m.padded_cols,
        m.base_exp, m.pad_word,
        m.n_fragtiles, m.h.size, m.l.size, m.n_blocktiles,
    )
    parts = [
        header,
        m.b1.astype('<u8').tobytes(),
        m.b2.astype('<u8').tobytes(),
        m.b3.astype('<u8').tobytes(),
        m.offsets.astype('<u8').tobytes(),
        m.h.tobytes(),
        m.l.astype('<u2').tobytes(),
    ]
    return b''.join(parts)


def deserialize(data: bytes) -> CompressedMatrix:
    """Parse and validate a container; every failure is a ContainerFormatError"""
    data = bytes(data)
    if len(data) < len(Config.MAGIC):
        raise TruncatedContainerError(f"stream of {len(data)} bytes is shorter than the magic")
    if data[:4] != Config.MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) < HEADER.size:
        raise TruncatedContainerError(f"stream of {len(data)} bytes is shorter than the {HEADER.size}-byte header")

    (_, version, flags, logical_rows, logical_cols, padded_rows, padded_cols,
     base_exp, pad_word, n_frag, h_len, l_len, n_block) = HEADER.unpack_from(data)
    if version != Config.VERSION:
        raise VersionMismatchError(f"container version {version}, expected {Config.VERSION}")
    if flags != FLAGS:
        raise VersionMismatchError(f"unsupported flags 0x{flags:04X}")

    if padded_rows % BT or padded_cols % BT or padded_rows == 0 or padded_cols == 0:
        raise HeaderInvariantError(f"padded dims {padded_rows}x{padded_cols} are not positive multiples of {BT}")
    if n_frag != (padded_rows // FT) * (padded_cols // FT):
        raise HeaderInvariantError(f"{n_frag} FragTiles declared for {padded_rows}x{padded_cols}")
    if n_block != (padded_rows // BT) * (padded_cols // BT):
        raise HeaderInvariantError(f"{n_block} BlockTiles declared for {padded_rows}x{padded_cols}")
    if h_len > n_frag * 64 + n_block * 16 or l_len > n_frag * 64 + n_block * 8:
        raise HeaderInvariantError("buffer lengths exceed what the tile count allows")

    expected = HEADER.size + 3 * 8 * n_frag + 16 * n_block + h_len + 2 * l_len
    if len(data) < expected:
        raise TruncatedContainerError(f"stream holds {len(data)} bytes, header declares {expected}")
    if len(data) > expected:
        raise TrailingDataError(f"{len(data) - expected} bytes after the declared payload")

    cursor = HEADER.size

    def take(count: int, dtype: str) -> np.ndarray:
        nonlocal cursor
        width = np.dtype(dtype).itemsize
        array = np.frombuffer(data, dtype=dtype, count=count, offset=cursor)
        cursor += count * width
        return array

    b1 = take(n_frag, '<u8')
    b2 = take(n_frag, '<u8')
    b3 = take(n_frag, '<u8')
    offsets = take(2 * n_block, '<u8').reshape(n_block, 2)
    h = take(h_len, '<u1')
    l_words = take(l_len, '<u2')

    matrix = CompressedMatrix(
        logical_rows=logical_rows, logical_cols=logical_cols,
        padded_rows=padded_rows, padded_cols=padded_cols,
        base_exp=base_exp, pad_word=pad_word,
        b1=b1, b2=b2, b3=b3, h=h, l=l_words, offsets=offsets,
    )
    matrix.validate()
    logger.debug("loaded %dx%d container, %d BlockTiles", logical_rows, logical_cols, n_block)
    return matrix


def save(m: CompressedMatrix, path: Union[str, Path]) -> int:
    payload = serialize(m)
    Path(path).write_bytes(payload)
    return len(payload)


def load(path: Union[str, Path]) -> CompressedMatrix:
    return deserialize(Path(path).read_bytes())

"""
Raw tensor files: rows u32, cols u32, then rows*cols little-endian 16-bit words
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from core.errors import MalformedHeaderError

RAW_HEADER = struct.Struct('<II')


def read_raw(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < RAW_HEADER.size:
        raise MalformedHeaderError(f"{path}: {len(data)} bytes is shorter than the raw header")
    rows, cols = RAW_HEADER.unpack_from(data)
    expected = RAW_HEADER.size + 2 * rows * cols
    if len(data) != expected:
        raise MalformedHeaderError(f"{path}: {rows}x{cols} needs {expected} bytes, file has {len(data)}")
    words = np.frombuffer(data, dtype='<u2', offset=RAW_HEADER.size, count=rows * cols)
    return words.astype(np.uint16).reshape(rows, cols)


def write_raw(path: Union[str, Path], words: np.ndarray) -> int:
    words = np.asarray(words, dtype=np.uint16)
    if words.ndim != 2:
        raise ValueError(f"raw tensors are 2-D, got shape {words.shape}")
    payload = RAW_HEADER.pack(*words.shape) + words.astype('<u2').tobytes()
    Path(path).write_bytes(payload)
    return len(payload)

"""
BFloat16 field manipulation
Bit-exact split/assemble of the 1-8-7 layout and the 8-bit sign+mantissa
packing used by the high-frequency buffer. Scalar helpers work on Python ints,
the *_array variants on numpy uint16 arrays. No value is ever special-cased:
NaN, Inf, subnormals and -0.0 round-trip through field decomposition alone.
"""

from typing import NamedTuple, Tuple

import numpy as np

from core.errors import FieldRangeError

SIGN_SHIFT = 15
EXPONENT_SHIFT = 7
EXPONENT_MASK = 0xFF
MANTISSA_MASK = 0x7F
EXPONENT_BIAS = 127


class FieldTriple(NamedTuple):
    sign: int
    exponent: int
    mantissa: int


def split_fields(word: int) -> FieldTriple:
    """Split a 16-bit pattern into (sign, exponent, mantissa)"""
    word &= 0xFFFF
    return FieldTriple(word >> SIGN_SHIFT, (word >> EXPONENT_SHIFT) & EXPONENT_MASK, word & MANTISSA_MASK)


def assemble_fields(sign: int, exponent: int, mantissa: int) -> int:
    """Inverse of split_fields; raises FieldRangeError on out-of-range fields"""
    if sign not in (0, 1):
        raise FieldRangeError(f"sign must be 0 or 1, got {sign}")
    if not 0 <= exponent <= EXPONENT_MASK:
        raise FieldRangeError(f"exponent must be in [0, 255], got {exponent}")
    if not 0 <= mantissa <= MANTISSA_MASK:
        raise FieldRangeError(f"mantissa must be in [0, 127], got {mantissa}")
    return (sign << SIGN_SHIFT) | (exponent << EXPONENT_SHIFT) | mantissa


def pack_sm(sign: int, mantissa: int) -> int:
    """Pack sign (bit 7) and mantissa (bits 6..0) into one byte"""
    if sign not in (0, 1):
        raise FieldRangeError(f"sign must be 0 or 1, got {sign}")
    if not 0 <= mantissa <= MANTISSA_MASK:
        raise FieldRangeError(f"mantissa must be in [0, 127], got {mantissa}")
    return (sign << 7) | mantissa


def unpack_sm(byte: int) -> Tuple[int, int]:
    return (byte >> 7) & 1, byte & MANTISSA_MASK


# Vectorized forms

def as_words(values) -> np.ndarray:
    return np.asarray(values, dtype=np.uint16)


def exponent_array(words: np.ndarray) -> np.ndarray:
    return ((words >> EXPONENT_SHIFT) & EXPONENT_MASK).astype(np.int16)


def split_fields_array(words: np.ndarray):
    words = as_words(words)
    return (
        (words >> SIGN_SHIFT).astype(np.uint8),
        ((words >> EXPONENT_SHIFT) & EXPONENT_MASK).astype(np.uint8),
        (words & MANTISSA_MASK).astype(np.uint8),
    )


def pack_sm_array(words: np.ndarray) -> np.ndarray:
    """PackedSM bytes for every word (exponent dropped)"""
    words = as_words(words)
    return (((words >> 8) & 0x80) | (words & MANTISSA_MASK)).astype(np.uint8)


def assemble_from_sm_array(packed: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """MakeBF16 over arrays: PackedSM bytes plus exponents in [0, 255]"""
    packed = np.asarray(packed, dtype=np.uint16)
    exponents = np.asarray(exponents, dtype=np.uint16)
    return (((packed & 0x80) << 8) | (exponents << EXPONENT_SHIFT) | (packed & MANTISSA_MASK)).astype(np.uint16)


def widen(words: np.ndarray) -> np.ndarray:
    """Exact BF16 -> FP32 widening (bit pattern shifted into the high half)"""
    return (as_words(words).astype(np.uint32) << 16).view(np.float32)


def from_float32(values: np.ndarray) -> np.ndarray:
    """Round-to-nearest-even FP32 -> BF16; NaNs keep a quiet payload"""
    bits = np.ascontiguousarray(values, dtype=np.float32).view(np.uint32)
    rounding = ((bits >> 16) & 1) + np.uint32(0x7FFF)
    rounded = ((bits + rounding) >> 16).astype(np.uint16)
    is_nan = np.isnan(values)
    if np.any(is_nan):
        rounded = np.where(is_nan, ((bits >> 16) | 0x0040).astype(np.uint16), rounded)
    return rounded.astype(np.uint16)


def sample_gaussian_bf16(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """Zero-mean Gaussian weights quantized to BF16 bit patterns"""
    return from_float32(rng.normal(0.0, sigma, size=shape).astype(np.float32))

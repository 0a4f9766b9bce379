"""
Error hierarchy for ZipTBE
Every failure raised by the library derives from ZtbeError so the CLI can
report it with a single handler.
"""


class ZtbeError(Exception):
    """Base class for all ZipTBE errors"""


class FieldRangeError(ZtbeError, ValueError):
    """A BF16 field (sign, exponent, mantissa) is out of range"""


class EmptyInputError(ZtbeError, ValueError):
    """An operation needs at least one element"""


class ModelParameterError(ZtbeError, ValueError):
    """A model or analysis parameter is outside its domain"""


class ShapeMismatchError(ZtbeError, ValueError):
    """Operand shapes are incompatible"""


class CoordinateError(ZtbeError, IndexError):
    """A tile coordinate or matrix index is out of range"""


class ConfigError(ZtbeError, ValueError):
    """Configuration value is invalid"""


class ContainerFormatError(ZtbeError):
    """Base class for ZTBE container parse failures"""


class BadMagicError(ContainerFormatError):
    """Stream does not start with the ZTBE magic"""


class VersionMismatchError(ContainerFormatError):
    """Container version or flags are not supported"""


class TruncatedContainerError(ContainerFormatError):
    """Stream ended before the declared payload"""


class TrailingDataError(ContainerFormatError):
    """Stream carries bytes after the declared payload"""


class HeaderInvariantError(ContainerFormatError):
    """Header fields contradict each other"""


class OffsetInvariantError(ContainerFormatError):
    """BlockTile offsets are misaligned, decreasing or out of bounds"""


class PopcountMismatchError(ContainerFormatError):
    """Bit-plane popcounts disagree with the buffer segment sizes"""


class PaddingError(ContainerFormatError):
    """Alignment padding is non-zero, or a padding element is not the pad word"""


class NonCanonicalEncodingError(ContainerFormatError):
    """A fallback word carries an exponent inside the window"""


class CorruptionError(ZtbeError):
    """A decoder would read outside its buffer segment"""


class IngestError(ZtbeError):
    """Input tensor file cannot be ingested"""


class DtypeError(IngestError):
    """Tensor dtype is not BF16"""


class MalformedHeaderError(IngestError):
    """Tensor file header is malformed"""


class TensorNotFoundError(IngestError):
    """Requested tensor name is absent"""

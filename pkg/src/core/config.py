import logging

from config.env_config import get_env_config
from core.errors import ConfigError

logger = logging.getLogger(__name__)


class Config:
    """Format constants plus runtime settings resolved from the environment"""

    # Tiling hierarchy
    FRAG_TILE = 8
    TENSOR_CORE_TILE = 16
    BLOCK_TILE = 64
    FRAG_ELEMENTS = FRAG_TILE * FRAG_TILE
    BLOCK_ELEMENTS = BLOCK_TILE * BLOCK_TILE
    FRAGS_PER_TCT_SIDE = TENSOR_CORE_TILE // FRAG_TILE
    TCTS_PER_BLOCK_SIDE = BLOCK_TILE // TENSOR_CORE_TILE
    FRAGS_PER_BLOCK = (BLOCK_TILE // FRAG_TILE) ** 2

    # Encoding
    CODEWORD_BITS = 3
    WINDOW_WIDTH = (1 << CODEWORD_BITS) - 1
    SEGMENT_ALIGN_BYTES = 16
    WARP_SIZE = 32

    # Container
    MAGIC = b'ZTBE'
    VERSION = 1

    # Runtime settings (filled by load())
    WORKERS = 1
    THRESHOLD_N = 128
    LOG_LEVEL = 'WARNING'
    PEAK_FLOPS = 362e12
    MEM_BANDWIDTH = 864e9

    @classmethod
    def load(cls, env_config=None):
        """Resolve runtime settings from the environment configuration"""
        env_config = env_config or get_env_config()
        try:
            settings = env_config.get_codec_config()
        except ValueError as e:
            raise ConfigError(str(e))

        cls.WORKERS = settings['workers']
        cls.THRESHOLD_N = settings['threshold_n']
        cls.LOG_LEVEL = settings['log_level']
        cls.PEAK_FLOPS = settings['peak_flops']
        cls.MEM_BANDWIDTH = settings['mem_bandwidth']
        cls.validate()
        logger.debug("configuration loaded: workers=%d threshold_n=%d", cls.WORKERS, cls.THRESHOLD_N)
        return cls

    @classmethod
    def validate(cls):
        """Validate runtime settings"""
        if cls.WORKERS < 1:
            raise ConfigError(f"worker count must be >= 1, got {cls.WORKERS}")
        if cls.THRESHOLD_N < 1:
            raise ConfigError(f"stage threshold must be >= 1, got {cls.THRESHOLD_N}")
        if cls.PEAK_FLOPS <= 0 or cls.MEM_BANDWIDTH <= 0:
            raise ConfigError("peak FLOP/s and memory bandwidth must be positive")
        return True

    @classmethod
    def print_status(cls):
        """Print configuration status for debugging"""
        print("=== ZipTBE Configuration ===")
        print(f"Workers: {cls.WORKERS}")
        print(f"Stage threshold (tokens): {cls.THRESHOLD_N}")
        print(f"Log level: {cls.LOG_LEVEL}")
        print(f"Peak FLOP/s: {cls.PEAK_FLOPS:g}")
        print(f"Memory bandwidth (B/s): {cls.MEM_BANDWIDTH:g}")
        print(f"Tiles: frag {cls.FRAG_TILE}, tensor-core {cls.TENSOR_CORE_TILE}, block {cls.BLOCK_TILE}")
        try:
            cls.validate()
            print("Configuration validation: PASSED")
        except ConfigError as e:
            print(f"Configuration validation: FAILED - {e}")

"""
Environment Configuration Loader for ZipTBE
Loads codec and model settings from an optional .env file and the process environment
"""

import logging
import os
from pathlib import Path
from typing import Optional, Dict, Any

from dotenv import dotenv_values

logger = logging.getLogger(__name__)

# Keys understood by the codec, executor and roofline model
KNOWN_KEYS = {
    'ZTBE_WORKERS': '1',
    'ZTBE_THRESHOLD_N': '128',
    'ZTBE_LOG_LEVEL': 'WARNING',
    'ZTBE_PEAK_FLOPS': '362e12',
    'ZTBE_MEM_BANDWIDTH': '864e9',
}


class EnvironmentConfig:
    """Environment configuration loader"""

    def __init__(self, env_file_path: Optional[str] = None, environ: Optional[Dict[str, str]] = None):
        """
        Initialize environment configuration loader

        Args:
            env_file_path: Optional path to .env file. If None, looks in project root.
            environ: Mapping overlaid on top of the file; defaults to os.environ.
        """
        self.env_file_path = env_file_path or self._find_env_file()
        self.config: Dict[str, str] = {}
        self._load(os.environ if environ is None else environ)

    def _find_env_file(self) -> Optional[str]:
        """Find .env file in project root"""
        project_root = Path(__file__).parent.parent.parent
        env_file = project_root / '.env'
        return str(env_file) if env_file.exists() else None

    def _load(self, environ: Dict[str, str]):
        """Merge .env values with the environment; environment wins"""
        if self.env_file_path:
            if not Path(self.env_file_path).exists():
                raise FileNotFoundError(f"Environment file not found: {self.env_file_path}")
            file_values = dotenv_values(self.env_file_path)
            self.config.update({k: v for k, v in file_values.items() if v is not None})
            logger.debug("loaded %d keys from %s", len(file_values), self.env_file_path)

        for key in KNOWN_KEYS:
            if key in environ:
                self.config[key] = environ[key]

    def get(self, key: str, default: Optional[str] = None) -> Optional[str]:
        """
        Get configuration value

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value, the built-in default for known keys, or default
        """
        if key in self.config:
            return self.config[key]
        if default is None:
            return KNOWN_KEYS.get(key)
        return default

    def get_int(self, key: str) -> int:
        value = self.get(key)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ValueError(f"{key} must be an integer, got {value!r}")

    def get_float(self, key: str) -> float:
        value = self.get(key)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValueError(f"{key} must be a number, got {value!r}")

    def get_codec_config(self) -> Dict[str, Any]:
        """
        Get all runtime settings as a dictionary

        Returns:
            Dictionary with workers, threshold_n, log_level, peak_flops, mem_bandwidth
        """
        return {
            'workers': self.get_int('ZTBE_WORKERS'),
            'threshold_n': self.get_int('ZTBE_THRESHOLD_N'),
            'log_level': self.get('ZTBE_LOG_LEVEL').upper(),
            'peak_flops': self.get_float('ZTBE_PEAK_FLOPS'),
            'mem_bandwidth': self.get_float('ZTBE_MEM_BANDWIDTH'),
        }

    def validate_config(self) -> bool:
        """
        Validate that every known key parses and is in range

        Returns:
            True if valid, False otherwise
        """
        try:
            settings = self.get_codec_config()
        except ValueError as e:
            logger.warning("invalid configuration: %s", e)
            return False

        problems = []
        if settings['workers'] < 1:
            problems.append('ZTBE_WORKERS must be >= 1')
        if settings['threshold_n'] < 1:
            problems.append('ZTBE_THRESHOLD_N must be >= 1')
        if settings['peak_flops'] <= 0 or settings['mem_bandwidth'] <= 0:
            problems.append('roofline ceilings must be positive')
        if settings['log_level'] not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            problems.append(f"unknown ZTBE_LOG_LEVEL {settings['log_level']}")

        for problem in problems:
            logger.warning("invalid configuration: %s", problem)
        return not problems

    def print_config_status(self):
        """Print configuration status for debugging"""
        print("=== Environment Configuration Status ===")
        print(f"Config file: {self.env_file_path or 'none'}")
        for key in KNOWN_KEYS:
            source = 'set' if key in self.config else 'default'
            print(f"  {key}: {self.get(key)} ({source})")
        print(f"\nValidation: {'PASSED' if self.validate_config() else 'FAILED'}")


# Global instance for easy access
_env_config = None


def get_env_config() -> EnvironmentConfig:
    """Get global environment configuration instance"""
    global _env_config
    if _env_config is None:
        _env_config = EnvironmentConfig()
    return _env_config


def reset_env_config():
    """Drop the cached instance so the next access re-reads the environment"""
    global _env_config
    _env_config = None

import os
import sys

import numpy as np
import pytest
import torch
from safetensors.torch import save_file

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from config.env_config import reset_env_config  # noqa: E402
from core.bf16 import sample_gaussian_bf16  # noqa: E402
from core.config import Config  # noqa: E402

# NaN (quiet, signed, payload), +/-Inf, subnormals, signed zeros, max finite
SPECIAL_PATTERNS = np.array(
    [0x7FC0, 0xFFC1, 0x7F81, 0x7F80, 0xFF80, 0x0001, 0x807F, 0x0000, 0x8000, 0x7F7F, 0xFF7F],
    dtype=np.uint16,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch):
    """Each test sees built-in defaults unless it sets ZTBE_* itself"""
    for key in ('ZTBE_WORKERS', 'ZTBE_THRESHOLD_N', 'ZTBE_LOG_LEVEL', 'ZTBE_PEAK_FLOPS', 'ZTBE_MEM_BANDWIDTH'):
        monkeypatch.delenv(key, raising=False)
    saved = {k: getattr(Config, k) for k in ('WORKERS', 'THRESHOLD_N', 'LOG_LEVEL', 'PEAK_FLOPS', 'MEM_BANDWIDTH')}
    reset_env_config()
    yield
    reset_env_config()
    for key, value in saved.items():
        setattr(Config, key, value)


def gaussian_words(rng, shape, sigma=0.02):
    return sample_gaussian_bf16(rng, shape, sigma)


def inject_specials(rng, words, share=0.05):
    """Overwrite a share of entries with special BF16 patterns"""
    out = words.copy()
    mask = rng.random(out.shape) < share
    out[mask] = rng.choice(SPECIAL_PATTERNS, size=int(mask.sum()))
    return out


@pytest.fixture
def gaussian_matrix(rng):
    def make(rows, cols, sigma=0.02, specials=0.0):
        words = gaussian_words(rng, (rows, cols), sigma)
        return inject_specials(rng, words, specials) if specials else words
    return make


def write_safetensors(path, tensors, metadata=None):
    """
    Checkpoint fixture written with safetensors.torch

    uint16 arrays are stored as BF16 bit patterns; torch tensors are stored as they are
    """
    converted = {}
    for name, value in tensors.items():
        if isinstance(value, np.ndarray):
            value = torch.from_numpy(np.ascontiguousarray(value).view(np.int16)).view(torch.bfloat16)
        converted[name] = value.contiguous()
    save_file(converted, str(path), metadata=metadata)
    return path

"""
BF16 access to safetensors checkpoints
Header parsing and bounds checks are done by the safetensors package; tensors
are loaded through its torch framework because numpy has no bfloat16, then
reinterpreted as raw uint16 words. Only BF16 tensors are ingestible.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import torch
from safetensors import SafetensorError, safe_open

from core.errors import DtypeError, MalformedHeaderError, TensorNotFoundError

logger = logging.getLogger(__name__)

BF16 = 'BF16'


class SafetensorsFile:
    """Open checkpoint; use as a context manager or call close()"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        try:
            self._handle = safe_open(str(self.path), framework='pt', device='cpu')
            self._file = self._handle.__enter__()
            self._entries = self._read_entries()
        except SafetensorError as e:
            raise MalformedHeaderError(f"{self.path}: {e}")
        logger.debug("%s: %d tensors", self.path, len(self._entries))

    def _read_entries(self) -> Dict[str, Tuple[str, Tuple[int, ...]]]:
        entries = {}
        for name in self._file.keys():
            view = self._file.get_slice(name)
            entries[name] = (str(view.get_dtype()).upper(), tuple(int(d) for d in view.get_shape()))
        return entries

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def close(self):
        if self._file is not None:
            self._handle.__exit__(None, None, None)
            self._file = None

    def metadata(self) -> Dict[str, str]:
        return dict(self._file.metadata() or {})

    def names(self) -> List[str]:
        return sorted(self._entries)

    def bf16_names(self) -> List[str]:
        return [n for n in self.names() if self._entries[n][0] == BF16]

    def dtype(self, name: str) -> str:
        return self._entry(name)[0]

    def shape(self, name: str) -> Tuple[int, ...]:
        return self._entry(name)[1]

    def _entry(self, name: str) -> Tuple[str, Tuple[int, ...]]:
        if name not in self._entries:
            raise TensorNotFoundError(f"{self.path}: no tensor named {name!r}")
        return self._entries[name]

    def get_tensor(self, name: str) -> np.ndarray:
        """BF16 bit patterns as a 2-D uint16 array; leading dims fold into rows"""
        dtype, shape = self._entry(name)
        if dtype != BF16:
            raise DtypeError(f"{self.path}: tensor {name!r} is {dtype}, only BF16 is supported")
        try:
            tensor = self._file.get_tensor(name)
        except SafetensorError as e:
            raise MalformedHeaderError(f"{self.path}: {name!r}: {e}")
        words = tensor.contiguous().view(torch.int16).numpy().view(np.uint16).reshape(-1)
        if len(shape) == 0:
            return words.reshape(1, 1).copy()
        if len(shape) == 1:
            return words.reshape(1, shape[0]).copy()
        return words.reshape(-1, shape[-1]).copy()


def open_safetensors(path: Union[str, Path]) -> SafetensorsFile:
    return SafetensorsFile(path)

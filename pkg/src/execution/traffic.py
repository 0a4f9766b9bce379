"""
Instrumentation for the GEMM paths
Byte traffic and decoded-weight working set, in the byte accounting the
compute-intensity model uses (BF16 operands at 2 bytes).
"""

import threading
from dataclasses import dataclass, field, fields

from codec.warp_decoder import ops_per_element

BF16_BYTES = 2


@dataclass
class GemmTrafficCounter:
    compressed_bytes_read: int = 0
    decompressed_bytes_written: int = 0
    decompressed_bytes_read: int = 0
    activation_bytes_read: int = 0
    # outputs are FP32 in memory, but the model charges BF16_BYTES per element
    output_bytes_model: int = 0
    fragments_decoded: int = 0
    peak_decoded_elements: int = 0
    flops: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, **amounts):
        with self._lock:
            for name, value in amounts.items():
                setattr(self, name, getattr(self, name) + value)

    def observe_working_set(self, live_elements: int):
        with self._lock:
            self.peak_decoded_elements = max(self.peak_decoded_elements, live_elements)

    def weight_bytes(self) -> int:
        return self.compressed_bytes_read + self.decompressed_bytes_written + self.decompressed_bytes_read

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in sorted(fields(self), key=lambda f: f.name)
                if not f.name.startswith('_')}


class WorkingSet:
    """Tracks decoded weight elements alive at once within one worker"""

    def __init__(self, counter: GemmTrafficCounter):
        self.counter = counter
        self.live = 0

    def acquire(self, elements: int):
        self.live += elements
        self.counter.observe_working_set(self.live)

    def release(self, elements: int):
        self.live -= elements


def decoupled_weight_traffic_model(m: int, k: int, cr: float) -> float:
    """Weight term of the decoupled traffic: MK (2 / CR + 4) bytes"""
    return m * k * (2.0 / cr + 4.0)


def decode_to_gemm_ratio(m: int, n: int, k: int) -> float:
    """Decode instructions per weight element over GEMM FLOPs per weight element"""
    decode_ops = m * k * ops_per_element()
    return decode_ops / (2.0 * m * n * k)


def traffic_vs_model(counter: GemmTrafficCounter, m: int, k: int, cr: float) -> dict:
    """Measured weight-side bytes of a decoupled run next to MK (2 / CR + 4)"""
    model = decoupled_weight_traffic_model(m, k, cr)
    measured = counter.weight_bytes()
    return {'measured_bytes': measured, 'model_bytes': model, 'ratio': measured / model}

"""
Stage-aware dispatch
Small token counts (decode phase) take the fused path; large ones (prefill)
take the decoupled pipeline.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from core.config import Config
from core.errors import ModelParameterError
from execution.gemm import ActivationMatrix, OutputMatrix, decoupled_pipeline, fused_gemm
from execution.traffic import GemmTrafficCounter
from tbeformat.compressed_matrix import CompressedMatrix

logger = logging.getLogger(__name__)


class StageMode(str, Enum):
    FUSED = 'fused'
    DECOUPLED = 'decoupled'


@dataclass(frozen=True)
class StageDecision:
    threshold_n: int = 128
    mode: Optional[StageMode] = None

    def __post_init__(self):
        if self.threshold_n < 1:
            raise ModelParameterError(f"threshold must be a positive token count, got {self.threshold_n}")

    @classmethod
    def from_config(cls) -> 'StageDecision':
        return cls(threshold_n=Config.THRESHOLD_N)


def stage_select(n_tokens: int, decision: StageDecision) -> StageMode:
    """Fused iff n_tokens <= threshold (boundary inclusive)"""
    if n_tokens < 1:
        raise ModelParameterError(f"token count must be positive, got {n_tokens}")
    return StageMode.FUSED if n_tokens <= decision.threshold_n else StageMode.DECOUPLED


def run_stage_aware(cm: CompressedMatrix, x: ActivationMatrix, decision: StageDecision,
                    workers: Optional[int] = None,
                    counter: Optional[GemmTrafficCounter] = None) -> Tuple[StageMode, OutputMatrix]:
    mode = decision.mode or stage_select(x.n_dim, decision)
    logger.debug("N=%d -> %s path", x.n_dim, mode.value)
    if mode is StageMode.FUSED:
        return mode, fused_gemm(cm, x, workers=workers, counter=counter)
    return mode, decoupled_pipeline(cm, x, workers=workers, counter=counter)

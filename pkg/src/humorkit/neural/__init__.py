"""Desk-scale neural stack with reverse-mode differentiation."""

from .autodiff import Tensor  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
from .layers import CrossModalBlock, Gmu, local_attention_mask, sinusoidal_pe  # noqa: F401
from .models import (  # noqa: F401
    GruConfig,
    GruModel,
    VfmmConfig,
    VfmmModel,
    gru_param_count,
    param_count,
    vfmm_param_count,
)
from .training import (  # noqa: F401
    DEFAULT_SEEDS,
    AdamW,
    Clip,
    GruTask,
    TrainConfig,
    TrainResult,
    VfmmTask,
    train,
)

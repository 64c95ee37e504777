"""Context-aware Transformer segmentation head, trained from scratch."""

from .model import (
    ContextSequence,
    HeadConfig,
    HeadModel,
    bce_loss,
    build_context,
    head_backward,
    head_forward,
    init_model,
    param_count,
    param_spec,
    positional_encoding,
)
from .modelfile import (
    ModelFormatError,
    load_model,
    load_model_file,
    save_model,
    save_model_file,
)
from .optim import AdamState, adam_step, plateau_scheduler
from .train import THRESHOLD_GRID, TrainConfig, infer, sweep_threshold, train

__all__ = [
    "AdamState",
    "ContextSequence",
    "HeadConfig",
    "HeadModel",
    "ModelFormatError",
    "THRESHOLD_GRID",
    "TrainConfig",
    "adam_step",
    "bce_loss",
    "build_context",
    "head_backward",
    "head_forward",
    "infer",
    "init_model",
    "load_model",
    "load_model_file",
    "param_count",
    "param_spec",
    "plateau_scheduler",
    "positional_encoding",
    "save_model",
    "save_model_file",
    "sweep_threshold",
    "train",
]

"""Training loop, losses, adaptive weights and ablation variants."""

from .ablation import VARIANTS, GaussianPolicy, ablation_variant, variant_name
from .config import TrainConfig
from .core import (METRIC_KEYS, TrainerState, actor_loss, alpha_loss, alpha_update, beta_gradient,
                   beta_update, init_state, suvpg_gradient, train_step)
from .loop import (CSV_COLUMNS, Checkpoint, EvalResult, TrainingResult, evaluate, load_checkpoint,
                   run_training, save_checkpoint)

__all__ = [
    "CSV_COLUMNS",
    "Checkpoint",
    "EvalResult",
    "GaussianPolicy",
    "METRIC_KEYS",
    "TrainConfig",
    "TrainerState",
    "TrainingResult",
    "VARIANTS",
    "ablation_variant",
    "actor_loss",
    "alpha_loss",
    "alpha_update",
    "beta_gradient",
    "beta_update",
    "evaluate",
    "init_state",
    "load_checkpoint",
    "run_training",
    "save_checkpoint",
    "suvpg_gradient",
    "train_step",
    "variant_name",
]

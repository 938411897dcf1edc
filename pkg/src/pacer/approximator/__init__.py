"""Differentiable function core: tapes, MLPs, Adam, gradient checks, checkpoints."""

from . import tape as ops
from .checkpoint import load_params, save_params
from .gradcheck import GradCheckReport, gradient_check, numeric_gradient, relative_error
from .mlp import MlpSpec, ParamVector, init_layout, init_params, mlp_forward
from .optim import AdamState, adam_step, adam_step_, check_finite
from .tape import Tape, Var, backward

__all__ = [
    "AdamState",
    "GradCheckReport",
    "MlpSpec",
    "ParamVector",
    "Tape",
    "Var",
    "adam_step",
    "adam_step_",
    "backward",
    "check_finite",
    "gradient_check",
    "init_layout",
    "init_params",
    "load_params",
    "mlp_forward",
    "numeric_gradient",
    "ops",
    "relative_error",
    "save_params",
]

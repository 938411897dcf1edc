from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError
from .mlp import ParamVector


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamVector, **kw):
        return cls(np.zeros_like(params.values), np.zeros_like(params.values), **kw)

    def copy(self):
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.beta1, self.beta2, self.eps)


def check_finite(grads: ParamVector) -> None:
    bad = np.flatnonzero(~np.isfinite(grads.values))
    if bad.size:
        raise TrainingError(
            f"non-finite gradient in {grads.name}.{grads.locate(int(bad[0]))}"
        )


def adam_step(params: ParamVector, grads: ParamVector, state: AdamState, lr: float):
    """One bias-corrected Adam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    check_finite(grads)
    g = grads.values
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    values = params.values - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, t, state.beta1, state.beta2, state.eps)
    return params.like(values), new_state


def adam_step_(params: ParamVector, grads: ParamVector, state: AdamState, lr: float) -> None:
    """In-place variant used inside the training loop."""
    new_params, new_state = adam_step(params, grads, state, lr)
    params.values[...] = new_params.values
    state.m, state.v, state.t = new_state.m, new_state.v, new_state.t

"""Sample-based MMD between the policy and a uniform reference policy.

Distances are measured on the unit box: policy actions are taken before the
affine rescale to the environment's action bounds, and reference draws are
uniform on [-1, 1]^d. The Gaussian bandwidth therefore does not depend on the
physical action range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actor import sample_noise
from .approximator import ops


@dataclass(frozen=True)
class MmdKernel:
    bandwidth_sq: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported kernel {self.kind!r}")
        if self.bandwidth_sq <= 0:
            raise ValueError("bandwidth_sq must be positive")

    @classmethod
    def for_action_dim(cls, action_dim: int):
        return cls(float(action_dim))

    def gram(self, x, y):
        """k(x_i, y_j) = exp(-|x_i - y_j|^2 / (2 h^2)) over the last two axes."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        d2 = ((x[..., :, None, :] - y[..., None, :, :]) ** 2).sum(-1)
        return np.exp(-d2 / (2.0 * self.bandwidth_sq))


def _sq_dists(x, y):
    """Pairwise squared distances; ``x`` may be taped, ``y`` may be taped."""
    xx = ops.sum(ops.square(x), axis=-1)
    yy = ops.sum(ops.square(y), axis=-1)
    cross = ops.matmul(x, ops.swapaxes(y, -1, -2))
    n, m = xx.shape[-1], yy.shape[-1]
    lead = xx.shape[:-1]
    d2 = ops.reshape(xx, lead + (n, 1)) + ops.reshape(yy, lead + (1, m)) - 2.0 * cross
    return ops.clamp_min(d2, 0.0)


def _mmd_sq(kernel, x, y):
    scale = -1.0 / (2.0 * kernel.bandwidth_sq)
    kxx = ops.mean(ops.exp(_sq_dists(x, x) * scale), axis=(-2, -1))
    kyy = ops.mean(ops.exp(_sq_dists(y, y) * scale), axis=(-2, -1))
    kxy = ops.mean(ops.exp(_sq_dists(x, y) * scale), axis=(-2, -1))
    return kxx + kyy - 2.0 * kxy


def mmd(kernel: MmdKernel, xs, ys):
    """Biased (V-statistic) MMD estimate between two sample sets.

    Leading batch axes are allowed; the last two axes are (sample, feature).
    The squared estimate is clamped at zero before the square root. Returns
    a float/array, or a variable when ``xs`` or ``ys`` is taped.
    """
    if not isinstance(xs, ops.Var):
        xs = np.asarray(xs, dtype=np.float64)
    if not isinstance(ys, ops.Var):
        ys = np.asarray(ys, dtype=np.float64)
    if xs.shape[-2] == 0 or ys.shape[-2] == 0:
        raise ValueError("mmd needs nonempty sample sets")
    out = ops.sqrt(ops.clamp_min(_mmd_sq(kernel, xs, ys), 0.0))
    if out.tape is not None:
        return out
    return float(out.value) if out.value.ndim == 0 else out.value


def reference_samples(action_dim: int, n: int, rng, batch=None):
    """Uniform draws on the unit box."""
    shape = (n, action_dim) if batch is None else (batch, n, action_dim)
    return rng.uniform(-1.0, 1.0, size=shape)


def policy_mmd(policy, state, kernel: MmdKernel, n_samples: int, rng, tape=None, mode="train"):
    """MMD between ``n_samples`` policy actions at one state and uniform draws."""
    return batch_regularizer(policy, np.asarray(state, dtype=np.float64)[None, :], kernel, n_samples, rng, tape, mode)


def batch_regularizer(policy, states, kernel: MmdKernel, n_samples: int, rng, tape=None, mode="train",
                      reduce=True):
    """Mean over ``states`` of the per-state policy-vs-uniform MMD.

    Policy samples go through the tape so gradients reach the policy
    parameters; the uniform reference carries no gradient. With
    ``reduce=False`` the per-state values are returned instead.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    states = np.asarray(states, dtype=np.float64)
    B = states.shape[0]
    xi = sample_noise(policy, mode, rng, B * n_samples)
    rep = np.repeat(states, n_samples, axis=0)
    x = policy.unit_action(rep, xi, tape)
    x = ops.reshape(x, (B, n_samples, policy.action_dim))
    y = reference_samples(policy.action_dim, n_samples, rng, batch=B)
    per_state = ops.sqrt(ops.clamp_min(_mmd_sq(kernel, x, y), 0.0))
    out = ops.mean(per_state) if reduce else per_state
    return out if out.tape is not None else (float(out.value) if reduce else out.value)


def uniform_self_mmd(action_dim: int, kernel: MmdKernel, n_samples: int, rng, draws: int = 64) -> float:
    """Expected MMD of two independent uniform sample sets of size ``n_samples``."""
    x = reference_samples(action_dim, n_samples, rng, batch=draws)
    y = reference_samples(action_dim, n_samples, rng, batch=draws)
    return float(np.mean(mmd(kernel, x, y)))

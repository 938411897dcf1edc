"""Push-forward policy: noise and state in, bounded action out.

The policy is a deterministic network ``pi(s, xi)`` applied to a noise sample
``xi``. Its action distribution is the image of the noise distribution under
that map, so there is no density to evaluate and none is exposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approximator import MlpSpec, ParamVector, init_params, mlp_forward, ops
from .errors import ConfigurationError

NOISE_STD = {"train": 1.0, "eval": 0.5}


def rescale(unit, low, high):
    """Map values in [-1, 1] affinely onto the box [low, high]."""
    half = 0.5 * (np.asarray(high) - np.asarray(low))
    mid = 0.5 * (np.asarray(high) + np.asarray(low))
    if isinstance(unit, ops.Var):
        return unit * half + mid
    # mid + half * (+-1) can land one ulp outside the box
    return np.clip(mid + half * unit, low, high)


@dataclass
class PushForwardPolicy:
    spec: MlpSpec
    params: ParamVector
    noise_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    train_std: float = NOISE_STD["train"]
    eval_std: float = NOISE_STD["eval"]

    kind = "pushforward"

    @classmethod
    def create(cls, state_dim, action_low, action_high, hidden_dims=(400, 300),
               noise_dim=None, rng=None, name="actor"):
        action_low = np.asarray(action_low, dtype=np.float64)
        action_high = np.asarray(action_high, dtype=np.float64)
        action_dim = action_low.shape[0]
        noise_dim = action_dim if noise_dim is None else int(noise_dim)
        spec = MlpSpec(state_dim + noise_dim, tuple(hidden_dims), action_dim, "relu", "tanh")
        rng = np.random.default_rng() if rng is None else rng
        return cls(spec, init_params(spec, rng, name), noise_dim, action_low, action_high)

    @property
    def state_dim(self):
        return self.spec.input_dim - self.noise_dim

    @property
    def action_dim(self):
        return self.spec.output_dim

    def unit_action(self, state, xi, tape=None):
        """Network output in [-1, 1] before rescaling."""
        return mlp_forward(self.spec, self.params, _concat(state, xi, self.state_dim, self.noise_dim), tape)

    def copy(self):
        return PushForwardPolicy(self.spec, self.params.copy(), self.noise_dim,
                                 self.action_low.copy(), self.action_high.copy(),
                                 self.train_std, self.eval_std)


def _concat(state, xi, state_dim, noise_dim):
    sv = state.value if isinstance(state, ops.Var) else np.asarray(state, dtype=np.float64)
    xv = xi.value if isinstance(xi, ops.Var) else np.asarray(xi, dtype=np.float64)
    if sv.shape[-1] != state_dim:
        raise ConfigurationError(f"state has {sv.shape[-1]} entries, policy expects {state_dim}")
    if xv.shape[-1] != noise_dim:
        raise ConfigurationError(f"noise has {xv.shape[-1]} entries, policy expects {noise_dim}")
    if isinstance(state, ops.Var) or isinstance(xi, ops.Var):
        return ops.concat([state, xi], axis=-1)
    return np.concatenate([sv, xv], axis=-1)


def sample_noise(policy, mode: str, rng: np.random.Generator, n=None) -> np.ndarray:
    """Base-distribution draws: N(0, 1) for training, N(0, 0.5) for evaluation.

    ``n=None`` gives one vector of shape ``(noise_dim,)``; otherwise ``(n, noise_dim)``.
    """
    if mode not in NOISE_STD:
        raise ConfigurationError(f"noise mode must be 'train' or 'eval', got {mode!r}")
    std = policy.train_std if mode == "train" else policy.eval_std
    shape = (policy.noise_dim,) if n is None else (n, policy.noise_dim)
    return rng.normal(0.0, std, size=shape)


def act(policy, state, xi, tape=None):
    """Bounded action(s) for state(s) and noise sample(s); batch axis first."""
    return rescale(policy.unit_action(state, xi, tape), policy.action_low, policy.action_high)


def sample_actions_batch(policy, state, n: int, mode: str, rng, tape=None):
    """``n`` actions for one state from independent noise draws."""
    if n < 1:
        raise ValueError("n must be at least 1")
    state = np.broadcast_to(np.asarray(state, dtype=np.float64), (n, policy.state_dim))
    return act(policy, state, sample_noise(policy, mode, rng, n), tape)

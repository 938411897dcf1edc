"""Ablated variants: Gaussian policy head and alternative exploration schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..actor import NOISE_STD
from ..approximator import MlpSpec, ParamVector, init_params, mlp_forward, ops
from ..errors import ConfigurationError
from .config import POLICY_KINDS, REGULARIZERS, TrainConfig

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0

VARIANTS = {
    ("pushforward", "mmd"): "PACER",
    ("gaussian", "mmd"): "M1P0",
    ("pushforward", "epsilon_greedy"): "M0P1G",
    ("pushforward", "none"): "M0P1",
    ("gaussian", "epsilon_greedy"): "M0P0G",
    ("gaussian", "none"): "M0P0",
}


@dataclass
class GaussianPolicy:
    """State-conditioned diagonal Gaussian, reparameterized and squashed.

    ``unit = tanh(mean(s) + std(s) * xi)`` with ``xi`` from the same base
    noise as the push-forward actor, then rescaled to the action box.
    """

    spec: MlpSpec
    params: ParamVector
    noise_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    train_std: float = NOISE_STD["train"]
    eval_std: float = NOISE_STD["eval"]

    kind = "gaussian"

    @classmethod
    def create(cls, state_dim, action_low, action_high, hidden_dims=(400, 300), rng=None, name="actor"):
        action_low = np.asarray(action_low, dtype=np.float64)
        action_high = np.asarray(action_high, dtype=np.float64)
        ad = action_low.shape[0]
        spec = MlpSpec(state_dim, tuple(hidden_dims), 2 * ad)
        rng = np.random.default_rng() if rng is None else rng
        return cls(spec, init_params(spec, rng, name), ad, action_low, action_high)

    @property
    def state_dim(self):
        return self.spec.input_dim

    @property
    def action_dim(self):
        return self.noise_dim

    def unit_action(self, state, xi, tape=None):
        ad = self.noise_dim
        out = mlp_forward(self.spec, self.params, state, tape)
        if isinstance(out, ops.Var):
            mu, raw = out[..., :ad], out[..., ad:]
            log_std = (ops.tanh(raw) + 1.0) * (0.5 * (LOG_STD_MAX - LOG_STD_MIN)) + LOG_STD_MIN
            return ops.tanh(mu + ops.exp(log_std) * xi)
        mu, raw = out[..., :ad], out[..., ad:]
        log_std = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (np.tanh(raw) + 1.0)
        return np.tanh(mu + np.exp(log_std) * np.asarray(xi))

    def copy(self):
        return GaussianPolicy(self.spec, self.params.copy(), self.noise_dim,
                              self.action_low.copy(), self.action_high.copy(),
                              self.train_std, self.eval_std)


def ablation_variant(config: TrainConfig, policy_kind: str, regularizer: str) -> TrainConfig:
    """Config for one cell of the policy x exploration ablation grid."""
    if policy_kind not in POLICY_KINDS or regularizer not in REGULARIZERS:
        raise ConfigurationError(
            f"unsupported ablation ({policy_kind}, {regularizer}); "
            f"policy in {POLICY_KINDS}, regularizer in {REGULARIZERS}",
            "policy_kind" if policy_kind not in POLICY_KINDS else "regularizer",
        )
    return config.replace(policy_kind=policy_kind, regularizer=regularizer)


def variant_name(config: TrainConfig) -> str:
    return VARIANTS[(config.policy_kind, config.regularizer)]

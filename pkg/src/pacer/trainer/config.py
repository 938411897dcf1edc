from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..errors import ConfigurationError

POLICY_KINDS = ("pushforward", "gaussian")
REGULARIZERS = ("mmd", "none", "epsilon_greedy")


@dataclass
class TrainConfig:
    """Training hyper-parameters.

    Defaults follow the full-scale settings (400-300 networks, 32 quantile
    draws, batch 100, 100 MMD samples). ``gamma=None`` takes the
    environment's own discount. See :mod:`pacer.presets` for desk-scale
    settings that finish in minutes on one core.
    """

    gamma: float | None = 0.99
    batch_size: int = 100
    quantiles: int = 32
    kappa: float = 1.0
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    lr_alpha: float = 1e-3
    n_mmd: int = 100
    mmd_batch: int | None = None
    mmd_bandwidth_sq: float | None = None
    alpha_init: float = 0.5
    alpha_min: float = 0.05
    alpha_max: float = 5.0
    beta_init: float | None = None
    beta_step: float = 0.01
    beta_min: float = 1e-4
    polyak: float = 0.005
    policy_delay: int = 1
    update_every: int = 50
    total_steps: int = 1_000_000
    warmup: int = 10_000
    buffer_size: int = 1_000_000
    actor_hidden: tuple = (400, 300)
    critic_hidden: tuple = (400, 300)
    n_cos: int = 64
    reward_scale: float = 1.0
    normalize_obs: bool = True
    eval_every: int = 5_000
    eval_episodes: int = 10
    checkpoint_every: int = 0
    log_wall_time: bool = True
    seed: int = 0
    utility: str = "identity"
    cvar_level: float = 1.0
    policy_kind: str = "pushforward"
    regularizer: str = "mmd"
    epsilon: float = 0.1

    def __post_init__(self):
        self.actor_hidden = tuple(int(h) for h in self.actor_hidden)
        self.critic_hidden = tuple(int(h) for h in self.critic_hidden)
        self.validate()

    def validate(self):
        if self.gamma is not None and not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError("gamma must lie in [0, 1)", "gamma")
        positive = ("batch_size", "quantiles", "kappa", "lr_actor", "lr_critic", "lr_alpha",
                    "n_mmd", "alpha_init", "alpha_min", "alpha_max", "beta_step", "beta_min",
                    "policy_delay", "update_every", "buffer_size", "n_cos", "reward_scale",
                    "eval_every", "eval_episodes")
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"{key} must be positive", key)
        for key in ("total_steps", "warmup", "checkpoint_every"):
            if getattr(self, key) < 0:
                raise ConfigurationError(f"{key} must be non-negative", key)
        if self.n_mmd < 2:
            raise ConfigurationError("n_mmd must be at least 2", "n_mmd")
        if not self.alpha_min < self.alpha_max:
            raise ConfigurationError("alpha_min must be below alpha_max", "alpha_min")
        if not 0.0 < self.polyak <= 1.0:
            raise ConfigurationError("polyak must lie in (0, 1]", "polyak")
        if self.policy_kind not in POLICY_KINDS:
            raise ConfigurationError(f"policy_kind must be one of {POLICY_KINDS}", "policy_kind")
        if self.regularizer not in REGULARIZERS:
            raise ConfigurationError(f"regularizer must be one of {REGULARIZERS}", "regularizer")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError("epsilon must lie in [0, 1]", "epsilon")
        if not 0.0 < self.cvar_level <= 1.0:
            raise ConfigurationError("cvar_level must lie in (0, 1]", "cvar_level")
        if not self.actor_hidden or not self.critic_hidden:
            raise ConfigurationError("hidden layer lists must be nonempty", "actor_hidden")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d


def config_fields() -> dict:
    return {f.name: f for f in dataclasses.fields(TrainConfig)}

"""Desk-scale training settings that finish in minutes on a single CPU core.

The full-size defaults in :class:`~pacer.trainer.TrainConfig` (400-300
networks, 32 quantiles, batch 100, 100 MMD samples) are too slow for the
pure-numpy autodiff on small machines. These presets shrink the networks
and sample counts and shorten the runs while keeping every mechanism on.
"""

from __future__ import annotations

from .trainer import TrainConfig

COMMON = dict(
    actor_hidden=(64, 64),
    critic_hidden=(64, 64),
    quantiles=8,
    batch_size=64,
    n_mmd=32,
    mmd_batch=16,
    warmup=1000,
    buffer_size=100_000,
    gamma=None,
    eval_episodes=10,
)

PRESETS = {
    "Pendulum": dict(total_steps=20_000, eval_every=2000),
    "BimodalBandit": dict(total_steps=10_000, eval_every=1000),
    "RiskyDrive": dict(total_steps=15_000, eval_every=1500, quantiles=16),
}


def desk_config(env_name: str, **overrides) -> TrainConfig:
    """Desk preset for ``env_name`` with keyword overrides applied last."""
    if env_name not in PRESETS:
        raise KeyError(f"no desk preset for {env_name!r}; have {sorted(PRESETS)}")
    return TrainConfig(**{**COMMON, **PRESETS[env_name], **overrides})

"""Losses and the single gradient step of the actor-critic-encourager loop."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import utility as U
from ..actor import PushForwardPolicy, act, sample_noise
from ..approximator import AdamState, Tape, adam_step_, ops
from ..critic import (QuantileHuberParams, TwinCritics, critic_loss, polyak_update,
                      sample_quantiles, twin_min_values)
from ..encourager import MmdKernel, batch_regularizer, uniform_self_mmd
from ..envs import EnvSpec, ObsNormalizer
from ..errors import TrainingError
from ..replay import Batch
from .ablation import GaussianPolicy
from .config import TrainConfig

LOG_ALPHA_BOUNDS = (math.log(1e-6), math.log(1e6))
METRIC_KEYS = ("critic_loss", "actor_loss", "d_m", "v_psi", "alpha", "beta")


@dataclass
class TrainerState:
    config: TrainConfig
    env_spec: EnvSpec
    actor: object
    critics: TwinCritics
    log_alpha: float
    beta: float
    opt_actor: AdamState
    opt_critic: tuple
    normalizer: ObsNormalizer
    utility: U.UtilityFunction
    kernel: MmdKernel
    rng: np.random.Generator
    gamma: float
    env_steps: int = 0
    grad_steps: int = 0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def alpha_min(self) -> float:
        return self.config.alpha_min

    @property
    def alpha_max(self) -> float:
        return self.config.alpha_max

    @property
    def uses_mmd(self) -> bool:
        return self.config.regularizer == "mmd"

    @property
    def quantile_params(self) -> QuantileHuberParams:
        return QuantileHuberParams(self.config.kappa, self.config.quantiles)


def build_actor(env_spec: EnvSpec, config: TrainConfig, rng):
    if config.policy_kind == "gaussian":
        return GaussianPolicy.create(env_spec.state_dim, env_spec.action_low, env_spec.action_high,
                                     config.actor_hidden, rng=rng)
    return PushForwardPolicy.create(env_spec.state_dim, env_spec.action_low, env_spec.action_high,
                                    config.actor_hidden, rng=rng)


def init_state(env_spec: EnvSpec, config: TrainConfig) -> TrainerState:
    rng = np.random.default_rng(config.seed)
    actor = build_actor(env_spec, config, rng)
    critics = TwinCritics.create(env_spec.state_dim, env_spec.action_dim, config.critic_hidden,
                                 config.n_cos, config.polyak, rng)
    bw = config.mmd_bandwidth_sq or float(env_spec.action_dim)
    kernel = MmdKernel(bw)
    beta = config.beta_init
    if beta is None:
        beta = 0.5 * uniform_self_mmd(env_spec.action_dim, kernel, config.n_mmd, rng)
    gamma = env_spec.gamma_default if config.gamma is None else config.gamma
    return TrainerState(
        config=config,
        env_spec=env_spec,
        actor=actor,
        critics=critics,
        log_alpha=math.log(config.alpha_init),
        beta=max(beta, config.beta_min),
        opt_actor=AdamState.for_params(actor.params),
        opt_critic=tuple(AdamState.for_params(q) for q in critics.online),
        normalizer=ObsNormalizer(env_spec.state_dim),
        utility=U.from_config(config.utility, config.cvar_level),
        kernel=kernel,
        rng=rng,
        gamma=gamma,
    )


def _finite(name, value):
    v = value.value if isinstance(value, ops.Var) else value
    if not np.all(np.isfinite(v)):
        raise TrainingError(f"{name} is not finite")


def actor_loss(state: TrainerState, states, rng, tape=None, alpha=None):
    """Mean over states of ``-V_psi(s, pi(s, xi)) + alpha * d_m(s)``.

    ``V_psi`` uses the twin minimum of the online critics, whose parameters
    are treated as constants. Returns ``(loss, info)`` where ``info`` holds
    the mean value term and the regularizer (NaN when MMD is off).
    """
    states = np.asarray(states, dtype=np.float64)
    B = states.shape[0]
    alpha = state.alpha if alpha is None else alpha
    xi = sample_noise(state.actor, "train", rng, B)
    a = act(state.actor, states, xi, tape)
    taus, tau_hats = sample_quantiles(state.config.quantiles, rng, B)
    z = twin_min_values(state.critics, state.critics.online, states, a, tau_hats)
    v = U.distorted_value(state.utility, taus, z)
    v_mean = ops.mean(v) if isinstance(v, ops.Var) else float(np.mean(v))
    _finite("actor value term", v_mean)
    loss = -v_mean
    d_m = float("nan")
    if state.uses_mmd:
        sub = states if state.config.mmd_batch is None else states[: state.config.mmd_batch]
        d = batch_regularizer(state.actor, sub, state.kernel, state.config.n_mmd, rng, tape)
        _finite("MMD regularizer", d)
        d_m = float(d.value) if isinstance(d, ops.Var) else float(d)
        loss = loss + alpha * d
    v_val = float(v_mean.value) if isinstance(v_mean, ops.Var) else v_mean
    return loss, {"v_psi": v_val, "d_m": d_m}


def suvpg_gradient(state: TrainerState, states, rng):
    """Reverse-mode gradient of :func:`actor_loss` w.r.t. the actor parameters.

    Differentiating ``-Q(s, pi(s, xi; theta))`` through the taped
    composition yields exactly ``grad_theta pi . grad_a Q`` at the sampled
    actions. Returns ``(gradient ParamVector, loss value, info)``.
    """
    tape = Tape()
    for q in state.critics.online + state.critics.target:
        tape.stop(q)
    loss, info = actor_loss(state, states, rng, tape)
    grads = tape.backward(loss)
    return grads[state.actor.params.name], float(loss.value), info


def alpha_loss(state: TrainerState, d_m: float) -> float:
    """``log(alpha) * (beta - d_m)``; its log-alpha gradient is ``beta - d_m``."""
    return state.log_alpha * (state.beta - d_m)


def alpha_update(state: TrainerState, d_m: float) -> float:
    """One gradient-descent step on log alpha, clamped to [1e-6, 1e6]."""
    grad = state.beta - d_m
    la = state.log_alpha - state.config.lr_alpha * grad
    state.log_alpha = float(min(max(la, LOG_ALPHA_BOUNDS[0]), LOG_ALPHA_BOUNDS[1]))
    return state.alpha


def beta_gradient(alpha: float, alpha_min: float, alpha_max: float) -> float:
    """``(sign(alpha_max - alpha) + sign(alpha_min - alpha)) / 2``, taken as 0 on the closed band."""
    if alpha > alpha_max:
        return -1.0
    if alpha < alpha_min:
        return 1.0
    return 0.0


def beta_update(state: TrainerState) -> float:
    """Raise beta while alpha > alpha_max, lower it while alpha < alpha_min."""
    g = beta_gradient(state.alpha, state.alpha_min, state.alpha_max)
    state.beta = float(max(state.config.beta_min, state.beta - state.config.beta_step * g))
    return state.beta


def normalized_batch(state: TrainerState, batch: Batch) -> Batch:
    if not state.config.normalize_obs:
        return batch
    norm = state.normalizer
    return Batch(norm.normalize(batch.state), batch.action, batch.reward,
                 norm.normalize(batch.next_state), batch.done)


def critic_step(state: TrainerState, batch: Batch, rng) -> float:
    tape = Tape()
    loss = critic_loss(state.critics, state.actor, batch, state.quantile_params, state.gamma,
                       state.utility, rng, tape)
    grads = tape.backward(loss)
    for q, opt in zip(state.critics.online, state.opt_critic):
        adam_step_(q, grads[q.name], opt, state.config.lr_critic)
    return float(loss.value)


def train_step(state: TrainerState, buffer, rng=None) -> dict:
    """Critic step, delayed actor step, alpha and beta updates, target update."""
    rng = state.rng if rng is None else rng
    batch = normalized_batch(state, buffer.sample_arrays(state.config.batch_size))
    metrics = dict.fromkeys(METRIC_KEYS, float("nan"))
    metrics["critic_loss"] = critic_step(state, batch, rng)
    state.grad_steps += 1
    if state.grad_steps % state.config.policy_delay == 0:
        grad, loss, info = suvpg_gradient(state, batch.state, rng)
        adam_step_(state.actor.params, grad, state.opt_actor, state.config.lr_actor)
        metrics["actor_loss"] = loss
        metrics.update(info)
        if state.uses_mmd:
            alpha_update(state, info["d_m"])
            beta_update(state)
    polyak_update(state.critics)
    metrics["alpha"] = state.alpha
    metrics["beta"] = state.beta
    return metrics

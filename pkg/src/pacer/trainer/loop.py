"""Environment interaction, evaluation, metrics logging and checkpoints."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import envs as E
from ..actor import PushForwardPolicy, act, sample_noise
from ..approximator import load_params, save_params
from ..critic import IqnSpec, TwinCritics
from ..envs import ObsNormalizer, Transition
from ..errors import CheckpointError, TrainingError
from ..replay import ReplayBuffer
from .ablation import GaussianPolicy
from .config import TrainConfig
from .core import METRIC_KEYS, TrainerState, init_state, train_step

CSV_COLUMNS = ("step", "wall_ms") + METRIC_KEYS + ("eval_return_mean", "eval_return_std")
EVAL_SEED_OFFSET = 1_000_003


@dataclass
class EvalResult:
    returns: list
    overspeed_fraction: float | None = None

    @property
    def mean(self):
        return float(np.mean(self.returns))

    @property
    def std(self):
        return float(np.std(self.returns))

    def summary(self) -> dict:
        out = {"episodes": len(self.returns), "return_mean": self.mean, "return_std": self.std}
        if self.overspeed_fraction is not None:
            out["overspeed_fraction"] = self.overspeed_fraction
        return out


def policy_action(actor, normalizer: ObsNormalizer | None, obs, mode: str, rng):
    s = obs if normalizer is None else normalizer.normalize(obs)
    xi = sample_noise(actor, mode, rng)
    return act(actor, s[None, :], xi[None, :])[0]


def evaluate(actor, env, episodes: int, normalizer: ObsNormalizer | None = None, seed: int = 0) -> EvalResult:
    """Eval-mode episodes with frozen observation statistics.

    Returns undiscounted, unscaled episode returns. For RiskyDrive the
    fraction of steps taken at speed above the limit is reported as well.
    """
    rng = np.random.default_rng(seed)
    returns = []
    over, total = 0, 0
    risky = isinstance(env, E.RiskyDrive)
    for k in range(episodes):
        obs = env.reset(seed=seed + k)
        ret, done = 0.0, False
        while not done:
            if risky:
                over += int(obs[0] > env.limit)
                total += 1
            a = policy_action(actor, normalizer, obs, "eval", rng)
            obs, r, done = env.step(a)
            ret += r
        returns.append(ret)
    return EvalResult(returns, over / total if risky and total else None)


class MetricsWriter:
    """Append-only CSV in the trainer schema."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(CSV_COLUMNS)
        self._last = None

    def write(self, row: dict):
        if self._last is not None and row["step"] <= self._last:
            raise ValueError("metrics rows must have strictly increasing steps")
        self._last = row["step"]
        self._w.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
        self._fh.flush()

    def close(self):
        self._fh.close()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if np.isnan(v) else repr(v)


@dataclass
class TrainingResult:
    state: TrainerState
    history: list = field(default_factory=list)

    @property
    def evals(self):
        return [r for r in self.history if r.get("eval_return_mean") is not None]

    @property
    def final_eval(self):
        ev = self.evals
        return ev[-1]["eval_return_mean"] if ev else None


def _collect_action(state: TrainerState, obs, n: int):
    cfg = state.config
    spec = state.env_spec
    if n < cfg.warmup or (cfg.regularizer == "epsilon_greedy" and state.rng.random() < cfg.epsilon):
        return state.rng.uniform(spec.action_low, spec.action_high)
    norm = state.normalizer if cfg.normalize_obs else None
    return policy_action(state.actor, norm, obs, "train", state.rng)


def run_training(env, config: TrainConfig, out_dir=None, state: TrainerState | None = None,
                 progress=None, metrics_name: str = "metrics.csv") -> TrainingResult:
    """Interleave environment steps with batches of gradient steps.

    Every ``update_every`` transitions (once ``warmup`` transitions and a
    full batch are available) ``update_every`` gradient steps run, keeping
    one gradient step per transition. One metrics row is logged per update
    trigger with that trigger's mean losses; evaluation results are added to
    the row of the step they ran at.
    """
    if state is None:
        state = init_state(env.spec, config)
    else:
        state.config = config  # resuming may change the step budget
    cfg = config
    result = TrainingResult(state)
    if cfg.total_steps == 0:
        return result

    out_dir = Path(out_dir) if out_dir is not None else None
    writer = MetricsWriter(out_dir / metrics_name) if out_dir is not None else None
    buffer = ReplayBuffer(cfg.buffer_size, env.spec.state_dim, env.spec.action_dim, seed=cfg.seed + 1)
    eval_env = E.make(env.spec.name)
    t0 = time.perf_counter()

    obs = env.reset(seed=cfg.seed)
    if cfg.normalize_obs:
        state.normalizer.update(obs)
    try:
        for n in range(1, cfg.total_steps + 1):
            a = _collect_action(state, obs, n)
            next_obs, r, done = env.step(a)
            buffer.push(Transition(obs, np.asarray(a, dtype=np.float64), r * cfg.reward_scale, next_obs, done))
            state.env_steps = n
            if done:
                obs = env.reset()
            else:
                obs = next_obs
            if cfg.normalize_obs:
                state.normalizer.update(obs)

            row = None
            if n % cfg.update_every == 0 and n >= cfg.warmup and len(buffer) >= cfg.batch_size:
                ms = [train_step(state, buffer) for _ in range(cfg.update_every)]
                row = {k: float(np.nanmean([m[k] for m in ms])) if not all(np.isnan(m[k]) for m in ms) else float("nan")
                       for k in METRIC_KEYS}
                row["alpha"], row["beta"] = state.alpha, state.beta
            if n % cfg.eval_every == 0 or n == cfg.total_steps:
                row = row or dict.fromkeys(METRIC_KEYS, float("nan"))
                ev = evaluate(state.actor, eval_env, cfg.eval_episodes,
                              state.normalizer if cfg.normalize_obs else None,
                              seed=cfg.seed + EVAL_SEED_OFFSET)
                row["eval_return_mean"], row["eval_return_std"] = ev.mean, ev.std
                if ev.overspeed_fraction is not None:
                    row["overspeed_fraction"] = ev.overspeed_fraction
                if progress:
                    progress(n, row)
            if row is not None:
                row["step"] = n
                row["wall_ms"] = int((time.perf_counter() - t0) * 1000) if cfg.log_wall_time else 0
                result.history.append(row)
                if writer:
                    writer.write(row)
            if out_dir is not None and cfg.checkpoint_every and n % cfg.checkpoint_every == 0:
                save_checkpoint(state, out_dir / "checkpoints" / f"step{n:08d}")
    except TrainingError as exc:
        if out_dir is not None:
            dump = {"error": str(exc), "env_steps": state.env_steps, "grad_steps": state.grad_steps,
                    "alpha": state.alpha, "beta": state.beta,
                    "last_rows": [{k: _fmt(v) for k, v in r.items()} for r in result.history[-5:]]}
            (out_dir / "diagnostic.json").write_text(json.dumps(dump, indent=1))
        raise
    finally:
        if writer:
            writer.close()
    if out_dir is not None:
        save_checkpoint(state, out_dir / "checkpoints" / "final")
    return result


def save_checkpoint(state: TrainerState, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    save_params(path / "actor", state.actor.params)
    for q in state.critics.online + state.critics.target:
        save_params(path / q.name, q)
    meta = {
        "env": state.env_spec.name,
        "state_dim": state.env_spec.state_dim,
        "action_dim": state.env_spec.action_dim,
        "action_low": state.env_spec.action_low.tolist(),
        "action_high": state.env_spec.action_high.tolist(),
        "policy_kind": state.actor.kind,
        "noise_dim": state.actor.noise_dim,
        "actor_hidden": list(state.actor.spec.hidden_dims),
        "critic_hidden": list(state.critics.spec.hidden_dims),
        "n_cos": state.critics.spec.n_cos,
        "normalize_obs": state.config.normalize_obs,
        "normalizer": state.normalizer.to_dict(),
        "log_alpha": state.log_alpha,
        "beta": state.beta,
        "env_steps": state.env_steps,
        "grad_steps": state.grad_steps,
        "config": state.config.to_dict(),
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=1))
    return path


@dataclass
class Checkpoint:
    meta: dict
    actor: object
    critics: TwinCritics
    normalizer: ObsNormalizer | None


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        meta = json.loads((path / "meta.json").read_text())
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read {path / 'meta.json'}: {exc}") from exc
    params = load_params(path / "actor")
    low, high = np.array(meta["action_low"]), np.array(meta["action_high"])
    if meta["policy_kind"] == "gaussian":
        actor = GaussianPolicy.create(meta["state_dim"], low, high, meta["actor_hidden"])
    else:
        actor = PushForwardPolicy.create(meta["state_dim"], low, high, meta["actor_hidden"], meta["noise_dim"])
    if len(params) != len(actor.params):
        raise CheckpointError("actor parameter count does not match its metadata")
    actor.params = params
    spec = IqnSpec(meta["state_dim"], meta["action_dim"], tuple(meta["critic_hidden"]), meta["n_cos"])
    online = tuple(load_params(path / n) for n in ("critic1", "critic2"))
    target = tuple(load_params(path / n) for n in ("target1", "target2"))
    critics = TwinCritics(spec, online, target)
    norm = ObsNormalizer.from_dict(meta["normalizer"]) if meta.get("normalize_obs", True) else None
    return Checkpoint(meta, actor, critics, norm)

"""Built-in continuous-control tasks and observation normalization.

All tasks are time-limited: ``done`` is raised only when the episode hits
``max_episode_steps``. Trainers treat that flag as a truncation and keep
bootstrapping through it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_episode_steps: int
    gamma_default: float

    def __post_init__(self):
        low = np.asarray(self.action_low, dtype=np.float64)
        high = np.asarray(self.action_high, dtype=np.float64)
        if low.shape != (self.action_dim,) or high.shape != (self.action_dim,):
            raise ConfigurationError("action bounds must have action_dim entries")
        if not np.all(low < high):
            raise ConfigurationError("action_low must be below action_high")
        if not 0.0 <= self.gamma_default < 1.0:
            raise ConfigurationError("gamma_default must lie in [0, 1)")
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


class Env:
    """Common episode bookkeeping; subclasses implement ``_reset``/``_step``."""

    spec: EnvSpec

    def __init__(self, seed=None):
        self.rng = np.random.default_rng(seed)
        self.t = 0
        self.state = None

    def reset(self, seed=None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.t = 0
        self.state = self._reset()
        return self.observe()

    def step(self, action):
        if self.state is None:
            raise UsageError("step called before reset")
        action = np.asarray(action, dtype=np.float64).reshape(self.spec.action_dim)
        if np.any(np.isnan(action)):
            raise UsageError("NaN action")
        reward = float(self._step(action))
        self.t += 1
        done = self.t >= self.spec.max_episode_steps
        return self.observe(), reward, done

    def observe(self) -> np.ndarray:
        return np.array(self.state, dtype=np.float64)

    def _reset(self):
        raise NotImplementedError

    def _step(self, action):
        raise NotImplementedError


class BimodalBandit(Env):
    """One-step task whose reward has two equal peaks at +-(0.6, 0.6)."""

    centers = np.array([[0.6, 0.6], [-0.6, -0.6]])
    width = 0.05
    spec = EnvSpec("BimodalBandit", 1, 2, -np.ones(2), np.ones(2), 1, 0.0)

    @classmethod
    def reward(cls, action):
        a = np.asarray(action, dtype=np.float64)
        d2 = ((a[..., None, :] - cls.centers) ** 2).sum(-1)
        return np.exp(-d2 / cls.width).sum(-1)

    def _reset(self):
        return np.zeros(1)

    def _step(self, action):
        return self.reward(action)


def angle_normalize(x):
    return ((x + np.pi) % (2 * np.pi)) - np.pi


class Pendulum(Env):
    """Torque-limited swing-up; angle 0 is upright."""

    g = 10.0
    m = 1.0
    l = 1.0
    dt = 0.05
    max_speed = 8.0
    spec = EnvSpec("Pendulum", 3, 1, np.array([-2.0]), np.array([2.0]), 200, 0.99)

    def _reset(self):
        return np.array([self.rng.uniform(-np.pi, np.pi), self.rng.uniform(-1.0, 1.0)])

    def observe(self):
        th, thdot = self.state
        return np.array([math.cos(th), math.sin(th), thdot])

    def _step(self, action):
        th, thdot = self.state
        u = float(np.clip(action[0], -2.0, 2.0))
        cost = angle_normalize(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        thdot = thdot + (3 * self.g / (2 * self.l) * math.sin(th) + 3.0 / (self.m * self.l**2) * u) * self.dt
        thdot = float(np.clip(thdot, -self.max_speed, self.max_speed))
        th = th + thdot * self.dt
        self.state = np.array([th, thdot])
        return -cost

    def energy(self):
        """Kinetic plus potential energy per unit inertia (upright is the maximum)."""
        th, thdot = self.state
        return 0.5 * thdot**2 + 3 * self.g / (2 * self.l) * math.cos(th)


class RiskyDrive(Env):
    """Speed control where driving above 4 risks a rare large penalty.

    Reward is the current speed minus ``penalty`` with probability
    ``crash_prob`` whenever the current speed exceeds ``limit``.
    """

    penalty = 15.0
    crash_prob = 0.1
    limit = 4.0
    v_max = 6.0
    noise_std = 0.05
    spec = EnvSpec("RiskyDrive", 1, 1, np.array([-1.0]), np.array([1.0]), 100, 0.9)

    def _reset(self):
        return np.zeros(1)

    def reward_at(self, v, rng=None):
        rng = self.rng if rng is None else rng
        crash = (np.asarray(v) > self.limit) & (rng.random(np.shape(v)) < self.crash_prob)
        return np.asarray(v) - self.penalty * crash

    def _step(self, action):
        v = float(self.state[0])
        r = float(self.reward_at(v))
        nv = v + 0.5 * float(action[0]) + self.rng.normal(0.0, self.noise_std)
        self.state = np.array([min(max(nv, 0.0), self.v_max)])
        return r


ENVIRONMENTS = {cls.spec.name: cls for cls in (BimodalBandit, Pendulum, RiskyDrive)}


def make(name: str, seed=None) -> Env:
    try:
        return ENVIRONMENTS[name](seed)
    except KeyError:
        raise ConfigurationError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}", "env") from None


@dataclass
class ObsNormalizer:
    """Running mean/variance (Welford) with clipping.

    Normalized output is ``clip((s - mean) / max(std), -clip_bound, clip_bound)``
    with a single scalar divisor, floored at 1e-8.
    """

    dim: int
    clip_bound: float = 5.0
    count: int = 0
    running_mean: np.ndarray = field(default=None)
    m2: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.running_mean is None:
            self.running_mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros(self.dim)

    @property
    def running_var(self):
        return self.m2 / max(self.count, 1)

    def update(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.count += 1
        delta = x - self.running_mean
        self.running_mean = self.running_mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.running_mean)

    def normalize(self, x):
        scale = max(float(np.sqrt(np.max(self.running_var))), 1e-8)
        z = (np.asarray(x, dtype=np.float64) - self.running_mean) / scale
        return np.clip(z, -self.clip_bound, self.clip_bound)

    def copy(self):
        return ObsNormalizer(self.dim, self.clip_bound, self.count, self.running_mean.copy(), self.m2.copy())

    def to_dict(self):
        return {"dim": self.dim, "clip_bound": self.clip_bound, "count": self.count,
                "mean": self.running_mean.tolist(), "m2": self.m2.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["dim"], d["clip_bound"], d["count"], np.array(d["mean"]), np.array(d["m2"]))


def normalize_obs(normalizer: ObsNormalizer, state, update: bool = True):
    """Normalize one observation, updating the statistics first when training.

    Returns ``(normalized, normalizer)``.
    """
    if update:
        normalizer.update(state)
    return normalizer.normalize(state), normalizer


def dump_trajectory(path, transitions) -> Path:
    """CSV with columns step, state..., action..., reward, done."""
    path = Path(path)
    transitions = list(transitions)
    if not transitions:
        raise UsageError("no transitions to dump")
    sd = len(transitions[0].state)
    ad = len(transitions[0].action)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"s{i}" for i in range(sd)] + [f"a{i}" for i in range(ad)] + ["reward", "done"])
        for k, t in enumerate(transitions):
            w.writerow([k, *map(repr, map(float, t.state)), *map(repr, map(float, t.action)), repr(float(t.reward)), int(t.done)])
    return path

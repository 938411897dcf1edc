from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Transition
from .errors import NotReadyError


@dataclass
class Batch:
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_state: np.ndarray
    done: np.ndarray

    def __len__(self):
        return self.reward.shape[0]


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling (with replacement)."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, seed=None):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.rng = np.random.default_rng(seed)
        self.state = np.zeros((capacity, state_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.next_state = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        i = self._next
        self.state[i] = t.state
        self.action[i] = t.action
        self.reward[i] = t.reward
        self.next_state[i] = t.next_state
        self.done[i] = t.done
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, m: int) -> np.ndarray:
        if self.size < m:
            raise NotReadyError(f"buffer holds {self.size} transitions, batch needs {m}")
        if m == 0:
            return np.zeros(0, dtype=np.int64)
        return self.rng.integers(0, self.size, size=m)

    def sample_arrays(self, m: int) -> Batch:
        idx = self.sample_indices(m)
        return Batch(self.state[idx], self.action[idx], self.reward[idx], self.next_state[idx], self.done[idx])

    def sample_batch(self, m: int) -> list[Transition]:
        idx = self.sample_indices(m)
        return [self.get(int(i)) for i in idx]

    def get(self, i: int) -> Transition:
        return Transition(self.state[i].copy(), self.action[i].copy(), float(self.reward[i]),
                          self.next_state[i].copy(), bool(self.done[i]))

    def __iter__(self):
        """Stored transitions, oldest first."""
        start = self._next if self.size == self.capacity else 0
        for k in range(self.size):
            yield self.get((start + k) % self.capacity)

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    obs: np.ndarray  # (B, obs_dim)
    act: np.ndarray  # (B, 1)
    rew: np.ndarray  # (B,)
    next_obs: np.ndarray  # (B, obs_dim)
    done: np.ndarray  # (B,) bool


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions with uniform batch sampling."""

    def __init__(self, capacity: int = 500_000, obs_dim: int = 7, act_dim: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.ptr = 0
        self.size = 0
        self.pushed = 0

    def __len__(self):
        return self.size

    def push(self, obs, act, rew, next_obs, done):
        if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(next_obs))
                and np.all(np.isfinite(act)) and np.isfinite(rew)):
            raise ValueError("transition contains non-finite values")
        i = self.ptr
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = done
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.pushed += 1

    def indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size > self.size:
            raise ValueError(f"batch of {batch_size} from buffer of {self.size}")
        return rng.choice(self.size, size=batch_size, replace=False)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        idx = self.indices(batch_size, rng)
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx],
                     self.done[idx])

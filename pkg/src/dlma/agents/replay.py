from __future__ import annotations

from typing import Iterator, NamedTuple

import numpy as np


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray  # (n, n_rewards)
    next_states: np.ndarray


class ReplayMemory:
    """Fixed-capacity FIFO of encoded experiences ``(s, a, r, s')``.

    Once full, each push overwrites the oldest entry.  ``ids`` records the
    push sequence number held in each slot.
    """

    def __init__(self, capacity: int, state_dim: int, n_rewards: int = 1, dtype=np.float64):
        if capacity < 1:
            raise ValueError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=dtype)
        self.next_states = np.zeros((capacity, state_dim), dtype=dtype)
        self.actions = np.zeros(capacity, dtype=np.intp)
        self.rewards = np.zeros((capacity, n_rewards), dtype=dtype)
        self.ids = np.full(capacity, -1, dtype=np.int64)
        self.pushes = 0

    def __len__(self) -> int:
        return min(self.pushes, self.capacity)

    def push(self, state: np.ndarray, action: int, rewards, next_state: np.ndarray) -> None:
        i = self.pushes % self.capacity
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = rewards
        self.next_states[i] = next_state
        self.ids[i] = self.pushes
        self.pushes += 1

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        """``n`` distinct experiences drawn uniformly."""
        if n > len(self):
            raise ValueError(f"cannot sample {n} experiences from a memory holding {len(self)}")
        idx = rng.choice(len(self), size=n, replace=False)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])

    def chronological(self) -> np.ndarray:
        """Slot indices ordered oldest to newest."""
        n = len(self)
        start = self.pushes % self.capacity if self.pushes > self.capacity else 0
        return (start + np.arange(n)) % self.capacity

    def __iter__(self) -> Iterator[tuple]:
        for i in self.chronological():
            yield self.states[i], int(self.actions[i]), self.rewards[i], self.next_states[i]

from __future__ import annotations

from collections import defaultdict

import numpy as np

from dlma.agents.policy import EpsilonSchedule, epsilon_greedy
from dlma.agents.state import initial_state, update_state

N_ACTIONS = 2


class TabularQ:
    """Lookup-table action values; entries never written read as zero."""

    def __init__(self, beta: float = 0.1, n_actions: int = N_ACTIONS):
        if not 0.0 < beta <= 1.0:
            raise ValueError(f"learning rate beta must be in (0, 1], got {beta}")
        self.beta = beta
        self.n_actions = n_actions
        self.table: defaultdict = defaultdict(lambda: np.zeros(n_actions))

    def values(self, state) -> np.ndarray:
        row = self.table.get(state)
        return row if row is not None else np.zeros(self.n_actions)

    def update(self, state, action: int, reward: float, next_state, gamma: float) -> None:
        target = reward + gamma * self.values(next_state).max()
        row = self.table[state]
        row[action] += self.beta * (target - row[action])


def tabular_update(q: TabularQ, s, a, r, s2, beta: float, gamma: float) -> None:
    q.beta = beta
    q.update(s, a, r, s2, gamma)


class TabularAgent:
    """Q-learning over the raw state history, one update per slot."""

    def __init__(
        self,
        history: int = 20,
        beta: float = 0.1,
        gamma: float = 0.9,
        epsilon: EpsilonSchedule = EpsilonSchedule(),
    ):
        self.q = TabularQ(beta)
        self.gamma = gamma
        self.epsilon = epsilon
        self.state = initial_state(history)
        self.t = 0

    def act(self, rng: np.random.Generator) -> int:
        return epsilon_greedy(self.q.values(self.state), self.epsilon(self.t), rng)

    def observe(self, action: int, observation: int, rewards, rng: np.random.Generator) -> None:
        next_state = update_state(self.state, action, observation)
        self.q.update(self.state, action, float(rewards[0]), next_state, self.gamma)
        self.state = next_state
        self.t += 1

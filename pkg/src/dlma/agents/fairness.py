"""Multi-dimensional Q-learning for alpha-fair channel sharing.

The learner (a gateway standing in for ``K`` physical DRL nodes) keeps one
action-value estimate per node: ``L`` legacy nodes followed by itself.  The
network output holds ``L+1`` contiguous groups of per-action values, group
``i`` being ``q^(i)(s, .)``.  Actions are chosen to maximize the alpha-fair
utility of those estimates rather than their sum.

Training bootstraps each dimension through the action the target network's
estimates would select (not through a per-dimension max).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dlma.agents.dqn import N_ACTIONS, DQNAgent
from dlma.agents.replay import ReplayMemory
from dlma.nn import Network, RMSProp

DEFAULT_FLOOR = 1e-6


def alpha_utility(x, alpha: float, floor: float = DEFAULT_FLOOR):
    """alpha-fair utility: ``log x`` at alpha=1, else ``x**(1-alpha) / (1-alpha)``.

    For alpha > 0 the argument is clamped to ``floor`` first so untrained,
    nonpositive estimates still produce finite scores.  alpha=0 is the
    identity on all reals.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    if alpha == 0:
        return x
    x = np.maximum(x, floor)
    if alpha == 1:
        return np.log(x)
    return x ** (1.0 - alpha) / (1.0 - alpha)


@dataclass(frozen=True)
class FairnessObjective:
    alpha: float = 1.0
    agents: int = 1  # K physical DRL nodes behind the gateway
    legacy: int = 0  # L
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.agents < 1:
            raise ValueError(f"K must be >= 1, got {self.agents}")
        if self.legacy < 0:
            raise ValueError(f"L must be >= 0, got {self.legacy}")

    @property
    def dims(self) -> int:
        return self.legacy + 1

    def scores(self, q: np.ndarray) -> np.ndarray:
        """Objective per action from grouped estimates.

        ``q`` is either one flat network output of length ``(L+1)*n_actions``
        or grouped with shape ``(..., L+1, n_actions)``; the result has shape
        ``(..., n_actions)``.
        """
        q = np.asarray(q, dtype=float)
        if q.ndim == 1:
            q = q.reshape(self.dims, N_ACTIONS)
        if q.ndim < 2 or q.shape[-2:] != (self.dims, N_ACTIONS):
            raise ValueError(f"expected {self.dims} groups of action values, got shape {q.shape}")
        legacy = alpha_utility(q[..., : self.legacy, :], self.alpha, self.floor).sum(axis=-2)
        own = self.agents * alpha_utility(q[..., self.legacy, :] / self.agents, self.alpha, self.floor)
        return legacy + own


def fairness_select(q_vector: np.ndarray, objective: FairnessObjective) -> int:
    """Greedy alpha-fair action; ties go to the lowest action index."""
    return int(np.argmax(objective.scores(q_vector)))


def multiq_train_step(
    replay: ReplayMemory,
    online: Network,
    target: Network,
    opt: RMSProp,
    gamma: float,
    batch_size: int,
    objective: FairnessObjective,
    rng: np.random.Generator,
) -> float | None:
    """One RMSProp update of all ``L+1`` value dimensions; ``None`` if underfull."""
    if len(replay) < batch_size:
        return None
    batch = replay.sample(batch_size, rng)
    dims = objective.dims
    rows = np.arange(batch_size)

    q_next = target.forward(batch.next_states).reshape(batch_size, dims, N_ACTIONS)
    a_next = np.argmax(objective.scores(q_next), axis=1)
    y = batch.rewards + gamma * q_next[rows, :, a_next]

    q, cache = online.forward_cached(batch.states)
    q3 = q.reshape(batch_size, dims, N_ACTIONS)
    err = q3[rows, :, batch.actions] - y
    dout = np.zeros_like(q3)
    dout[rows, :, batch.actions] = err / (batch_size * dims)
    opt.step(online, online.backward(cache, dout.reshape(q.shape)))
    return float(np.mean(err * err))


class FairDQNAgent(DQNAgent):
    """Gateway learner with ``L+1``-dimensional rewards and alpha-fair action choice."""

    def __init__(self, rng: np.random.Generator, objective: FairnessObjective, **kwargs):
        self.objective = objective
        self.n_reward_dims = objective.dims
        super().__init__(rng, **kwargs)

    def scores(self, q: np.ndarray) -> np.ndarray:
        return self.objective.scores(q)

    def train_step(self, rng: np.random.Generator) -> float | None:
        return multiq_train_step(
            self.replay, self.online, self.target, self.opt, self.gamma, self.batch_size,
            self.objective, rng,
        )


class RoundRobin:
    """Gateway dispatcher: each TRANSMIT decision goes to the next physical node."""

    def __init__(self, agents: int):
        if agents < 1:
            raise ValueError(f"need at least one DRL node, got {agents}")
        self.agents = agents
        self.cursor = 0

    def dispatch(self, transmit: bool) -> int | None:
        if not transmit:
            return None
        node = self.cursor
        self.cursor = (self.cursor + 1) % self.agents
        return node


def bigagent_dispatch(transmit: bool, agents: int, cursor: int) -> tuple[int | None, int]:
    """Functional form of :class:`RoundRobin`: ``(node or None, new cursor)``."""
    if agents < 1:
        raise ValueError(f"need at least one DRL node, got {agents}")
    if not transmit:
        return None, cursor
    return cursor, (cursor + 1) % agents

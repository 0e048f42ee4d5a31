"""Deep Q-learning with experience replay and a quasi-static target network."""
from __future__ import annotations

import numpy as np

from dlma.agents.policy import EpsilonSchedule, argmax_random
from dlma.agents.replay import ReplayMemory
from dlma.agents.state import encode, initial_state, state_width, update_state
from dlma.nn import RESNET, Network, NetworkSpec, RMSProp, sync_target

N_ACTIONS = 2


def dqn_target(reward: float, next_q_target: np.ndarray, gamma: float) -> float:
    """``r + gamma * max_a' q(s', a'; theta^-)`` given the target net's outputs at ``s'``."""
    return reward + gamma * float(np.max(next_q_target))


def dqn_train_step(
    replay: ReplayMemory,
    online: Network,
    target: Network,
    opt: RMSProp,
    gamma: float,
    batch_size: int,
    rng: np.random.Generator,
) -> float | None:
    """One RMSProp update on a random minibatch; returns the pre-update loss.

    Returns ``None`` without touching the generator or the parameters when
    the memory holds fewer than ``batch_size`` experiences.
    """
    if len(replay) < batch_size:
        return None
    batch = replay.sample(batch_size, rng)
    y = batch.rewards[:, 0] + gamma * target.forward(batch.next_states).max(axis=1)
    q, cache = online.forward_cached(batch.states)
    rows = np.arange(batch_size)
    err = q[rows, batch.actions] - y
    dout = np.zeros_like(q)
    dout[rows, batch.actions] = err / batch_size
    opt.step(online, online.backward(cache, dout))
    return float(np.mean(err * err))


class DQNAgent:
    """Single learner maximizing its scalar reward (sum throughput by default).

    Per slot: choose an epsilon-greedy action from the online network, then
    after the channel resolves store the experience, run one training step,
    and refresh the target network every ``target_every`` slots.
    """

    n_reward_dims = 1

    def __init__(
        self,
        rng: np.random.Generator,
        history: int = 20,
        gamma: float = 0.9,
        learning_rate: float = 0.01,
        target_every: int = 200,
        batch_size: int = 32,
        capacity: int = 500,
        epsilon: EpsilonSchedule = EpsilonSchedule(),
        hidden: int = 64,
        hidden_layers: int = 6,
        arch: str = RESNET,
        dtype=np.float32,
    ):
        self.gamma = gamma
        self.target_every = target_every
        self.batch_size = batch_size
        self.epsilon = epsilon
        self.dtype = np.dtype(dtype)
        self.state = initial_state(history)
        self._encoded = encode(self.state).astype(self.dtype)
        spec = NetworkSpec(state_width(history), N_ACTIONS * self.n_reward_dims, hidden, hidden_layers, arch)
        self.online = Network.initialized(spec, rng, self.dtype)
        self.target = self.online.copy()
        self.opt = RMSProp(spec.n_params(), lr=learning_rate, dtype=self.dtype)
        self.replay = ReplayMemory(capacity, spec.n_in, self.n_reward_dims, self.dtype)
        self.t = 0
        self.last_loss: float | None = None

    def scores(self, q: np.ndarray) -> np.ndarray:
        """Per-action objective the greedy choice maximizes."""
        return q

    def act(self, rng: np.random.Generator) -> int:
        eps = self.epsilon(self.t)
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {eps}")
        if rng.random() < eps:
            return int(rng.integers(N_ACTIONS))
        # epsilon_greedy inlined so that exploring slots skip the forward pass
        return argmax_random(self.scores(self.online.forward(self._encoded)), rng)

    def train_step(self, rng: np.random.Generator) -> float | None:
        return dqn_train_step(
            self.replay, self.online, self.target, self.opt, self.gamma, self.batch_size, rng
        )

    def observe(self, action: int, observation: int, rewards, rng: np.random.Generator) -> float | None:
        next_state = update_state(self.state, action, observation)
        next_encoded = encode(next_state).astype(self.dtype)
        self.replay.push(self._encoded, action, rewards, next_encoded)
        self.last_loss = self.train_step(rng)
        if self.t % self.target_every == 0:
            sync_target(self.online, self.target)
        self.state, self._encoded = next_state, next_encoded
        self.t += 1
        return self.last_loss

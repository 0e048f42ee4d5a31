"""Model-aware throughput benchmarks.

A model-aware node knows the protocols of the legacy nodes it shares the
channel with and runs the best policy that knowledge allows.  Two families
of scenarios are covered:

* TDMA and q-ALOHA mixes.  Legacy behavior depends only on the position in
  the (common) frame, so the benchmark policy class is a transmit
  probability per frame position.  Sum throughput is linear in those
  probabilities and has a closed form; alpha-fair optima come from a grid
  search refined locally.

* A single fixed-window or exponential-backoff ALOHA node.  The agent always
  learns when that node transmitted (ACK or channel sensing) and whether it
  collided, so it can track the node's backoff stage ``k`` and the slots
  ``d`` elapsed since its last transmission; the counter itself stays
  hidden.  On that belief state the node transmits with hazard
  ``1 / (2^k W - d)``.  The benchmark solves the resulting average-reward
  MDP as a linear program over state-action occupation measures; alpha-fair
  optima are found by Frank-Wolfe iterations over the same polytope.

Per-node vectors follow the channel's global indexing: legacy nodes first,
then the agent's physical nodes (a big agent's throughput is split evenly
across its ``K`` round-robin nodes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from dlma.agents.fairness import alpha_utility
from dlma.env import Channel, EBAloha, FWAloha, Observation, ProtocolSpec, QAloha, TDMA

CLOSED_FORM = "closed_form"
GRID_SEARCH = "grid_search"
DP = "dp"


class UnsupportedScenario(ValueError):
    """No benchmark is implemented for this mix of legacy protocols."""


@dataclass
class BenchmarkResult:
    sum_throughput: float
    per_node: np.ndarray
    policy: Any
    method: str
    details: dict = field(default_factory=dict)

    @property
    def agent_throughput(self) -> float:
        n_agents = self.details.get("agents", 1)
        return float(self.per_node[-n_agents:].sum())


# --------------------------------------------------------------------------
# TDMA / q-ALOHA mixes
# --------------------------------------------------------------------------


def _is_frame_scenario(legacy: Sequence[ProtocolSpec]) -> bool:
    return all(isinstance(p, (TDMA, QAloha)) for p in legacy)


def _window_node(legacy: Sequence[ProtocolSpec]):
    if len(legacy) == 1 and isinstance(legacy[0], (FWAloha, EBAloha)):
        return legacy[0]
    return None


def _frame_length(legacy) -> int:
    y = 1
    for p in legacy:
        if isinstance(p, TDMA):
            y = math.lcm(y, p.frame)
    return y


def frame_coefficients(legacy: Sequence[ProtocolSpec]) -> tuple[np.ndarray, np.ndarray]:
    """Per-position success probabilities with the agent silent / transmitting.

    Returns ``(idle, busy)`` of shape ``(Y, L+1)``; column ``L`` is the agent.
    A node's throughput at position ``j`` under transmit probability ``p_j`` is
    ``(1-p_j) * idle[j] + p_j * busy[j]``.
    """
    y = _frame_length(legacy)
    n = len(legacy)
    idle = np.zeros((y, n + 1))
    busy = np.zeros((y, n + 1))
    qs = {i: p.q for i, p in enumerate(legacy) if isinstance(p, QAloha)}
    silent_aloha = math.prod(1.0 - q for q in qs.values())
    for j in range(y):
        tdma_tx = [i for i, p in enumerate(legacy) if isinstance(p, TDMA) and j % p.frame in p.slots]
        if len(tdma_tx) == 1:
            idle[j, tdma_tx[0]] = silent_aloha
        elif not tdma_tx:
            busy[j, n] = silent_aloha
            for i, q in qs.items():
                others = math.prod(1.0 - q2 for k, q2 in qs.items() if k != i)
                idle[j, i] = q * others
    return idle, busy


def _frame_throughputs(idle, busy, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)[:, None]
    return ((1.0 - p) * idle + p * busy).mean(axis=0)


def _split_agents(per_node: np.ndarray, agents: int) -> np.ndarray:
    return np.concatenate([per_node[:-1], np.full(agents, per_node[-1] / agents)])


def _fair_value(x: np.ndarray, alpha: float, agents: int) -> float:
    """Sum of legacy utilities plus ``K * f(x_agent / K)``; ``x`` unsplit."""
    legacy = float(np.sum(alpha_utility(x[:-1], alpha)))
    return legacy + agents * float(alpha_utility(x[-1] / agents, alpha))


def _frame_optimal_sum(legacy, agents) -> BenchmarkResult:
    idle, busy = frame_coefficients(legacy)
    p = (busy.sum(axis=1) > idle.sum(axis=1)).astype(float)
    x = _frame_throughputs(idle, busy, p)
    return BenchmarkResult(float(x.sum()), _split_agents(x, agents), p, CLOSED_FORM, {"agents": agents})


def grid_maximize(f, lo: float = 0.0, hi: float = 1.0, step: float = 1e-3, rounds: int = 2) -> float:
    """Maximize ``f`` on ``[lo, hi]``: a grid at ``step``, then ``rounds`` of 10x finer grids."""
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    best = grid[int(np.argmax([f(v) for v in grid]))]
    for _ in range(rounds):
        a, b = max(lo, best - step), min(hi, best + step)
        step /= 10.0
        grid = np.linspace(a, b, int(round((b - a) / step)) + 1)
        best = grid[int(np.argmax([f(v) for v in grid]))]
    return float(best)


def _frame_optimal_fair(legacy, alpha, agents) -> BenchmarkResult:
    idle, busy = frame_coefficients(legacy)
    # Where a TDMA node transmits the agent can only collide: p=0 dominates.
    # All remaining positions see the same ALOHA population, and the utility
    # depends only on their mean transmit probability, so one shared p suffices.
    free = np.array([not _tdma_busy(legacy, j) for j in range(idle.shape[0])])

    def policy(v):
        return np.where(free, v, 0.0)

    def value(v):
        return _fair_value(_frame_throughputs(idle, busy, policy(v)), alpha, agents)

    v = grid_maximize(value) if free.any() else 0.0
    p = policy(v)
    x = _frame_throughputs(idle, busy, p)
    return BenchmarkResult(
        float(x.sum()), _split_agents(x, agents), p, GRID_SEARCH,
        {"agents": agents, "alpha": alpha, "utility": value(v)},
    )


def _tdma_busy(legacy, j) -> bool:
    return any(isinstance(p, TDMA) and j % p.frame in p.slots for p in legacy)


# --------------------------------------------------------------------------
# one window-ALOHA node: belief MDP
# --------------------------------------------------------------------------


@dataclass
class BeliefMDP:
    """Average-reward MDP on the agent's knowledge of a window-ALOHA node.

    States are ``(stage, elapsed)``; actions 0=WAIT, 1=TRANSMIT.
    ``rewards[s, a]`` is ``(aloha, agent)`` expected success per slot.
    """

    window: int
    max_stage: int
    states: list[tuple[int, int]]
    index: dict
    trans: np.ndarray  # (S, 2, S)
    rewards: np.ndarray  # (S, 2, 2)

    @classmethod
    def build(cls, window: int, max_stage: int) -> "BeliefMDP":
        states = [(k, d) for k in range(max_stage + 1) for d in range((1 << k) * window)]
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        trans = np.zeros((n, 2, n))
        rewards = np.zeros((n, 2, 2))
        for i, (k, d) in enumerate(states):
            h = 1.0 / ((1 << k) * window - d)
            nxt = index.get((k, d + 1))
            # wait: the node succeeds alone or the slot is idle
            rewards[i, 0, 0] = h
            trans[i, 0, index[(0, 0)]] += h
            if nxt is not None:
                trans[i, 0, nxt] += 1.0 - h
            # transmit: collision with the node or a clean agent success
            rewards[i, 1, 1] = 1.0 - h
            trans[i, 1, index[(min(k + 1, max_stage), 0)]] += h
            if nxt is not None:
                trans[i, 1, nxt] += 1.0 - h
        return cls(window, max_stage, states, index, trans, rewards)

    def occupation_lp(self, weights) -> np.ndarray:
        """Occupation measure ``mu[s, a]`` maximizing ``weights . throughputs``."""
        n = len(self.states)
        c = -(self.rewards @ np.asarray(weights, dtype=float)).ravel()
        # flow balance: sum_a mu(s', a) - sum_{s,a} mu(s, a) P(s'|s, a) = 0
        a_eq = np.zeros((n + 1, 2 * n))
        for s in range(n):
            a_eq[s, 2 * s : 2 * s + 2] += 1.0
        a_eq[:n] -= self.trans.reshape(2 * n, n).T
        a_eq[n] = 1.0
        b_eq = np.zeros(n + 1)
        b_eq[n] = 1.0
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if not res.success:
            raise RuntimeError(f"occupation-measure LP failed: {res.message}")
        return res.x.reshape(n, 2)

    def throughputs(self, mu: np.ndarray) -> np.ndarray:
        """``(aloha, agent)`` long-run throughputs of an occupation measure."""
        return np.einsum("sa,sar->r", mu, self.rewards)

    def policy(self, mu: np.ndarray) -> dict:
        """Transmit probability per belief state (states never visited: 0)."""
        out = {}
        for i, s in enumerate(self.states):
            total = mu[i].sum()
            out[s] = float(mu[i, 1] / total) if total > 1e-12 else 0.0
        return out


def _window_params(p) -> tuple[int, int]:
    return (p.window, 0) if isinstance(p, FWAloha) else (p.window, p.max_stage)


def _window_optimal(node, alpha: float, agents: int, iterations: int = 300) -> BenchmarkResult:
    mdp = BeliefMDP.build(*_window_params(node))
    mu = mdp.occupation_lp([1.0, 1.0])
    if alpha > 0:
        # Frank-Wolfe over occupation measures; utility depends only on throughputs
        def utility(m):
            return _fair_value(mdp.throughputs(m), alpha, agents)

        mu = 0.5 * mu + 0.5 * mdp.occupation_lp([1.0, 0.0])  # interior start
        for _ in range(iterations):
            x = mdp.throughputs(mu)
            grad = _fair_gradient(x, alpha, agents)
            vertex = mdp.occupation_lp(grad / np.abs(grad).max())
            direction = vertex - mu
            if abs(float(grad @ mdp.throughputs(direction))) < 1e-12:
                break
            step = minimize_scalar(
                lambda g: -utility(mu + g * direction), bounds=(0.0, 1.0), method="bounded",
                options={"xatol": 1e-10},
            ).x
            mu = mu + step * direction
    x = mdp.throughputs(mu)
    method = DP if alpha == 0 else GRID_SEARCH
    details = {"agents": agents, "mdp": mdp, "occupation": mu}
    if alpha > 0:
        details["alpha"] = alpha
        details["utility"] = _fair_value(x, alpha, agents)
    return BenchmarkResult(float(x.sum()), _split_agents(x, agents), mdp.policy(mu), method, details)


def _fair_gradient(x: np.ndarray, alpha: float, agents: int) -> np.ndarray:
    xc = np.maximum(x, 1e-9)
    g = xc ** (-alpha)
    # d/dx [K f(x/K)] = (x/K)^(-alpha)
    g[-1] = (xc[-1] / agents) ** (-alpha)
    return g


# --------------------------------------------------------------------------
# public entry points
# --------------------------------------------------------------------------


def optimal_sum(legacy: Sequence[ProtocolSpec], agents: int = 1) -> BenchmarkResult:
    """Highest sum throughput a protocol-aware agent can reach."""
    legacy = list(legacy)
    if _is_frame_scenario(legacy):
        return _frame_optimal_sum(legacy, agents)
    node = _window_node(legacy)
    if node is not None:
        return _window_optimal(node, 0.0, agents)
    raise UnsupportedScenario(f"no sum-throughput benchmark for legacy nodes {legacy}")


def optimal_alpha_fair(legacy: Sequence[ProtocolSpec], alpha: float, agents: int = 1) -> BenchmarkResult:
    """Throughputs maximizing ``sum_i f(x_i) + K f(x_agent / K)``."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    legacy = list(legacy)
    if _is_frame_scenario(legacy):
        return _frame_optimal_fair(legacy, alpha, agents)
    node = _window_node(legacy)
    if node is not None:
        return _window_optimal(node, alpha, agents)
    raise UnsupportedScenario(f"no alpha-fair benchmark for legacy nodes {legacy}")


# --------------------------------------------------------------------------
# simulation of explicit policies
# --------------------------------------------------------------------------


class FramePolicy:
    """Transmit with probability ``probs[slot % len(probs)]``."""

    def __init__(self, probs):
        self.probs = np.atleast_1d(np.asarray(probs, dtype=float))

    def decide(self, slot: int, rng: np.random.Generator) -> bool:
        p = self.probs[slot % self.probs.size]
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return bool(rng.random() < p)

    def observe(self, transmitted: bool, observation: Observation) -> None:
        pass


class BeliefPolicy:
    """Acts on the tracked ``(stage, elapsed)`` belief about one window-ALOHA node."""

    def __init__(self, probs: dict, window: int, max_stage: int):
        self.probs = probs
        self.window = window
        self.max_stage = max_stage
        self.stage = 0
        self.elapsed = 0

    def decide(self, slot: int, rng: np.random.Generator) -> bool:
        p = self.probs.get((self.stage, self.elapsed), 0.0)
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return bool(rng.random() < p)

    def observe(self, transmitted: bool, observation: Observation) -> None:
        if transmitted and observation == Observation.COLLISION:
            self.stage, self.elapsed = min(self.stage + 1, self.max_stage), 0
        elif not transmitted and observation == Observation.SUCCESS:
            self.stage, self.elapsed = 0, 0
        else:
            self.elapsed += 1


def benchmark_policy(legacy: Sequence[ProtocolSpec], result: BenchmarkResult):
    """Executable policy object for a benchmark result."""
    node = _window_node(list(legacy))
    if node is not None:
        return BeliefPolicy(result.policy, *_window_params(node))
    return FramePolicy(result.policy)


def policy_value(
    legacy: Sequence[ProtocolSpec], policy, horizon: int = 100_000, seed: int = 0
) -> np.ndarray:
    """Empirical per-node throughputs (legacy..., agent) of a fixed agent policy."""
    rng = np.random.default_rng(seed)
    channel = Channel.build(list(legacy), 1, rng)
    wins = np.zeros(channel.n_nodes)
    for t in range(horizon):
        tx = policy.decide(t, rng)
        outcome = channel.step([tx])
        wins += outcome.success
        policy.observe(tx, outcome.observation)
    return wins / max(horizon, 1)

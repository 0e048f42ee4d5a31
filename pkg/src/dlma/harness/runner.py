"""Seeded simulation runs, throughput metrics and parameter sweeps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from dlma.agents import DQNAgent, FairDQNAgent, FairnessObjective, RoundRobin, TabularAgent
from dlma.env import Channel, Observation
from dlma.harness.config import (
    DQN_FAIR,
    DQN_SUM,
    MULTI_INDEPENDENT,
    TABULAR_RL,
    ScenarioConfig,
    with_overrides,
)
from dlma.oracle import BenchmarkResult, UnsupportedScenario, optimal_alpha_fair, optimal_sum

N_SEEDS = 10


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


def short_term_throughput(rewards: Sequence[float], t: int, window: int) -> float:
    """Mean reward over slots ``t-N+1 .. t`` (slots counted from 1)."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if t < window:
        raise ValueError(f"short-term throughput needs t >= N, got t={t}, N={window}")
    if t > len(rewards):
        raise ValueError(f"t={t} exceeds the {len(rewards)} recorded slots")
    return float(np.sum(np.asarray(rewards[t - window : t], dtype=float)) / window)


def cumulative_throughput(rewards: Sequence[float], t: int) -> float:
    """Mean reward over slots ``1 .. t``."""
    if t < 1:
        raise ValueError(f"cumulative throughput needs t >= 1, got {t}")
    if t > len(rewards):
        raise ValueError(f"t={t} exceeds the {len(rewards)} recorded slots")
    return float(np.sum(np.asarray(rewards[:t], dtype=float)) / t)


def short_term_series(rewards: np.ndarray, window: int) -> np.ndarray:
    """Windowed means for every slot; NaN where fewer than ``window`` slots exist."""
    r = np.asarray(rewards, dtype=float)
    out = np.full(r.shape, np.nan)
    if r.shape[0] >= window:
        c = np.cumsum(r, axis=0)
        c = np.concatenate([np.zeros((1,) + r.shape[1:]), c])
        out[window - 1 :] = (c[window:] - c[:-window]) / window
    return out


def cumulative_series(rewards: np.ndarray) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    t = np.arange(1, r.shape[0] + 1).reshape((-1,) + (1,) * (r.ndim - 1))
    return np.cumsum(r, axis=0) / t


@dataclass
class MetricsRecord:
    """Per-slot log of one run.

    ``rewards[t, i]`` is 1 iff node ``i`` (legacy nodes first, then the DRL
    nodes) was the sole transmitter in slot ``t+1``.  Visit statistics
    refer to the state of the first learner before it acts.
    """

    config: ScenarioConfig
    rewards: np.ndarray  # (T, n_nodes) int8
    distinct_states: np.ndarray  # (T,)
    prior_visits: np.ndarray  # (T,)

    @property
    def slots(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.rewards.shape[1]

    @property
    def sum_rewards(self) -> np.ndarray:
        return self.rewards.sum(axis=1)

    def short_term(self, window: int | None = None) -> np.ndarray:
        return short_term_series(self.rewards, window or self.config.window)

    def cumulative(self) -> np.ndarray:
        return cumulative_series(self.rewards)

    def final_window(self, window: int | None = None) -> np.ndarray:
        """Per-node mean reward over the last ``window`` slots."""
        n = window or self.config.window
        if self.slots < n:
            raise ValueError(f"run has {self.slots} slots, fewer than the window {n}")
        return self.rewards[-n:].mean(axis=0)

    def cumulative_at(self, t: int) -> np.ndarray:
        """Per-node cumulative throughput after ``t`` slots."""
        if not 1 <= t <= self.slots:
            raise ValueError(f"t must be in [1, {self.slots}], got {t}")
        return self.rewards[:t].mean(axis=0)


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


def _dqn_kwargs(config: ScenarioConfig) -> dict:
    return dict(
        history=config.history,
        gamma=config.gamma,
        learning_rate=config.learning_rate,
        target_every=config.target_every,
        batch_size=config.batch_size,
        capacity=config.capacity,
        epsilon=config.epsilon,
        hidden=config.hidden,
        hidden_layers=config.hidden_layers,
        arch=config.arch,
    )


def build_learners(config: ScenarioConfig, rng: np.random.Generator) -> list:
    if config.mode == TABULAR_RL:
        return [TabularAgent(config.history, config.beta, config.gamma, config.epsilon)]
    if config.mode == DQN_SUM:
        return [DQNAgent(rng, **_dqn_kwargs(config))]
    if config.mode == MULTI_INDEPENDENT:
        return [DQNAgent(rng, **_dqn_kwargs(config)) for _ in range(config.agents)]
    objective = FairnessObjective(config.alpha, config.agents, len(config.legacy))
    return [FairDQNAgent(rng, objective, **_dqn_kwargs(config))]


def run(config: ScenarioConfig, progress: Callable[[int], None] | None = None) -> MetricsRecord:
    """Simulate ``config.slots`` slots; identical configs give identical records."""
    rng = np.random.default_rng(config.seed)
    learners = build_learners(config, rng)
    channel = Channel.build(config.legacy, config.agents, rng)
    n_legacy, k = channel.n_legacy, config.agents
    gateway = RoundRobin(k) if config.mode == DQN_FAIR else None

    T = config.slots
    rewards = np.zeros((T, channel.n_nodes), dtype=np.int8)
    distinct = np.zeros(T, dtype=np.int64)
    prior = np.zeros(T, dtype=np.int64)
    visits: dict = {}

    for t in range(T):
        s = learners[0].state
        seen = visits.get(s, 0)
        prior[t] = seen
        visits[s] = seen + 1
        distinct[t] = len(visits)

        actions = [learner.act(rng) for learner in learners]
        if gateway is not None:
            tx = [False] * k
            node = gateway.dispatch(actions[0] == 1)
            if node is not None:
                tx[node] = True
        else:
            tx = [a == 1 for a in actions]
        outcome = channel.step(tx)
        z = outcome.observation
        rewards[t] = outcome.success

        if gateway is not None:
            vec = np.empty(n_legacy + 1)
            vec[:n_legacy] = outcome.success[:n_legacy]
            vec[n_legacy] = outcome.success[n_legacy:].sum()
            learners[0].observe(actions[0], z, vec, rng)
        else:
            # sum-throughput reward: any successful transmission on the channel
            r = (1.0 if z == Observation.SUCCESS else 0.0,)
            for learner, a in zip(learners, actions):
                learner.observe(a, z, r, rng)
        if progress is not None and (t + 1) % 1000 == 0:
            progress(t + 1)
    return MetricsRecord(config, rewards, distinct, prior)


# --------------------------------------------------------------------------
# oracle pairing and sweeps
# --------------------------------------------------------------------------


def oracle_for(config: ScenarioConfig) -> BenchmarkResult | None:
    """Benchmark matching the run's objective, or ``None`` if unsupported."""
    try:
        if config.mode == DQN_FAIR:
            return optimal_alpha_fair(config.legacy, config.alpha, config.agents)
        return optimal_sum(config.legacy, config.agents)
    except UnsupportedScenario:
        return None


MEAN = "mean"
SUM = "sum"


@dataclass(frozen=True)
class SweepRow:
    param: str
    seed: int | str  # an integer seed, or MEAN for aggregate rows
    node_id: int | str  # a node index, or SUM for the whole channel
    achieved_tp: float
    oracle_tp: float | None


def sweep(
    template: ScenarioConfig,
    key: str,
    values: Iterable[str],
    seeds: Iterable[int] = range(N_SEEDS),
    on_run: Callable[[str, MetricsRecord], None] | None = None,
) -> list[SweepRow]:
    """Final-window throughput per node for each value of ``key`` and each seed.

    Every parameter value contributes one row per (seed, node) plus aggregate
    rows (``seed == "mean"``) averaging those per-seed rows.  Node ``"sum"``
    is the whole channel.
    """
    seeds = list(seeds)
    rows: list[SweepRow] = []
    for value in values:
        value = str(value)
        config = with_overrides(template, {key: value})
        bench = oracle_for(config)
        oracle = list(bench.per_node) + [bench.sum_throughput] if bench is not None else None
        ids = list(range(config.n_nodes)) + [SUM]
        achieved = np.zeros((len(seeds), len(ids)))
        for j, seed in enumerate(seeds):
            metrics = run(config.replace(seed=seed))
            if on_run is not None:
                on_run(value, metrics)
            final = metrics.final_window()
            achieved[j] = np.append(final, final.sum())
            for i, node in enumerate(ids):
                rows.append(SweepRow(value, seed, node, float(achieved[j, i]),
                                     None if oracle is None else float(oracle[i])))
        if seeds:
            for i, node in enumerate(ids):
                rows.append(SweepRow(value, MEAN, node, float(achieved[:, i].mean()),
                                     None if oracle is None else float(oracle[i])))
    return rows

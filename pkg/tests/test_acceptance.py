"""Acceptance criteria, each checked at its stated tolerance.

Training runs use the default hyper-parameters, T=50000 slots and 10 seeds;
"throughput" is the mean reward over the last N=1000 slots, averaged over
the seeds.  Runs are shared between criteria within one session.  The whole
module takes roughly an hour and a half on a single core.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
import pytest

from dlma.agents import (
    DQNAgent,
    EpsilonSchedule,
    FairDQNAgent,
    FairnessObjective,
    ReplayMemory,
    fairness_select,
)
from dlma.env import TDMA, Channel, Observation, QAloha, arbitrate
from dlma.harness import DQN_FAIR, DQN_SUM, MULTI_INDEPENDENT, TABULAR_RL, ScenarioConfig, run
from dlma.nn import PLAIN, RESNET, Network, NetworkSpec
from dlma.oracle import optimal_alpha_fair, optimal_sum

pytestmark = pytest.mark.acceptance

SEEDS = tuple(range(10))
T = 50_000
TDMA_X = (2, 3, 7, 8)
ALOHA_Q = (0.2, 0.5, 0.8)
MIXED = (TDMA.first(2, 10), QAloha(0.1))
PREEMPTION = (TDMA.first(2, 10), QAloha(0.1), QAloha(0.1))


@dataclass(frozen=True)
class Summary:
    final: np.ndarray  # per-node final-window throughput
    cumulative: dict  # t -> per-node cumulative throughput


CHECKPOINTS = (5000, 10_000, 50_000)


@functools.lru_cache(maxsize=None)
def batch(config: ScenarioConfig) -> tuple[Summary, ...]:
    out = []
    for seed in SEEDS:
        m = run(config.replace(seed=seed))
        cum = {t: m.cumulative_at(t) for t in CHECKPOINTS if t <= m.slots}
        out.append(Summary(m.final_window(), cum))
    return tuple(out)


def mean_final(config) -> np.ndarray:
    return np.mean([s.final for s in batch(config)], axis=0)


def mean_cum_sum(config, t) -> float:
    return float(np.mean([s.cumulative[t].sum() for s in batch(config)]))


def sum_config(legacy, **kw) -> ScenarioConfig:
    return ScenarioConfig(legacy=tuple(legacy), mode=DQN_SUM, **{"slots": T, **kw})


def fair_config(legacy, agents=1, **kw) -> ScenarioConfig:
    return ScenarioConfig(legacy=tuple(legacy), mode=DQN_FAIR, alpha=1.0, agents=agents, **{"slots": T, **kw})


def fmt(v) -> str:
    return "(" + ", ".join(f"{x:.3f}" for x in np.atleast_1d(v)) + ")"


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_tdma_optimality(report):
    parts, ok = [], True
    for x in TDMA_X:
        legacy = (TDMA.first(x, 10),)
        oracle = optimal_sum(legacy).sum_throughput
        got = mean_final(sum_config(legacy)).sum()
        ok &= got >= 0.95 * oracle
        parts.append(f"X={x}: {got:.3f} (need >= {0.95 * oracle:.3f})")
    report("1", ok, "DRL+TDMA sum throughput; " + "; ".join(parts))
    assert ok


# -- 2 ----------------------------------------------------------------------


def test_criterion_2_q_aloha(report):
    parts, ok = [], True
    for q in ALOHA_Q:
        legacy = (QAloha(q),)
        oracle = optimal_sum(legacy).sum_throughput
        assert oracle == pytest.approx(max(q, 1 - q))
        got = mean_final(sum_config(legacy)).sum()
        ok &= abs(got - oracle) <= 0.05
        parts.append(f"q={q}: {got:.3f} vs {oracle:.3f}")
    report("2", ok, "DRL+q-ALOHA sum throughput within 0.05; " + "; ".join(parts))
    assert ok


# -- 3 ----------------------------------------------------------------------


def test_criterion_3_mixed(report):
    oracle = optimal_sum(MIXED).sum_throughput
    assert oracle == pytest.approx(0.9)
    got = mean_final(sum_config(MIXED)).sum()
    ok = abs(got - oracle) <= 0.05
    report("3", ok, f"TDMA(2,10)+q-ALOHA(0.1) sum throughput {got:.3f} vs {oracle:.3f} (tol 0.05)")
    assert ok


# -- 4 ----------------------------------------------------------------------


def test_criterion_4_convergence_speed(report):
    parts, ok = [], True
    for x in TDMA_X:
        cum = mean_cum_sum(sum_config((TDMA.first(x, 10),)), 5000)
        ok &= cum >= 0.8
        parts.append(f"DQN X={x} cum@5000 {cum:.3f}")
    legacy = (TDMA.first(2, 10),)
    for m in (10, 16):
        tab = mean_cum_sum(ScenarioConfig(legacy=legacy, mode=TABULAR_RL, history=m, slots=10_000), 10_000)
        dqn = mean_cum_sum(sum_config(legacy, history=m, slots=10_000), 10_000)
        ok &= tab < dqn
        parts.append(f"M={m} cum@10000 tabular {tab:.3f} < DQN {dqn:.3f}")
    report("4", ok, "; ".join(parts))
    assert ok


# -- 5 ----------------------------------------------------------------------


def test_criterion_5_proportional_fairness(report):
    cases = [(f"X={x}", (TDMA.first(x, 10),)) for x in TDMA_X]
    cases += [(f"q={q}", (QAloha(q),)) for q in ALOHA_Q]
    cases += [("mixed", MIXED)]
    parts, ok = [], True
    for name, legacy in cases:
        oracle = optimal_alpha_fair(legacy, 1.0).per_node
        got = mean_final(fair_config(legacy))
        err = np.abs(got - oracle).max()
        ok &= err <= 0.05
        parts.append(f"{name}: {fmt(got)} vs {fmt(oracle)}")
    report("5", ok, "alpha=1 per-node throughput within 0.05; " + "; ".join(parts))
    assert ok


# -- 6 ----------------------------------------------------------------------


def test_criterion_6_preemption_and_big_agent(report):
    n_legacy = len(PREEMPTION)
    sum_oracle = optimal_sum(PREEMPTION, agents=3).sum_throughput
    multi = batch(ScenarioConfig(legacy=PREEMPTION, mode=MULTI_INDEPENDENT, agents=3, slots=T))
    multi_sum = float(np.mean([s.final.sum() for s in multi]))
    near_optimal = abs(multi_sum - sum_oracle) <= 0.05
    starved = [i for i, s in enumerate(multi) if s.final[:n_legacy].min() < 0.02]
    drl_starved = [i for i, s in enumerate(multi) if s.final[n_legacy:].min() < 0.02]

    fair = optimal_alpha_fair(PREEMPTION, 1.0, agents=3).per_node
    big = mean_final(fair_config(PREEMPTION, agents=3))
    # every node must keep at least half of its proportional-fair share
    lifted = bool(np.all(big >= 0.5 * fair))

    ok = near_optimal and bool(starved) and lifted
    report(
        "6", ok,
        f"independent DQNs sum {multi_sum:.3f} vs optimum {sum_oracle:.3f} (tol 0.05); "
        f"seeds with a legacy node < 0.02: {len(starved)}/{len(SEEDS)}, "
        f"with a DRL node < 0.02: {len(drl_starved)}/{len(SEEDS)}; "
        f"big agent alpha=1 per node {fmt(big)} vs oracle {fmt(fair)} (need >= half)",
    )
    assert ok


# -- 7 ----------------------------------------------------------------------


def _gradient_check() -> float:
    g = np.random.default_rng(7)
    worst = 0.0
    for trial in range(100):
        arch = PLAIN if trial % 2 else RESNET
        layers = int(g.integers(1, 5)) if arch == PLAIN else int(2 * g.integers(1, 3))
        spec = NetworkSpec(int(g.integers(1, 9)), int(g.integers(1, 9)), int(g.integers(1, 9)), layers, arch)
        net = Network.initialized(spec, g)
        for b in net.biases:
            b[...] = g.normal(0, 0.1, b.shape)
        x = g.normal(size=(int(g.integers(1, 4)), spec.n_in))
        dout = g.normal(size=(x.shape[0], spec.n_out))
        _, cache = net.forward_cached(x)
        analytic = net.backward(cache, dout)
        numeric = np.zeros_like(analytic)
        for i in range(net.theta.size):
            old = net.theta[i]
            net.theta[i] = old + 1e-5
            up = np.sum(dout * net.forward(x))
            net.theta[i] = old - 1e-5
            down = np.sum(dout * net.forward(x))
            net.theta[i] = old
            numeric[i] = (up - down) / 2e-5
        scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / scale)))
    return worst


def _fifo_exact() -> bool:
    cap, extra = 500, 137
    mem = ReplayMemory(cap, 1)
    for k in range(cap + extra):
        mem.push(np.array([k]), 0, [k], np.array([k]))
    return [int(r[0]) for _, _, r, _ in mem] == list(range(extra, cap + extra))


def _epsilon_closed_form() -> bool:
    eps = EpsilonSchedule()
    return all(eps(t) == max(0.005, 0.1 * 0.995**t) for t in range(3000))


def _target_sync() -> bool:
    g = np.random.default_rng(1)
    agent = DQNAgent(g)
    channel = Channel.build([TDMA.first(3, 10)], 1, g)
    ok, snapshot = True, None
    for t in range(601):
        a = agent.act(g)
        out = channel.step([a == 1])
        agent.observe(a, out.observation, (float(out.observation == Observation.SUCCESS),), g)
        if t % agent.target_every == 0:
            ok &= np.array_equal(agent.target.theta, agent.online.theta)
            snapshot = agent.online.theta.copy()
        else:
            ok &= np.array_equal(agent.target.theta, snapshot)
    return bool(ok)


def _arbitration_table() -> bool:
    ok = True
    for n in range(1, 5):
        for flags in itertools.product((False, True), repeat=n):
            out = arbitrate(flags)
            k = sum(flags)
            ok &= out.success.sum() == (k == 1)
            ok &= out.observation == {0: Observation.IDLENESS, 1: Observation.SUCCESS}.get(k, Observation.COLLISION)
    return bool(ok)


def _reduction_identical() -> bool:
    def trace(fair: bool):
        g = np.random.default_rng(2024)
        if fair:
            agent = FairDQNAgent(g, FairnessObjective(alpha=0.0, agents=1, legacy=0))
        else:
            agent = DQNAgent(g)
        channel = Channel.build([TDMA.first(3, 10), QAloha(0.2)], 1, g)
        actions = []
        for _ in range(2000):
            a = agent.act(g)
            out = channel.step([a == 1])
            agent.observe(a, out.observation, (float(out.observation == Observation.SUCCESS),), g)
            actions.append(a)
        return actions, agent.online.theta.tobytes()

    scalar, fair = trace(False), trace(True)
    # harness level: with no legacy nodes both modes see the same reward
    base = ScenarioConfig(slots=1500, seed=5)
    same_run = run(base).rewards.tobytes() == run(base.replace(mode=DQN_FAIR, alpha=0.0)).rewards.tobytes()
    return scalar == fair and same_run


def _argmax_invariance() -> bool:
    g = np.random.default_rng(3)
    ok = True
    for alpha in (0.0, 0.5, 1.0, 2.0, 5.0):
        obj = FairnessObjective(alpha=alpha, agents=1, legacy=0)
        for _ in range(500):
            q = g.uniform(1e-3, 20.0, size=2)
            ok &= fairness_select(q, obj) == int(np.argmax(q))
    return bool(ok)


def test_criterion_7_property_suite(report):
    worst = _gradient_check()
    checks = {
        f"gradient rel err {worst:.1e} < 1e-4": worst < 1e-4,
        "replay FIFO": _fifo_exact(),
        "epsilon closed form": _epsilon_closed_form(),
        "target sync at multiples of F": _target_sync(),
        "arbitration truth table": _arbitration_table(),
        "multi-dim learner == scalar DQN": _reduction_identical(),
        "argmax invariance": _argmax_invariance(),
    }
    ok = all(checks.values())
    report("7", ok, "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()))
    assert ok


# -- 8 ----------------------------------------------------------------------


def test_criterion_8_resnet_depth(report):
    legacy = (TDMA.first(2, 10),)
    parts, ok = [], True
    for h in (2, 6):
        cum = mean_cum_sum(sum_config(legacy, hidden_layers=h, arch=RESNET), T)
        ok &= cum >= 0.9
        parts.append(f"h={h}: {cum:.3f}")
    report("8", ok, "ResNet cumulative sum throughput at T=50000 >= 0.9; " + "; ".join(parts))
    assert ok

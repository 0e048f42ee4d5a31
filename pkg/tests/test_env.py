import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlma.env import (
    TDMA,
    Action,
    Channel,
    EBAloha,
    FWAloha,
    NodeState,
    Observation,
    QAloha,
    arbitrate,
    env_step,
    init_node,
    protocol_advance,
    protocol_decide,
)


def rng(seed=0):
    return np.random.default_rng(seed)


# -- protocol specs ---------------------------------------------------------


@pytest.mark.parametrize(
    "make",
    [
        lambda: TDMA((), 10),
        lambda: TDMA((10,), 10),
        lambda: TDMA((-1,), 10),
        lambda: QAloha(1.5),
        lambda: QAloha(-0.1),
        lambda: FWAloha(0),
        lambda: EBAloha(0, 1),
        lambda: EBAloha(2, -1),
    ],
)
def test_invalid_protocols_rejected(make):
    with pytest.raises(ValueError):
        make()


# -- protocol_decide --------------------------------------------------------


def test_tdma_decides_by_frame_position():
    node = NodeState(TDMA((1, 3), 10))
    assert protocol_decide(node, 13, rng())
    assert not protocol_decide(node, 12, rng())
    assert [protocol_decide(node, t, rng()) for t in range(10)].count(True) == 2


def test_degenerate_aloha_probabilities():
    g = rng()
    never, always = NodeState(QAloha(0.0)), NodeState(QAloha(1.0))
    assert not any(protocol_decide(never, t, g) for t in range(1000))
    assert all(protocol_decide(always, t, g) for t in range(1000))


def test_fw_counter_decrements_then_fires():
    node = NodeState(FWAloha(4), counter=2)
    g = rng()
    assert not protocol_decide(node, 0, g)
    protocol_advance(node, False, False, g)
    assert node.counter == 1
    protocol_advance(node, False, False, g)
    assert protocol_decide(node, 2, g)


def test_fw_redraws_after_transmission():
    g = rng(3)
    draws = set()
    for _ in range(500):
        node = NodeState(FWAloha(4), counter=0)
        protocol_advance(node, True, False, g)
        draws.add(node.counter)
    assert draws == {0, 1, 2, 3}


def test_q_aloha_frequency_within_binomial_bounds():
    q, n = 0.3, 100_000
    node = NodeState(QAloha(q))
    g = rng(11)
    hits = sum(protocol_decide(node, t, g) for t in range(n))
    sigma = np.sqrt(n * q * (1 - q))
    assert abs(hits - n * q) < 3 * sigma


# -- EB-ALOHA backoff -------------------------------------------------------


def test_eb_collision_doubles_window():
    g = rng(5)
    seen = set()
    for _ in range(400):
        node = NodeState(EBAloha(2, 2), counter=0, stage=1)
        protocol_advance(node, True, True, g)
        assert node.stage == 2
        seen.add(node.counter)
    assert seen == set(range(8))


def test_eb_stage_capped():
    node = NodeState(EBAloha(2, 2), counter=0, stage=2)
    protocol_advance(node, True, True, rng())
    assert node.stage == 2
    assert node.counter <= 7


def test_eb_success_resets_window():
    g = rng(1)
    for _ in range(100):
        node = NodeState(EBAloha(2, 2), counter=0, stage=2)
        protocol_advance(node, True, False, g)
        assert node.stage == 0
        assert node.counter in (0, 1)


@given(st.integers(1, 6), st.integers(0, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_eb_counter_bounded_by_window(w, m, seed):
    g = rng(seed)
    node = init_node(EBAloha(w, m), g)
    for _ in range(300):
        tx = protocol_decide(node, 0, g)
        protocol_advance(node, tx, tx and g.random() < 0.6, g)
        assert 0 <= node.stage <= m
        assert 0 <= node.counter <= (2 ** min(node.stage, m)) * w - 1


def test_window_nodes_start_in_initial_window():
    g = rng(2)
    for _ in range(200):
        assert init_node(FWAloha(3), g).counter < 3
        node = init_node(EBAloha(3, 4), g)
        assert node.counter < 3 and node.stage == 0


# -- arbitration ------------------------------------------------------------


def test_arbitration_truth_table():
    idle = arbitrate([False, False])
    assert idle.observation == Observation.IDLENESS and not idle.success.any()
    single = arbitrate([True, False])
    assert single.observation == Observation.SUCCESS
    assert single.success.tolist() == [True, False]
    crash = arbitrate([True, True, True])
    assert crash.observation == Observation.COLLISION and not crash.success.any()
    assert crash.transmitters == 3


def test_arbitrate_rejects_empty():
    with pytest.raises(ValueError):
        arbitrate([])


@given(st.lists(st.booleans(), min_size=1, max_size=12))
def test_arbitration_invariants(flags):
    out = arbitrate(flags)
    n = sum(flags)
    assert out.transmitters == n
    assert out.success.sum() == (1 if n == 1 else 0)
    expected = {0: Observation.IDLENESS, 1: Observation.SUCCESS}.get(n, Observation.COLLISION)
    assert out.observation == expected
    if n == 1:
        assert flags[int(np.flatnonzero(out.success)[0])]


# -- env_step ---------------------------------------------------------------


def test_agent_alone_succeeds():
    ch = Channel.build([QAloha(0.0)], 1, rng())
    outcome, rewards = env_step(ch, Action.TRANSMIT)
    assert outcome.observation == Observation.SUCCESS
    assert rewards.tolist() == [0, 1]


def test_legacy_success_rewards_that_node():
    ch = Channel.build([QAloha(1.0)], 1, rng())
    outcome, rewards = env_step(ch, Action.WAIT)
    assert outcome.observation == Observation.SUCCESS
    assert rewards.tolist() == [1, 0]


def test_transmit_into_tdma_slot_collides():
    ch = Channel.build([TDMA((0,), 10)], 1, rng())
    outcome, rewards = env_step(ch, Action.TRANSMIT)
    assert outcome.observation == Observation.COLLISION
    assert rewards.tolist() == [0, 0]


def test_channel_checks_agent_count():
    ch = Channel.build([QAloha(0.5)], 2, rng())
    with pytest.raises(ValueError):
        ch.step([True])


def _trajectory(seed, slots=2000):
    g = rng(seed)
    ch = Channel.build([TDMA((0, 4), 10), QAloha(0.3), FWAloha(3), EBAloha(2, 3)], 2, g)
    log = []
    for _ in range(slots):
        out = ch.step([g.random() < 0.2, g.random() < 0.1])
        log.append((out.success.tobytes(), int(out.observation)))
    return log


def test_trajectories_reproducible():
    assert _trajectory(9) == _trajectory(9)
    assert _trajectory(9) != _trajectory(10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_at_most_one_success_per_slot(seed):
    g = rng(seed)
    ch = Channel.build([TDMA((1,), 3), QAloha(0.4), FWAloha(2), EBAloha(1, 2)], 1, g)
    wins = np.zeros(ch.n_nodes)
    for _ in range(500):
        out = ch.step(g.random() < 0.5)
        assert out.rewards.sum() <= 1
        wins += out.rewards
    assert wins.sum() / 500 <= 1.0

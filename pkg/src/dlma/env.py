"""Time-slotted shared channel with TDMA and ALOHA-family legacy nodes.

Node indexing is global and fixed for a run: legacy nodes take indices
``0 .. L-1`` in declaration order, learning (DRL) nodes follow at
``L .. L+n-1``.  Every per-node vector in this package uses that layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence, Union

import numpy as np


class Action(IntEnum):
    WAIT = 0
    TRANSMIT = 1


class Observation(IntEnum):
    SUCCESS = 0
    COLLISION = 1
    IDLENESS = 2


# --------------------------------------------------------------------------
# protocol descriptions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TDMA:
    """Transmits in a fixed set of slots inside every frame of ``frame`` slots."""

    slots: tuple[int, ...]
    frame: int

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(sorted(set(int(s) for s in self.slots))))
        if self.frame < 1:
            raise ValueError(f"TDMA frame length must be >= 1, got {self.frame}")
        if not self.slots:
            raise ValueError("TDMA slot set must be nonempty")
        if self.slots[0] < 0 or self.slots[-1] >= self.frame:
            raise ValueError(f"TDMA slots {self.slots} outside frame [0, {self.frame - 1}]")

    @classmethod
    def first(cls, count: int, frame: int) -> "TDMA":
        """The node owning slots ``0 .. count-1`` of each frame."""
        return cls(tuple(range(count)), frame)


@dataclass(frozen=True)
class QAloha:
    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q-ALOHA transmit probability must be in [0, 1], got {self.q}")


@dataclass(frozen=True)
class FWAloha:
    window: int

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"FW-ALOHA window must be >= 1, got {self.window}")


@dataclass(frozen=True)
class EBAloha:
    window: int
    max_stage: int

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"EB-ALOHA initial window must be >= 1, got {self.window}")
        if self.max_stage < 0:
            raise ValueError(f"EB-ALOHA maximum backoff stage must be >= 0, got {self.max_stage}")


ProtocolSpec = Union[TDMA, QAloha, FWAloha, EBAloha]


# --------------------------------------------------------------------------
# node state machines
# --------------------------------------------------------------------------


@dataclass
class NodeState:
    """Mutable per-node protocol state.

    ``counter`` and ``stage`` are only meaningful for the window ALOHA
    variants; a fixed-window node is an exponential-backoff node whose
    stage never leaves 0.
    """

    protocol: ProtocolSpec
    counter: int = 0
    stage: int = 0

    @property
    def window(self) -> int:
        """Current contention window (slots) for window ALOHA variants."""
        return (1 << self.stage) * self.protocol.window


def init_node(protocol: ProtocolSpec, rng: np.random.Generator) -> NodeState:
    """Fresh node; window ALOHA counters start uniform on ``[0, W-1]``."""
    node = NodeState(protocol)
    if isinstance(protocol, (FWAloha, EBAloha)):
        node.counter = int(rng.integers(protocol.window))
    return node


def protocol_decide(node: NodeState, slot: int, rng: np.random.Generator) -> bool:
    """Whether ``node`` transmits in ``slot``.  Only q-ALOHA consumes randomness."""
    p = node.protocol
    if isinstance(p, TDMA):
        return slot % p.frame in p.slots
    if isinstance(p, QAloha):
        return bool(rng.random() < p.q)
    return node.counter == 0


def protocol_advance(
    node: NodeState, transmitted: bool, collided: bool, rng: np.random.Generator
) -> NodeState:
    """Update ``node`` in place after a slot and return it."""
    p = node.protocol
    if isinstance(p, FWAloha):
        if transmitted:
            node.counter = int(rng.integers(p.window))
        else:
            node.counter = max(node.counter - 1, 0)
    elif isinstance(p, EBAloha):
        if transmitted:
            if collided:
                node.stage = min(node.stage + 1, p.max_stage)
            else:
                node.stage = 0
            node.counter = int(rng.integers(node.window))
        else:
            node.counter = max(node.counter - 1, 0)
    return node


# --------------------------------------------------------------------------
# channel arbitration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotOutcome:
    success: np.ndarray  # bool, one flag per node
    observation: Observation
    transmitters: int

    @property
    def rewards(self) -> np.ndarray:
        return self.success.astype(np.int8)


def arbitrate(transmit_flags: Sequence[bool]) -> SlotOutcome:
    flags = np.asarray(transmit_flags, dtype=bool)
    if flags.ndim != 1 or flags.size == 0:
        raise ValueError("arbitrate needs a nonempty 1-d vector of transmit flags")
    n_tx = int(flags.sum())
    if n_tx == 0:
        z = Observation.IDLENESS
    elif n_tx == 1:
        z = Observation.SUCCESS
    else:
        z = Observation.COLLISION
    success = flags.copy() if n_tx == 1 else np.zeros_like(flags)
    return SlotOutcome(success, z, n_tx)


# --------------------------------------------------------------------------
# environment
# --------------------------------------------------------------------------


@dataclass
class Channel:
    """Shared channel with ``legacy`` protocol nodes and ``n_agents`` learners.

    All randomness is drawn from ``rng`` in a fixed order each slot: legacy
    decisions in node order, then legacy counter redraws in node order.
    """

    legacy: list[NodeState]
    n_agents: int = 1
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    slot: int = 0

    @classmethod
    def build(
        cls, protocols: Sequence[ProtocolSpec], n_agents: int = 1, rng: np.random.Generator | None = None
    ) -> "Channel":
        rng = rng if rng is not None else np.random.default_rng()
        return cls([init_node(p, rng) for p in protocols], n_agents, rng)

    @property
    def n_legacy(self) -> int:
        return len(self.legacy)

    @property
    def n_nodes(self) -> int:
        return self.n_legacy + self.n_agents

    def legacy_decisions(self) -> np.ndarray:
        return np.array([protocol_decide(n, self.slot, self.rng) for n in self.legacy], dtype=bool)

    def step(self, agent_transmit: Sequence[bool] | bool) -> SlotOutcome:
        """Simulate one slot given the learners' decisions.

        The observation is common to every node: with an error-free ACK a
        transmitter learns SUCCESS/COLLISION, a listener senses the channel.
        """
        if isinstance(agent_transmit, (bool, np.bool_, int, np.integer)):
            agent_transmit = [bool(agent_transmit)]
        if len(agent_transmit) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} agent decisions, got {len(agent_transmit)}")
        legacy_tx = self.legacy_decisions()
        flags = np.concatenate([legacy_tx, np.asarray(agent_transmit, dtype=bool)])
        outcome = arbitrate(flags)
        collided = outcome.transmitters >= 2
        for node, tx in zip(self.legacy, legacy_tx):
            protocol_advance(node, bool(tx), collided and bool(tx), self.rng)
        self.slot += 1
        return outcome


def env_step(channel: Channel, agent_action: Action | int) -> tuple[SlotOutcome, np.ndarray]:
    """One slot with a single learner; returns the outcome and per-node rewards."""
    outcome = channel.step([agent_action == Action.TRANSMIT])
    return outcome, outcome.rewards

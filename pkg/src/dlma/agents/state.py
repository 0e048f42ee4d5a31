"""Agent state: the last M (action, observation) pairs seen on the channel."""
from __future__ import annotations

import numpy as np

from dlma.env import Action, Observation

# index of each valid (action, observation) pair in the one-hot code
PAIR_CODES = {
    (Action.TRANSMIT, Observation.SUCCESS): 0,
    (Action.TRANSMIT, Observation.COLLISION): 1,
    (Action.WAIT, Observation.SUCCESS): 2,
    (Action.WAIT, Observation.COLLISION): 3,
    (Action.WAIT, Observation.IDLENESS): 4,
}
UNINIT = 5
N_CATEGORIES = 6

_ONE_HOT = np.eye(N_CATEGORIES)

AgentState = tuple  # tuple[int, ...] of pair codes, oldest first


def pair_code(action: Action | int, observation: Observation | int) -> int:
    try:
        return PAIR_CODES[(Action(action), Observation(observation))]
    except KeyError:
        raise ValueError(
            f"invalid channel state pair ({Action(action).name}, {Observation(observation).name})"
        ) from None


def initial_state(history: int) -> AgentState:
    if history < 1:
        raise ValueError(f"state history length must be >= 1, got {history}")
    return (UNINIT,) * history


def update_state(state: AgentState, action: Action | int, observation: Observation | int) -> AgentState:
    """Slide the window: drop the oldest pair, append ``(action, observation)``."""
    return state[1:] + (pair_code(action, observation),)


def encode(state: AgentState) -> np.ndarray:
    """Concatenated one-hot codes, length ``6 * M``."""
    return _ONE_HOT[list(state)].ravel()


def state_width(history: int) -> int:
    return N_CATEGORIES * history

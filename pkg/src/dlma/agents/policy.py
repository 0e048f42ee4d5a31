from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exponential decay per slot down to a floor: ``max(floor, start * decay**t)``."""

    start: float = 0.1
    decay: float = 0.995
    floor: float = 0.005

    def __post_init__(self):
        if not 0.0 <= self.floor <= self.start <= 1.0:
            raise ValueError(f"need 0 <= floor <= start <= 1, got {self.floor}, {self.start}")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")

    def __call__(self, t: int) -> float:
        return max(self.floor, self.start * self.decay**t)


def argmax_random(scores: np.ndarray, rng: np.random.Generator) -> int:
    """Index of the maximum; ties broken uniformly at random.

    The generator is only consumed when there is a tie.
    """
    scores = np.asarray(scores)
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1:
        return int(best[0])
    return int(best[rng.integers(best.size)])


def epsilon_greedy(scores, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    scores = np.asarray(scores)
    if scores.size == 0:
        raise ValueError("epsilon_greedy needs at least one action")
    if rng.random() < epsilon:
        return int(rng.integers(scores.size))
    return argmax_random(scores, rng)

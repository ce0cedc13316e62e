"""Comparator learners: sleeping UCB, uniform random, fixed-ordering player."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from sleeping_bandits.core import AvailabilitySet


class SleepingUcb:
    """UCB restricted to the awake arms, in losses-as-costs form.

    Picks ``argmin mu_hat_k - sqrt(c * ln(t) / n_k)`` over the awake arms;
    unpulled awake arms take priority (index -inf) and ties break toward the
    lowest arm id. Strong when a single fixed ranking of the arms is optimal,
    linear-regret when the best arm depends on which set is awake.
    """

    def __init__(self, n_arms: int, c: float = 2.0):
        self.n_arms = n_arms
        self.c = float(c)
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.mean_loss = np.zeros(n_arms)
        self.rounds = 0

    def index(self) -> np.ndarray:
        t = max(self.rounds, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            bonus = np.sqrt(self.c * math.log(t) / self.counts)
        idx = self.mean_loss - bonus
        idx[self.counts == 0] = -np.inf
        return idx

    def decide(self, awake: AvailabilitySet, rng: Optional[np.random.Generator] = None) -> int:
        idx = self.index()[awake.indices]
        return int(awake.indices[int(np.argmin(idx))])

    def observe(self, awake: AvailabilitySet, arm: int, loss: float) -> None:
        self.rounds += 1
        n = self.counts[arm] = self.counts[arm] + 1
        self.mean_loss[arm] += (loss - self.mean_loss[arm]) / n


class UniformRandom:
    """Plays a uniformly random awake arm; control baseline."""

    def __init__(self, n_arms: int):
        self.n_arms = n_arms

    def decide(self, awake: AvailabilitySet, rng: np.random.Generator) -> int:
        return int(awake.indices[rng.integers(len(awake))])

    def observe(self, awake: AvailabilitySet, arm: int, loss: float) -> None:
        pass


class FixedOrderingPlayer:
    """Scripted player: always the highest-priority awake arm of a fixed ordering."""

    def __init__(self, order: tuple[int, ...]):
        if sorted(order) != list(range(len(order))):
            raise ValueError("order must be a permutation of the arms")
        self.order = tuple(order)
        self.n_arms = len(order)

    def decide(self, awake: AvailabilitySet, rng: Optional[np.random.Generator] = None) -> int:
        for arm in self.order:
            if awake.mask[arm]:
                return arm
        raise ValueError("empty availability set")

    def observe(self, awake: AvailabilitySet, arm: int, loss: float) -> None:
        pass

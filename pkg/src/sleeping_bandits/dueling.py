"""Sleeping dueling bandits: pair availabilities, sparring reduction, accounting.

A duel round restricted to the feasible pair set works in two stages: the
left learner picks its arm over the induced awake set, the right learner then
picks over the left arm's feasible opponents. Both sides consume the same
realized coin: the left side's loss is ``1 - outcome`` and the right side's
is ``outcome``, where ``outcome = 1`` means the left arm won. Regret compares
each played arm against its best awake competitor, and decomposes exactly
into the two sides' comparator gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Protocol

import numpy as np

from sleeping_bandits.core import AvailabilitySet, PairAvailability

DECOMPOSITION_TOL = 1e-9


class MabLearner(Protocol):
    def decide(self, awake: AvailabilitySet, rng: np.random.Generator) -> int: ...

    def observe(self, awake: AvailabilitySet, arm: int, loss: float) -> None: ...


@dataclass
class PreferenceMatrix:
    """Pairwise win probabilities with ``P(i, j) + P(j, i) = 1``."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.matrix, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("preference matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("win probabilities must lie in [0, 1]")
        if np.abs(p + p.T - 1.0).max() > 1e-12:
            raise ValueError("preference matrix must satisfy P + P^T = 1")
        self.matrix = p

    @property
    def n_arms(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_utilities(cls, utilities: Iterable[float]) -> "PreferenceMatrix":
        """``P(i, j) = u_i / (u_i + u_j)`` for positive utilities."""
        u = np.asarray(list(utilities), dtype=np.float64)
        if np.any(u <= 0):
            raise ValueError("utilities must be strictly positive")
        return cls(u[:, None] / (u[:, None] + u[None, :]))

    def total_order(self) -> Optional[tuple[int, ...]]:
        """Ranking with pointwise row dominance, best first, or None."""
        order = np.argsort(-self.matrix.sum(axis=1), kind="stable")
        rows = self.matrix[order]
        if np.all(rows[:-1] >= rows[1:] - 1e-12):
            return tuple(int(a) for a in order)
        return None

    def condorcet_winner(self) -> Optional[int]:
        p = self.matrix
        for i in range(self.n_arms):
            if all(p[i, j] > 0.5 for j in range(self.n_arms) if j != i):
                return i
        return None


def duel_increment(avail: PairAvailability, p: np.ndarray, i: int, j: int) -> float:
    """One round of best-available-competitor regret for the played pair."""
    best_vs_i = float(p[avail.slice_of(i), i].max())
    best_vs_j = float(p[avail.slice_of(j), j].max())
    return 0.5 * (best_vs_i + best_vs_j - 1.0)


def sidb_regret(trace: Iterable[tuple[PairAvailability, int, int]],
                preferences: PreferenceMatrix) -> float:
    """Cumulative duel regret of a played (availability, i, j) sequence."""
    p = preferences.matrix
    return sum(duel_increment(avail, p, i, j) for avail, i, j in trace)


class SiDbLedger:
    """Online duel-regret accountant with the exact two-sided split check.

    Per round the increment also equals
    ``(P(j,i) - P(j,i*))/2 + (P(i,j) - P(i,j*))/2`` where ``i*``/``j*`` are
    the best awake competitors of the played arms; the ledger recomputes the
    increment both ways and fails if they ever drift apart. The benchmark
    semantics assume a total order on the preferences; without one the ledger
    still accumulates but flags itself non-interpretable.
    """

    def __init__(self, n_arms: int, *, check_decomposition: bool = True):
        self.n_arms = n_arms
        self.check_decomposition = check_decomposition
        self.rounds = 0
        self.cum_regret = 0.0
        self.cum_left_gap = 0.0
        self.cum_right_gap = 0.0
        self.interpretable = True
        self._order_checked: set[int] = set()

    def record(self, avail: PairAvailability, i: int, j: int,
               preferences: PreferenceMatrix) -> float:
        p = preferences.matrix
        if self.interpretable and id(preferences) not in self._order_checked:
            self._order_checked.add(id(preferences))
            if preferences.total_order() is None:
                self.interpretable = False
        cand_i = avail.slice_of(i)
        cand_j = avail.slice_of(j)
        best_vs_i = int(cand_i[np.argmax(p[cand_i, i])])
        best_vs_j = int(cand_j[np.argmax(p[cand_j, j])])
        inc = 0.5 * (p[best_vs_i, i] + p[best_vs_j, j] - 1.0)
        left_gap = 0.5 * (p[j, i] - p[j, best_vs_j])
        right_gap = 0.5 * (p[i, j] - p[i, best_vs_i])
        if self.check_decomposition and abs(inc - (left_gap + right_gap)) > DECOMPOSITION_TOL:
            raise RuntimeError(
                f"duel regret split drifted at round {self.rounds + 1}: "
                f"{inc} vs {left_gap} + {right_gap}"
            )
        self.rounds += 1
        self.cum_regret += inc
        self.cum_left_gap += left_gap
        self.cum_right_gap += right_gap
        return inc


class SparringDuel:
    """Two bandit learners facing each other through one duel per round."""

    def __init__(self, left: MabLearner, right: MabLearner, n_arms: int):
        self.left = left
        self.right = right
        self.n_arms = n_arms

    def round(self, avail: PairAvailability, preferences: PreferenceMatrix,
              rng_env: np.random.Generator, rng_left: np.random.Generator,
              rng_right: np.random.Generator) -> tuple[int, int, int]:
        """Play one duel; returns (left arm, right arm, outcome)."""
        awake = avail.induced_awake()
        i = self.left.decide(awake, rng_left)
        opponents = AvailabilitySet(self.n_arms, avail.allowed[i])
        j = self.right.decide(opponents, rng_right)
        outcome = int(rng_env.random() < preferences.matrix[i, j])
        self.left.observe(awake, i, 1.0 - outcome)
        self.right.observe(opponents, j, float(outcome))
        return i, j, outcome


# ---------------------------------------------------------------------------
# dueling environments
# ---------------------------------------------------------------------------


class UtilityDuelEnv:
    """Non-repeating duels under one utility-based preference matrix per run."""

    kind = "dueling"
    name = "duel_utility"

    def __init__(self, rng: np.random.Generator, n_arms: int = 10,
                 utilities: Optional[Iterable[float]] = None):
        self.n_arms = n_arms
        if utilities is None:
            u = rng.random(n_arms)
            while np.any(u <= 0):
                u = rng.random(n_arms)
        else:
            u = np.asarray(list(utilities), dtype=np.float64)
        self.utilities = u
        self.preferences = PreferenceMatrix.from_utilities(u)
        self.avail = PairAvailability.non_repeating(n_arms)

    def step(self, rng: np.random.Generator) -> tuple[PairAvailability, PreferenceMatrix, dict]:
        return self.avail, self.preferences, {}

    def params(self) -> dict:
        return {"name": self.name, "utilities": self.utilities.tolist()}


class CategoriesDuelEnv:
    """Availability-dependent preferences: one excluded arm rotates the utilities.

    Round draw ``r`` removes arm ``r`` from play and selects the utility
    vector cyclically shifted by ``r``, so the identity of the best awake arm
    depends on which arm is missing.
    """

    kind = "dueling"
    name = "duel_categories"

    def __init__(self, rng: np.random.Generator, n_arms: int = 5):
        if n_arms < 3:
            raise ValueError("need at least three arms for non-repeating pairs")
        self.n_arms = n_arms
        base = np.arange(1, n_arms + 1, dtype=np.float64)
        self.utility_vectors = [np.roll(base, r) for r in range(n_arms)]
        self.preference_matrices = [
            PreferenceMatrix.from_utilities(u) for u in self.utility_vectors
        ]
        self.availabilities = [
            PairAvailability.non_repeating(n_arms, [a for a in range(n_arms) if a != r])
            for r in range(n_arms)
        ]

    def step(self, rng: np.random.Generator) -> tuple[PairAvailability, PreferenceMatrix, dict]:
        r = int(rng.integers(self.n_arms))
        return self.availabilities[r], self.preference_matrices[r], {"excluded": r + 1}

    def params(self) -> dict:
        return {
            "name": self.name,
            "n_arms": self.n_arms,
            "utility_vectors": [u.tolist() for u in self.utility_vectors],
        }

"""Two-level exponential-weights learner over ordered arm-pair experts.

One expert per ordered pair ``i -> j`` (``i != j``) accumulates estimated
losses; each round the expert weights are renormalized over pairs whose
target arm is awake, and the played distribution is the stationary point of
the induced mass-transport system (see :mod:`sleeping_bandits.fixed_point`).
Driving every pair expert's regret down simultaneously controls the internal
sleeping regret, which in turn bounds external regret on any loss sequence
and ordering regret on i.i.d. losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from sleeping_bandits.core import ArmDistribution, AvailabilitySet, PairWeights
from sleeping_bandits.fixed_point import solve_stationary

MIN_PLAY_PROB = 1e-300

SCHEDULE_KINDS = ("sqrt_t", "fixed", "adaptive")


@dataclass(frozen=True)
class LearningRateSchedule:
    """Learning-rate schedule for the pair-expert weights.

    - ``sqrt_t``: eta_t = t^(-1/2); the default used by the benchmark runs.
    - ``fixed``: eta = sqrt(log(K) / (2*K*T)); the horizon-tuned constant rate
      obtained by bounding the total availability mass by K*T.
    - ``adaptive``: eta_t = sqrt(log(K) / (2 * sum_{s<=t} |S_s|)); tracks the
      realized availability mass online.
    """

    kind: str = "sqrt_t"
    horizon: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule {self.kind!r}; choose from {SCHEDULE_KINDS}")
        if self.kind == "fixed" and (self.horizon is None or self.horizon < 1):
            raise ValueError("fixed schedule needs a positive horizon")

    def rate(self, n_arms: int, t: int, availability_mass: float) -> float:
        if self.kind == "sqrt_t":
            return 1.0 / math.sqrt(t)
        if self.kind == "fixed":
            return math.sqrt(math.log(n_arms) / (2.0 * n_arms * self.horizon))
        return math.sqrt(math.log(n_arms) / (2.0 * max(availability_mass, 1.0)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "horizon": self.horizon}

    @classmethod
    def from_dict(cls, d: dict) -> "LearningRateSchedule":
        return cls(kind=d["kind"], horizon=d.get("horizon"))


class SiExp3:
    """Internal-sleeping-regret learner with K(K-1) pair experts.

    State is the matrix of cumulative estimated pair losses; weights are
    recomputed from it in log-space every round (subtracting the max exponent
    before exponentiating), so long horizons with large importance weights
    cannot underflow.
    """

    def __init__(self, n_arms: int, schedule: LearningRateSchedule | str = "sqrt_t",
                 horizon: Optional[int] = None):
        if n_arms < 2:
            raise ValueError("need at least two arms")
        if isinstance(schedule, str):
            schedule = LearningRateSchedule(schedule, horizon)
        self.n_arms = n_arms
        self.schedule = schedule
        self.cum_pair_loss = np.zeros((n_arms, n_arms))
        self.t = 0
        self.availability_mass = 0.0
        self._last_p: Optional[np.ndarray] = None
        self._last_round: int = -1

    # -- weights ---------------------------------------------------------

    def _eta(self, awake_count: int) -> float:
        return self.schedule.rate(self.n_arms, self.t + 1, self.availability_mass + awake_count)

    def expert_weights(self, *, eta: Optional[float] = None) -> PairWeights:
        """Softmax of the negated cumulative pair losses over all K(K-1) pairs."""
        if eta is None:
            eta = self.schedule.rate(self.n_arms, self.t + 1, self.availability_mass)
        a = self.cum_pair_loss * (-eta)
        np.fill_diagonal(a, -np.inf)
        w = np.exp(a - a.max())
        return PairWeights(w / w.sum())

    def _masked_weights(self, awake_mask: np.ndarray, eta: float) -> np.ndarray:
        """Pair weights with sleeping-target pairs zeroed, normalized.

        The unmasked softmax normalization cancels against this one, so the
        masked weights are computed in a single log-space pass.
        """
        a = self.cum_pair_loss * (-eta)
        np.fill_diagonal(a, -np.inf)
        a[:, ~awake_mask] = -np.inf
        w = np.exp(a - a.max())
        return w / w.sum()

    # -- policy ----------------------------------------------------------

    def policy_arrays(self, awake_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        eta = self._eta(int(awake_mask.sum()))
        q = self._masked_weights(awake_mask, eta)
        m = q.copy()
        np.fill_diagonal(m, 1.0 - q.sum(axis=1))
        p = solve_stationary(m, awake_mask)
        return p, q

    def policy(self, awake: AvailabilitySet) -> tuple[ArmDistribution, PairWeights]:
        """Played distribution and the awake-target pair weights it solves."""
        if awake.n_arms != self.n_arms:
            raise ValueError("availability set has the wrong arm count")
        p, q = self.policy_arrays(awake.mask)
        return ArmDistribution(p), PairWeights(q)

    def decide(self, awake: AvailabilitySet, rng: np.random.Generator) -> int:
        p, _ = self.policy_arrays(awake.mask)
        cdf = np.cumsum(p)
        k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right").clip(0, self.n_arms - 1))
        self._last_p = p
        self._last_round = self.t
        return k

    # -- update ----------------------------------------------------------

    def update(self, awake: AvailabilitySet, p: np.ndarray | ArmDistribution,
               arm: int, loss: float) -> None:
        """Fold one round's bandit feedback into the pair-expert losses.

        The importance-weighted arm estimate is nonzero only at the played
        arm, so each pair's estimated loss needs just the coordinates touched
        by the transport: pairs leaving the played arm see 0, pairs targeting
        it see ``(p(i)+p(k)) * loss / p(k)``, every other awake-target pair
        sees the raw ``loss``. Pairs with a sleeping target are charged the
        realized loss itself, not an importance-weighted estimate.
        """
        if isinstance(p, ArmDistribution):
            p = p.probs
        if arm not in awake:
            raise ValueError(f"played arm {arm} is not awake")
        if not (0.0 <= loss <= 1.0):
            raise ValueError(f"loss {loss!r} outside [0, 1]")
        if p[arm] < MIN_PLAY_PROB:
            raise RuntimeError(f"played arm {arm} has probability {p[arm]!r}; sampled outside support")
        L = self.cum_pair_loss
        L += loss
        L[arm, awake.mask] -= loss
        L[:, arm] += (p + p[arm]) * (loss / p[arm]) - loss
        np.fill_diagonal(L, 0.0)
        self.availability_mass += len(awake)
        self.t += 1
        self._last_p = None

    def observe(self, awake: AvailabilitySet, arm: int, loss: float) -> None:
        """Harness-facing update; reuses the distribution cached by decide()."""
        if self._last_p is None or self._last_round != self.t:
            raise RuntimeError("observe() without a matching decide() this round")
        self.update(awake, self._last_p, arm, loss)

    # -- serialization ---------------------------------------------------

    def snapshot(self) -> dict:
        """Checkpoint dict: K, dense pair-loss table (diagonal null), counters."""
        table = [
            [None if i == j else float(self.cum_pair_loss[i, j]) for j in range(self.n_arms)]
            for i in range(self.n_arms)
        ]
        return {
            "n_arms": self.n_arms,
            "cum_pair_loss": table,
            "t": self.t,
            "availability_mass": self.availability_mass,
            "schedule": self.schedule.to_dict(),
        }

    @classmethod
    def from_snapshot(cls, snap: dict) -> "SiExp3":
        learner = cls(snap["n_arms"], LearningRateSchedule.from_dict(snap["schedule"]))
        for i, row in enumerate(snap["cum_pair_loss"]):
            for j, v in enumerate(row):
                learner.cum_pair_loss[i, j] = 0.0 if v is None else float(v)
        learner.t = int(snap["t"])
        learner.availability_mass = float(snap["availability_mass"])
        return learner

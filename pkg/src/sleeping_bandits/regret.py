"""Regret accountants for the four sleeping-bandit regret notions.

The ledger ingests per-round traces carrying the environment's full loss
vector on the awake arms (evaluation-side omniscience; learners never see
it) and maintains:

- external regret per arm, counted only on rounds where the arm is awake;
- internal regret per ordered pair ``i -> j``, counted on rounds where the
  learner played ``i`` while ``j`` was awake;
- per-availability-set loss tables feeding the ordering and policy oracles;
- cumulative losses of registered fixed comparators (orderings or policies).

External regret is the column sum of the internal matrix, an exact
bookkeeping identity that the ledger re-checks after every round.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from sleeping_bandits.core import AvailabilitySet, RoundTrace

IDENTITY_TOL = 1e-9
EXHAUSTIVE_MAX_ARMS = 10
POLICY_MAX_SETS = 64


class AccountingError(RuntimeError):
    """An accounting invariant (external = column-summed internal) drifted."""


@dataclass
class ComparatorSpec:
    """A fixed comparator: a priority ordering or a per-set policy table.

    ``sigma`` is a permutation of the arms, played greedily (first awake
    entry wins). ``table`` maps availability bitmasks to the arm the policy
    plays there; every mapped arm must belong to its set.
    """

    kind: str
    sigma: Optional[tuple[int, ...]] = None
    table: Optional[dict[int, int]] = None

    def __post_init__(self) -> None:
        if self.kind == "ordering":
            if self.sigma is None or sorted(self.sigma) != list(range(len(self.sigma))):
                raise ValueError("ordering comparator needs a permutation of the arms")
            self.sigma = tuple(self.sigma)
        elif self.kind == "policy":
            if self.table is None:
                raise ValueError("policy comparator needs a table")
            for bits, arm in self.table.items():
                if not (bits >> arm) & 1:
                    raise ValueError(f"policy plays arm {arm} outside set {bits:b}")
        else:
            raise ValueError(f"unknown comparator kind {self.kind!r}")

    def choice(self, awake: AvailabilitySet) -> int:
        if self.kind == "ordering":
            for arm in self.sigma:
                if awake.mask[arm]:
                    return arm
            raise ValueError("empty availability set")
        bits = awake.bitmask()
        try:
            return self.table[bits]
        except KeyError:
            raise KeyError(f"policy table has no entry for set {bits:b}") from None


@dataclass
class _TrackedComparator:
    spec: ComparatorSpec
    cum_loss: float = 0.0


@dataclass
class _SetStats:
    loss_sum: np.ndarray
    count: int = 0


class RegretLedger:
    """Accumulates every regret notion for one run."""

    def __init__(self, n_arms: int, *, check_identity: bool = True,
                 max_tabulated_sets: int = 4096):
        self.n_arms = n_arms
        self.check_identity = check_identity
        self.max_tabulated_sets = max_tabulated_sets
        self.rounds = 0
        self.learner_loss = 0.0
        self.external = np.zeros(n_arms)
        self.internal = np.zeros((n_arms, n_arms))
        self.arm_loss_sum = np.zeros(n_arms)
        self.arm_awake_count = np.zeros(n_arms, dtype=np.int64)
        self.set_stats: dict[int, _SetStats] = {}
        self.tabulation_overflowed = False
        self.comparators: dict[str, _TrackedComparator] = {}
        self.partial = False

    # -- configuration ----------------------------------------------------

    def register_comparator(self, comp_id: str, spec: ComparatorSpec) -> None:
        if self.rounds:
            raise RuntimeError("register comparators before recording rounds")
        self.comparators[comp_id] = _TrackedComparator(spec)

    # -- recording ---------------------------------------------------------

    def record(self, trace: RoundTrace) -> "RegretLedger":
        if trace.arm is None:
            raise ValueError("ledger expects single-arm traces")
        awake: AvailabilitySet = trace.availability
        self.rounds += 1
        self.learner_loss += trace.loss
        v = trace.loss_vector
        if v is None or not np.all(np.isfinite(v[awake.mask])):
            self.partial = True
            return self
        mask = awake.mask
        diffs = trace.loss - v[mask]
        self.external[mask] += diffs
        self.internal[trace.arm, mask] += diffs
        self.arm_loss_sum[mask] += v[mask]
        self.arm_awake_count[mask] += 1
        if not self.tabulation_overflowed:
            bits = awake.bitmask()
            stats = self.set_stats.get(bits)
            if stats is None:
                if len(self.set_stats) >= self.max_tabulated_sets:
                    self.tabulation_overflowed = True
                else:
                    stats = self.set_stats[bits] = _SetStats(np.zeros(self.n_arms))
            if stats is not None:
                stats.loss_sum[mask] += v[mask]
                stats.count += 1
        for tracked in self.comparators.values():
            tracked.cum_loss += v[tracked.spec.choice(awake)]
        if self.check_identity:
            drift = np.abs(self.external - self.internal.sum(axis=0)).max()
            if drift > IDENTITY_TOL:
                raise AccountingError(
                    f"external regret drifted {drift} from column-summed internal at round {self.rounds}"
                )
        return self

    # -- queries -----------------------------------------------------------

    def external_regret(self) -> np.ndarray:
        return self.external.copy()

    def internal_regret(self) -> np.ndarray:
        return self.internal.copy()

    def comparator_regret(self, comp_id: str) -> float:
        return self.learner_loss - self.comparators[comp_id].cum_loss

    def empirical_means(self) -> np.ndarray:
        """Per-arm mean loss over the rounds the arm was awake (inf if never)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            means = self.arm_loss_sum / self.arm_awake_count
        means[self.arm_awake_count == 0] = np.inf
        return means

    def _require_tables(self) -> None:
        if self.partial:
            raise ValueError("ledger is partial (missing loss vectors); oracles unavailable")
        if self.tabulation_overflowed:
            raise ValueError(
                f"more than {self.max_tabulated_sets} distinct availability sets were tabulated"
            )

    def ordering_loss(self, sigma: tuple[int, ...]) -> float:
        """Cumulative loss of playing ordering ``sigma`` on the recorded trace."""
        self._require_tables()
        total = 0.0
        for bits, stats in self.set_stats.items():
            for arm in sigma:
                if (bits >> arm) & 1:
                    total += stats.loss_sum[arm]
                    break
        return total

    def ordering_regret(self, sigma: tuple[int, ...]) -> float:
        return self.learner_loss - self.ordering_loss(sigma)

    def merge(self, other: "RegretLedger") -> None:
        """Sum another run's accumulators into this one (order-independent)."""
        if other.n_arms != self.n_arms:
            raise ValueError("arm counts differ")
        self.rounds += other.rounds
        self.learner_loss += other.learner_loss
        self.external += other.external
        self.internal += other.internal
        self.arm_loss_sum += other.arm_loss_sum
        self.arm_awake_count += other.arm_awake_count
        self.partial = self.partial or other.partial
        self.tabulation_overflowed = self.tabulation_overflowed or other.tabulation_overflowed
        for bits, stats in other.set_stats.items():
            mine = self.set_stats.get(bits)
            if mine is None:
                self.set_stats[bits] = _SetStats(stats.loss_sum.copy(), stats.count)
            else:
                mine.loss_sum += stats.loss_sum
                mine.count += stats.count


def _as_ledger(traces: Iterable[RoundTrace] | RegretLedger, n_arms: Optional[int] = None) -> RegretLedger:
    if isinstance(traces, RegretLedger):
        return traces
    traces = list(traces)
    if not traces:
        raise ValueError("no traces")
    k = n_arms if n_arms is not None else traces[0].availability.n_arms
    ledger = RegretLedger(k)
    for tr in traces:
        ledger.record(tr)
    return ledger


def record(ledger: RegretLedger, trace: RoundTrace) -> RegretLedger:
    return ledger.record(trace)


def all_ordering_losses(ledger: RegretLedger) -> dict[tuple[int, ...], float]:
    """Cumulative loss of every ordering, exhaustively (K <= 10)."""
    k = ledger.n_arms
    if k > EXHAUSTIVE_MAX_ARMS:
        raise ValueError(
            f"exhaustive ordering search caps at K={EXHAUSTIVE_MAX_ARMS}; "
            "use stochastic mode (sort arms by empirical mean) instead"
        )
    ledger._require_tables()
    perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
    totals = np.zeros(len(perms))
    for bits, stats in ledger.set_stats.items():
        member = np.array([(bits >> a) & 1 for a in range(k)], dtype=bool)
        first_pos = np.argmax(member[perms], axis=1)
        chosen = perms[np.arange(len(perms)), first_pos]
        totals += stats.loss_sum[chosen]
    return {tuple(p): float(t) for p, t in zip(perms.tolist(), totals)}


def best_ordering_regret(traces: Iterable[RoundTrace] | RegretLedger, *,
                         mode: str = "exhaustive") -> tuple[tuple[int, ...], float]:
    """Hindsight-best ordering and its regret on the trace.

    ``exhaustive`` enumerates all K! orderings (K <= 10, exact).
    ``stochastic`` sorts arms by their empirical mean loss, the optimal
    ordering when losses are i.i.d. across rounds.
    """
    ledger = _as_ledger(traces)
    if mode == "exhaustive":
        losses = all_ordering_losses(ledger)
        best_sigma = min(sorted(losses), key=losses.__getitem__)
        return best_sigma, ledger.learner_loss - losses[best_sigma]
    if mode == "stochastic":
        sigma = tuple(int(a) for a in np.argsort(ledger.empirical_means(), kind="stable"))
        return sigma, ledger.ordering_regret(sigma)
    raise ValueError(f"unknown mode {mode!r}")


def best_policy_regret(traces: Iterable[RoundTrace] | RegretLedger
                       ) -> tuple[dict[int, int], float]:
    """Hindsight-best tabulated policy and its regret on the trace.

    The policy plays, for each distinct availability set, the arm with the
    lowest cumulative loss restricted to that set's rounds. Rejects traces
    with more than 64 distinct sets.
    """
    ledger = _as_ledger(traces)
    ledger._require_tables()
    if len(ledger.set_stats) > POLICY_MAX_SETS:
        raise ValueError(f"tabulated policy caps at {POLICY_MAX_SETS} distinct sets")
    table: dict[int, int] = {}
    comp_loss = 0.0
    for bits, stats in sorted(ledger.set_stats.items()):
        members = [a for a in range(ledger.n_arms) if (bits >> a) & 1]
        best = min(members, key=lambda a: (stats.loss_sum[a], a))
        table[bits] = best
        comp_loss += stats.loss_sum[best]
    return table, ledger.learner_loss - comp_loss


def ordering_bound_from_internal(internal: np.ndarray, means: np.ndarray) -> float:
    """Sum of internal regrets over pairs ``i -> j`` with ``mean_j <= mean_i``.

    With i.i.d. losses this dominates the expected regret against any fixed
    ordering, which is the statistical bridge from internal to ordering
    regret.
    """
    means = np.asarray(means, dtype=np.float64)
    better = means[None, :] <= means[:, None]
    np.fill_diagonal(better, False)
    return float(internal[better].sum())


def lemma_identity_drift(ledger: RegretLedger) -> float:
    """Max deviation between external regret and column-summed internal regret."""
    return float(np.abs(ledger.external - ledger.internal.sum(axis=0)).max())

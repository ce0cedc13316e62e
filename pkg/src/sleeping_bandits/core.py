"""Shared domain types: distributions, availability sets, round traces, RNG streams.

All types here are either immutable or single-owner mutable state, so they can
be handed between worker processes freely. Randomness goes through
:class:`RngStream`, a counter-based (Philox) generator keyed by ``(seed,
stream)`` so that replicated runs are bit-for-bit reproducible regardless of
execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

# Project-wide numeric tolerances. Exposed as module constants so experiments
# can tighten or relax them in one place.
DIST_SUM_TOL = 1e-9
DIST_SAMPLE_TOL = 1e-6
ROW_SUM_TOL = 1e-12


class InvalidDistributionError(ValueError):
    """A probability vector failed validation (NaN, negative, or bad sum)."""


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identified by a (seed, stream) pair.

    Identical ``(seed, stream)`` pairs reproduce identical draw sequences
    across runs, platforms, and process boundaries.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64 and 0 <= self.stream < 2**64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        """Fresh generator; calling twice gives two identical sequences."""
        return np.random.Generator(np.random.Philox(key=np.array([self.seed, self.stream], dtype=np.uint64)))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


class AvailabilitySet:
    """Non-empty set of awake arms out of ``{0..n_arms-1}``.

    Stored as a boolean mask for cheap vectorized use; behaves like a set of
    indices for membership and iteration.
    """

    __slots__ = ("n_arms", "mask", "_indices")

    def __init__(self, n_arms: int, arms: Iterable[int] | np.ndarray):
        self.n_arms = int(n_arms)
        mask = np.zeros(self.n_arms, dtype=bool)
        arr = np.asarray(arms)
        if arr.dtype == bool:
            if arr.shape != (self.n_arms,):
                raise ValueError("boolean mask must have length n_arms")
            mask[:] = arr
        else:
            idx = arr.astype(np.int64).ravel()
            if idx.size and (idx.min() < 0 or idx.max() >= self.n_arms):
                raise ValueError("arm index out of range")
            mask[idx] = True
        if not mask.any():
            raise ValueError("availability set must be non-empty")
        self.mask = mask
        self._indices = np.flatnonzero(mask)

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    def __contains__(self, arm: int) -> bool:
        return 0 <= arm < self.n_arms and bool(self.mask[arm])

    def __iter__(self) -> Iterator[int]:
        return iter(self._indices.tolist())

    def __len__(self) -> int:
        return int(self._indices.size)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, AvailabilitySet)
            and self.n_arms == other.n_arms
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self) -> int:
        return hash((self.n_arms, self.bitmask()))

    def bitmask(self) -> int:
        """Integer encoding (bit k set <=> arm k awake); handy as a dict key."""
        return int(np.sum(1 << self._indices.astype(object)))

    def __repr__(self) -> str:
        return f"AvailabilitySet({self.n_arms}, {self._indices.tolist()})"


class PairAvailability:
    """Feasible ordered duel pairs ``(i, j)`` as a symmetric boolean matrix.

    ``allowed[i, j]`` is True when the pair may be played. Symmetry is
    enforced; the diagonal may be allowed only if the instance permits
    self-duels. The induced awake set contains every arm with at least one
    feasible partner.
    """

    __slots__ = ("n_arms", "allowed")

    def __init__(self, n_arms: int, allowed: np.ndarray):
        allowed = np.asarray(allowed, dtype=bool)
        if allowed.shape != (n_arms, n_arms):
            raise ValueError("allowed must be an n_arms x n_arms boolean matrix")
        if not np.array_equal(allowed, allowed.T):
            raise ValueError("pair availability must be symmetric")
        if not allowed.any():
            raise ValueError("pair availability must be non-empty")
        self.n_arms = int(n_arms)
        self.allowed = allowed

    @classmethod
    def from_pairs(cls, n_arms: int, pairs: Iterable[tuple[int, int]]) -> "PairAvailability":
        allowed = np.zeros((n_arms, n_arms), dtype=bool)
        for i, j in pairs:
            allowed[i, j] = True
            allowed[j, i] = True
        return cls(n_arms, allowed)

    @classmethod
    def non_repeating(cls, n_arms: int, arms: Optional[Iterable[int]] = None) -> "PairAvailability":
        """All ordered pairs of distinct arms, optionally restricted to a subset."""
        allowed = np.ones((n_arms, n_arms), dtype=bool)
        np.fill_diagonal(allowed, False)
        if arms is not None:
            keep = np.zeros(n_arms, dtype=bool)
            keep[list(arms)] = True
            allowed &= keep[:, None] & keep[None, :]
        return cls(n_arms, allowed)

    def slice_of(self, arm: int) -> np.ndarray:
        """Indices of feasible opponents for ``arm``."""
        return np.flatnonzero(self.allowed[arm])

    def induced_awake(self) -> AvailabilitySet:
        return AvailabilitySet(self.n_arms, self.allowed.any(axis=1))

    def __contains__(self, pair: tuple[int, int]) -> bool:
        i, j = pair
        return bool(self.allowed[i, j])

    def __repr__(self) -> str:
        n_pairs = int(self.allowed.sum())
        return f"PairAvailability(n_arms={self.n_arms}, pairs={n_pairs})"


@dataclass
class ArmDistribution:
    """Probability vector over K arms; optionally constrained to an awake set."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 1:
            raise InvalidDistributionError("probs must be a vector")

    @property
    def n_arms(self) -> int:
        return self.probs.shape[0]

    def validate(self, awake: Optional[AvailabilitySet] = None, *, tol: float = DIST_SUM_TOL) -> None:
        p = self.probs
        if not np.all(np.isfinite(p)):
            raise InvalidDistributionError(f"non-finite entries: {p}")
        if np.any(p < 0):
            raise InvalidDistributionError(f"negative entries: {p}")
        total = float(p.sum())
        if abs(total - 1.0) > tol:
            raise InvalidDistributionError(f"probabilities sum to {total!r}, not 1")
        if awake is not None and np.any(p[~awake.mask] != 0.0):
            raise InvalidDistributionError("sleeping arms must carry exactly zero mass")

    def sample(self, rng: np.random.Generator) -> int:
        cdf = np.cumsum(self.probs)
        u = rng.random() * cdf[-1]
        return int(np.searchsorted(cdf, u, side="right").clip(0, self.n_arms - 1))


def sample_from(dist: ArmDistribution, rng: RngStream | np.random.Generator) -> int:
    """Draw an arm index with probability ``dist.probs[k]``.

    Fails fast on invalid distributions (NaN, negative entries, or sum off by
    more than ``DIST_SAMPLE_TOL``).
    """
    dist.validate(tol=DIST_SAMPLE_TOL)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return dist.sample(gen)


@dataclass
class PairWeights:
    """Non-negative weights over the K(K-1) ordered arm pairs.

    Stored densely as a K x K matrix whose diagonal is identically zero.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        k = self.matrix.shape[0]
        if self.matrix.shape != (k, k) or k < 2:
            raise ValueError("pair weights must be a square matrix with K >= 2")

    @property
    def n_arms(self) -> int:
        return self.matrix.shape[0]

    def validate(self, *, normalized: bool = False, tol: float = DIST_SUM_TOL) -> None:
        m = self.matrix
        if not np.all(np.isfinite(m)):
            raise ValueError("pair weights must be finite")
        if np.any(m < 0):
            raise ValueError("pair weights must be non-negative")
        if np.any(np.diagonal(m) != 0.0):
            raise ValueError("diagonal pairs (i, i) are not part of the weight set")
        if normalized and abs(float(m.sum()) - 1.0) > tol:
            raise ValueError(f"pair weights sum to {m.sum()!r}, not 1")

    def normalized(self) -> "PairWeights":
        total = float(self.matrix.sum())
        if total <= 0:
            raise ValueError("cannot normalize all-zero pair weights")
        return PairWeights(self.matrix / total)


@dataclass
class RoundTrace:
    """Per-round record consumed by the regret accountants.

    ``loss_vector`` holds the environment's full loss vector restricted to the
    awake arms (NaN elsewhere); synthetic environments can reveal it to the
    accountant even though learners never see it. Losses are any finite reals
    here; the [0, 1] range is enforced at the learner boundary, not in the
    trace, so scripted accounting fixtures can use unscaled losses.
    """

    t: int
    availability: AvailabilitySet | PairAvailability
    arm: Optional[int] = None
    pair: Optional[tuple[int, int]] = None
    loss: Optional[float] = None
    outcome: Optional[int] = None
    loss_vector: Optional[np.ndarray] = None
    annotation: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.arm is not None:
            if not isinstance(self.availability, AvailabilitySet):
                raise ValueError("single-arm trace needs an AvailabilitySet")
            if self.arm not in self.availability:
                raise ValueError(f"chosen arm {self.arm} is not awake")
            if self.loss is None or not np.isfinite(self.loss):
                raise ValueError("single-arm trace needs a finite observed loss")
        if self.pair is not None:
            if not isinstance(self.availability, PairAvailability):
                raise ValueError("duel trace needs a PairAvailability")
            if self.pair not in self.availability:
                raise ValueError(f"chosen pair {self.pair} is not feasible")
            if self.outcome not in (0, 1):
                raise ValueError("duel outcome must be 0 or 1")
        if self.loss_vector is not None:
            self.loss_vector = np.asarray(self.loss_vector, dtype=np.float64)
            if self.arm is not None:
                got = float(self.loss_vector[self.arm])
                if not np.isclose(got, self.loss, atol=1e-12):
                    raise ValueError(
                        f"observed loss {self.loss!r} does not match loss_vector[{self.arm}]={got!r}"
                    )

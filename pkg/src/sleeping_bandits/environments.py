"""Synthetic sleeping-MAB environments and the zero-sum subgame opponent.

Every environment draws its per-run parameters from the generator handed to
its constructor and records them for the run metadata, so a run is a pure
function of its seed. ``step`` returns the awake set, the full loss vector on
the awake arms (NaN elsewhere; revealed to the accountant only), and an
annotation naming what was drawn. Rounds whose sampled awake set would be
empty are resampled within the same round index, so the horizon counts only
played rounds.

Game-based environments map payoffs ``g`` in [-1, 1] to losses ``(1 - g)/2``.
Payoff matrices follow the row convention ``payoff[i, j]`` = payoff of the
arm ``i`` player against action ``j``; the classic rock-paper-scissors cycle
(paper beats rock, scissors beats paper, rock beats scissors) makes the
matrix antisymmetric with value 0, and the best reply when only rock and
paper are awake is paper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from sleeping_bandits.core import AvailabilitySet
from sleeping_bandits.regret import ComparatorSpec

NASH_TOL = 1e-3
NASH_MAX_ITERS = 300_000


# ---------------------------------------------------------------------------
# zero-sum Nash solver
# ---------------------------------------------------------------------------


class NashConvergenceError(RuntimeError):
    """Self-play failed to reach the target exploitability within budget."""


def exploitability(payoff: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Max gain of any unilateral pure deviation from (x, y); 0 at exact Nash."""
    value = float(x @ payoff @ y)
    row_gain = float((payoff @ y).max()) - value
    col_gain = value - float((x @ payoff).min())
    return max(row_gain, col_gain)


def _softmax(z: np.ndarray) -> np.ndarray:
    w = np.exp(z - z.max())
    return w / w.sum()


def zero_sum_nash(payoff: np.ndarray, *, tol: float = NASH_TOL,
                  max_iters: int = NASH_MAX_ITERS,
                  check_every: int = 200) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Approximate Nash equilibrium of a zero-sum matrix game by self-play.

    Both players run optimistic exponential weights (the plain 1/sqrt(n) rate
    needs millions of sweeps to reach 1e-3 exploitability; the optimistic
    step makes the averaged iterates converge at rate ~1/n) and the averaged
    strategies are returned once their exploitability drops below ``tol``.

    Returns ``(x, y, value, exploitability)`` for the row maximizer ``x`` and
    column minimizer ``y``.
    """
    a = np.asarray(payoff, dtype=np.float64)
    n, m = a.shape
    if n == 1 and m == 1:
        return np.ones(1), np.ones(1), float(a[0, 0]), 0.0
    scale = max(1.0, float(np.abs(a).max()))
    eta = 0.25 / scale
    x = np.full(n, 1.0 / n)
    y = np.full(m, 1.0 / m)
    cum_x = np.zeros(n)
    cum_y = np.zeros(m)
    sum_x = np.zeros(n)
    sum_y = np.zeros(m)
    best: Optional[tuple[float, np.ndarray, np.ndarray]] = None
    for it in range(1, max_iters + 1):
        gx = a @ y
        gy = a.T @ x
        sum_x += x
        sum_y += y
        cum_x += gx
        cum_y += gy
        x = _softmax(eta * (cum_x + gx))
        y = _softmax(-eta * (cum_y + gy))
        if it % check_every == 0 or it == max_iters:
            ax = sum_x / it
            ay = sum_y / it
            e = exploitability(a, ax, ay)
            if best is None or e < best[0]:
                best = (e, ax, ay)
            if e <= tol:
                return ax, ay, float(ax @ a @ ay), e
    raise NashConvergenceError(
        f"exploitability {best[0]:.3e} after {max_iters} iterations (target {tol})"
    )


def nash_zero_sum(payoff: np.ndarray, *, tol: float = NASH_TOL,
                  max_iters: int = NASH_MAX_ITERS) -> np.ndarray:
    """Row player's approximate minimax strategy for ``payoff``."""
    x, _, _, _ = zero_sum_nash(payoff, tol=tol, max_iters=max_iters)
    return x


def antisymmetric_nash(payoff: np.ndarray, *, tol: float = NASH_TOL,
                       max_iters: int = NASH_MAX_ITERS) -> np.ndarray:
    """Symmetric optimal mix of an antisymmetric (value-0) game.

    Pure deviation gain against the returned mix ``w`` is at most ``tol``:
    ``max_i (payoff @ w)_i <= tol``. Both players of a symmetric game can
    play it.
    """
    a = np.asarray(payoff, dtype=np.float64)
    if np.abs(a + a.T).max() > 1e-9:
        raise ValueError("payoff matrix is not antisymmetric")
    x, y, _, _ = zero_sum_nash(a, tol=tol, max_iters=max_iters)
    candidates = (x, y, 0.5 * (x + y))
    gains = [float((a @ w).max()) for w in candidates]
    w = candidates[int(np.argmin(gains))]
    if min(gains) > tol:
        raise NashConvergenceError(
            f"symmetric exploitability {min(gains):.3e} exceeds target {tol}"
        )
    return w


# ---------------------------------------------------------------------------
# environments
# ---------------------------------------------------------------------------


@dataclass
class StepResult:
    awake: AvailabilitySet
    loss_vector: np.ndarray
    annotation: dict


class TemplateEnv:
    """Availability templates with per-template loss vectors.

    Each round draws a template; losses are the template's fixed vector, or
    Bernoulli draws around it when ``bernoulli`` is set. Loss entries are
    defined exactly on the template's awake arms.
    """

    kind = "mab"

    def __init__(self, n_arms: int, templates: Iterable[tuple[Iterable[int], Iterable[float]]],
                 *, bernoulli: bool = False, name: str = "template"):
        self.n_arms = n_arms
        self.name = name
        self.bernoulli = bernoulli
        # loss values may cover all arms (anything goes on sleeping slots) or
        # just the awake arms in index order
        self.templates: list[tuple[AvailabilitySet, np.ndarray]] = []
        for arms, values in templates:
            awake = AvailabilitySet(n_arms, list(arms))
            vals = np.asarray(list(values), dtype=np.float64)
            vec = np.full(n_arms, np.nan)
            if vals.shape == (n_arms,):
                vec[awake.mask] = vals[awake.mask]
            elif vals.shape == (len(awake),):
                vec[awake.indices] = vals
            else:
                raise ValueError("loss values must cover the arms or the awake arms")
            if not np.all(np.isfinite(vec[awake.mask])):
                raise ValueError("losses must be defined on every awake arm")
            self.templates.append((awake, vec))

    def step(self, rng: np.random.Generator) -> StepResult:
        idx = int(rng.integers(len(self.templates)))
        awake, means = self.templates[idx]
        if self.bernoulli:
            vec = np.full(self.n_arms, np.nan)
            vec[awake.mask] = (rng.random(len(awake)) < means[awake.mask]).astype(np.float64)
        else:
            vec = means.copy()
        return StepResult(awake, vec, {"template": idx})

    def optimal_comparator(self) -> ComparatorSpec:
        """Best fixed policy: per distinct set, the arm with lowest mean loss."""
        by_set: dict[int, np.ndarray] = {}
        weight: dict[int, int] = {}
        for awake, means in self.templates:
            bits = awake.bitmask()
            if bits in by_set:
                by_set[bits] = by_set[bits] + np.nan_to_num(means)
                weight[bits] += 1
            else:
                by_set[bits] = np.nan_to_num(means)
                weight[bits] = 1
        table = {}
        for awake, _ in self.templates:
            bits = awake.bitmask()
            mean_vec = by_set[bits] / weight[bits]
            members = awake.indices
            table[bits] = int(members[np.argmin(mean_vec[members])])
        return ComparatorSpec("policy", table=table)

    def params(self) -> dict:
        return {
            "name": self.name,
            "bernoulli": self.bernoulli,
            "templates": [
                {"arms": [int(a) + 1 for a in awake.indices],
                 "losses": [None if math.isnan(x) else float(x) for x in vec]}
                for awake, vec in self.templates
            ],
        }


def dependent_env(rng: Optional[np.random.Generator] = None) -> TemplateEnv:
    """Three arms, four equiprobable sets, losses tied to the drawn set.

    The per-set optimum changes with the set, so any fixed ranking of the
    arms pays a constant per-round price on some sets.
    """
    x = np.nan
    return TemplateEnv(
        3,
        [
            ([0, 1], [0.0, 0.5, x]),
            ([0, 1, 2], [0.0, 0.5, 1.0]),
            ([0, 2], [1.0, x, 0.0]),
            ([1, 2], [x, 0.0, 1.0]),
        ],
        name="dependent",
    )


def random_dependent_env(rng: np.random.Generator, n_arms: int = 5,
                         n_templates: int = 5) -> TemplateEnv:
    """Random availability templates with template-specific Bernoulli means."""
    templates = []
    for _ in range(n_templates):
        while True:
            mask = rng.random(n_arms) < 0.5
            if mask.any():
                break
        means = rng.random(n_arms)
        means[~mask] = np.nan
        templates.append((np.flatnonzero(mask).tolist(), means))
    return TemplateEnv(n_arms, templates, bernoulli=True, name="random_dependent")


class StochasticEnv:
    """Independent Bernoulli losses and Bernoulli availabilities per arm.

    Means and availability probabilities are drawn uniformly on (0, 1) at
    construction. Rounds where no arm wakes up are resampled.
    """

    kind = "mab"
    name = "stochastic"

    def __init__(self, rng: np.random.Generator, n_arms: int = 10,
                 means: Optional[Iterable[float]] = None,
                 avail_probs: Optional[Iterable[float]] = None):
        self.n_arms = n_arms
        self.means = rng.random(n_arms) if means is None else np.asarray(list(means), dtype=np.float64)
        self.avail_probs = (
            rng.random(n_arms) if avail_probs is None
            else np.asarray(list(avail_probs), dtype=np.float64)
        )
        if self.means.shape != (n_arms,) or self.avail_probs.shape != (n_arms,):
            raise ValueError("means and avail_probs must have one entry per arm")

    def step(self, rng: np.random.Generator) -> StepResult:
        while True:
            mask = rng.random(self.n_arms) < self.avail_probs
            if mask.any():
                break
        awake = AvailabilitySet(self.n_arms, mask)
        vec = np.full(self.n_arms, np.nan)
        vec[mask] = (rng.random(int(mask.sum())) < self.means[mask]).astype(np.float64)
        return StepResult(awake, vec, {})

    def optimal_comparator(self) -> ComparatorSpec:
        """With i.i.d. losses the best policy is the best-mean awake arm."""
        sigma = tuple(int(a) for a in np.argsort(self.means, kind="stable"))
        return ComparatorSpec("ordering", sigma=sigma)

    def params(self) -> dict:
        return {
            "name": self.name,
            "means": self.means.tolist(),
            "avail_probs": self.avail_probs.tolist(),
        }


class ZeroSumGameEnv:
    """Repeated zero-sum game against a subgame-Nash opponent.

    ``payoff[i, j]`` is the learner's payoff playing ``i`` against ``j``.
    Each round restricts the game to the drawn template; the opponent samples
    from the precomputed optimal mix of that restriction. The learner's loss
    vector maps every awake arm's payoff against the realized opponent action
    through ``(1 - g)/2`` (Bernoulli-sampled around that mean if requested).
    """

    kind = "mab"

    def __init__(self, payoff: np.ndarray, templates: list[AvailabilitySet], *,
                 bernoulli: bool, name: str, nash_tol: float = NASH_TOL):
        payoff = np.asarray(payoff, dtype=np.float64)
        if np.abs(payoff + payoff.T).max() > 1e-9:
            raise ValueError("payoff matrix must be antisymmetric")
        self.n_arms = payoff.shape[0]
        self.payoff = payoff
        self.templates = templates
        self.bernoulli = bernoulli
        self.name = name
        self.nash_mixes: list[np.ndarray] = []
        for awake in templates:
            idx = awake.indices
            sub = payoff[np.ix_(idx, idx)]
            mix = np.zeros(self.n_arms)
            mix[idx] = antisymmetric_nash(sub, tol=nash_tol)
            self.nash_mixes.append(mix)

    def step(self, rng: np.random.Generator) -> StepResult:
        m = int(rng.integers(len(self.templates)))
        awake = self.templates[m]
        mix = self.nash_mixes[m]
        cdf = np.cumsum(mix)
        opp = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right").clip(0, self.n_arms - 1))
        mean_loss = (1.0 - self.payoff[:, opp]) / 2.0
        vec = np.full(self.n_arms, np.nan)
        if self.bernoulli:
            vec[awake.mask] = (rng.random(len(awake)) < mean_loss[awake.mask]).astype(np.float64)
        else:
            vec[awake.mask] = mean_loss[awake.mask]
        return StepResult(awake, vec, {"template": m, "opponent": opp + 1})

    def optimal_comparator(self) -> ComparatorSpec:
        """Best reply to the opponent's mix, per template."""
        table: dict[int, int] = {}
        for awake, mix in zip(self.templates, self.nash_mixes):
            expected_payoff = self.payoff @ mix
            members = awake.indices
            table[awake.bitmask()] = int(members[np.argmax(expected_payoff[members])])
        return ComparatorSpec("policy", table=table)

    def params(self) -> dict:
        return {
            "name": self.name,
            "payoff": self.payoff.tolist(),
            "templates": [[int(a) + 1 for a in t.indices] for t in self.templates],
            "nash_mixes": [m.tolist() for m in self.nash_mixes],
        }


ROCK_PAPER_SCISSORS_PAYOFF = np.array(
    [
        [0.0, -1.0, 1.0],
        [1.0, 0.0, -1.0],
        [-1.0, 1.0, 0.0],
    ]
)


def rps_env(rng: Optional[np.random.Generator] = None) -> ZeroSumGameEnv:
    """Rock-paper-scissors on the four availability sets of the dependent setup."""
    templates = [
        AvailabilitySet(3, [0, 1]),
        AvailabilitySet(3, [0, 1, 2]),
        AvailabilitySet(3, [0, 2]),
        AvailabilitySet(3, [1, 2]),
    ]
    return ZeroSumGameEnv(ROCK_PAPER_SCISSORS_PAYOFF, templates,
                          bernoulli=False, name="rps")


def random_game_env(rng: np.random.Generator, n_arms: int = 10,
                    n_templates: int = 4) -> ZeroSumGameEnv:
    """Random antisymmetric payoff, random templates, Bernoulli losses."""
    g = np.zeros((n_arms, n_arms))
    iu = np.triu_indices(n_arms, k=1)
    g[iu] = rng.uniform(-1.0, 1.0, size=len(iu[0]))
    g = g - g.T
    templates = []
    for _ in range(n_templates):
        while True:
            mask = rng.random(n_arms) < 0.5
            if mask.any():
                break
        templates.append(AvailabilitySet(n_arms, mask))
    return ZeroSumGameEnv(g, templates, bernoulli=True, name="random_game")

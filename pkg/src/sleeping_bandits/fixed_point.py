"""Fixed point of the pair-weighted mass-transport system.

Given normalized weights ``q`` over ordered pairs ``i -> j``, the played
distribution ``p`` must satisfy ``p = sum_{i != j} q(i -> j) * T_{i->j}(p)``
where ``T_{i->j}`` moves all of ``p``'s mass at ``i`` onto ``j``. Expanding
coordinates shows this is exactly the stationarity condition of the Markov
chain with off-diagonal transition ``m[i, j] = q(i -> j)`` and diagonal
``m[i, i] = 1 - sum_{j != i} q(i -> j)``:

    p(k) * sum_{j != k} q(k -> j) = sum_{i != k} q(i -> k) * p(i).

Because the total pair mass is 1, each row's exit mass is about ``1/K`` and
the chain is lazy (spectral gap of order ``1/K``), so plain power iteration
needs hundreds of sweeps per call. The solver therefore goes straight for the
anchored linear system on the awake block and keeps power iteration plus a
least-squares solve as fallbacks for ill-conditioned or reducible chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sleeping_bandits.core import ArmDistribution, AvailabilitySet, PairWeights

RESIDUAL_TOL = 1e-10
ROW_SUM_TOL = 1e-12
POWER_MAX_ITERS = 10_000
POWER_STEP_TOL = 1e-14


class FixedPointError(RuntimeError):
    """No stationary solution within tolerance; carries the offending weights."""


@dataclass
class RedistributionMatrix:
    """Row-stochastic matrix of the chain induced by normalized pair weights."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("redistribution matrix must be square")
        if np.any(m < 0):
            raise ValueError("redistribution matrix entries must be non-negative")
        rows = m.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > ROW_SUM_TOL:
            raise ValueError(f"rows must sum to 1 within {ROW_SUM_TOL}: got {rows}")


def build_matrix(q: PairWeights) -> RedistributionMatrix:
    """Assemble the transition matrix for normalized pair weights ``q``."""
    q.validate(normalized=True)
    m = q.matrix.copy()
    np.fill_diagonal(m, 0.0)
    exit_mass = m.sum(axis=1)
    # q sums to 1 over all pairs, so every row's exit mass is at most 1.
    np.fill_diagonal(m, np.maximum(1.0 - exit_mass, 0.0))
    return RedistributionMatrix(m)


def transport(p: np.ndarray, i: int, j: int) -> np.ndarray:
    """The i -> j mass transport of ``p``: zero at i, ``p(i)+p(j)`` at j."""
    out = np.array(p, dtype=np.float64, copy=True)
    out[j] = out[i] + out[j]
    out[i] = 0.0
    return out


def reconstruct(q_matrix: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_{i != j} q(i -> j) * T_{i->j}(p)`` in closed form.

    Used to verify the fixed-point identity; equals ``p`` at a solution.
    """
    q = np.asarray(q_matrix, dtype=np.float64)
    exit_mass = q.sum(axis=1) - np.diagonal(q)
    return p * (1.0 - exit_mass) + (q.T @ p) - np.diagonal(q) * p


def _solve_awake_block(m: np.ndarray, awake_idx: np.ndarray) -> np.ndarray | None:
    """Anchored linear solve of the chain restricted to awake states.

    Awake arms receive no mass from sleeping ones (their inflow columns are
    zero there), and no awake row leaks to sleeping columns, so the awake
    block is itself row-stochastic and its stationary vector is the answer.
    Returns None when the block is singular or the solution is not a
    distribution.
    """
    sub = m[np.ix_(awake_idx, awake_idx)]
    n = sub.shape[0]
    a = sub.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)) or x.min() < -1e-9:
        return None
    x = np.maximum(x, 0.0)
    total = x.sum()
    if total <= 0:
        return None
    return x / total


def _power_iteration(m: np.ndarray, start: np.ndarray, max_iters: int = POWER_MAX_ITERS,
                     step_tol: float = POWER_STEP_TOL) -> np.ndarray:
    p = start
    for _ in range(max_iters):
        nxt = p @ m
        if np.abs(nxt - p).max() <= step_tol:
            return nxt
        p = nxt
    return p


def _lstsq_full(m: np.ndarray) -> np.ndarray | None:
    k = m.shape[0]
    a = np.vstack([m.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    if not np.all(np.isfinite(x)):
        return None
    return x


def solve_stationary(m: np.ndarray, awake_mask: np.ndarray, *,
                     residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Stationary distribution of ``m`` supported on the awake arms.

    Raw-array entry point shared by the public API and the learners' hot
    loop. Tries the direct awake-block solve, then long power iteration from
    uniform-on-awake, then an anchored least-squares solve; sleeping
    coordinates are zeroed and the result renormalized (mass stuck in a
    sleeping closed class is a numerical artifact since no awake weight
    targets sleeping arms).
    """
    k = m.shape[0]
    awake_idx = np.flatnonzero(awake_mask)
    p = np.zeros(k)
    if awake_idx.size == 1:
        p[awake_idx[0]] = 1.0
        return p

    x = _solve_awake_block(m, awake_idx)
    if x is not None:
        p[awake_idx] = x
        if np.abs(p - p @ m).max() <= residual_tol:
            return p

    start = np.zeros(k)
    start[awake_idx] = 1.0 / awake_idx.size
    cand = _power_iteration(m, start)
    cand[~awake_mask] = 0.0
    total = cand.sum()
    if total > 0:
        cand = cand / total
        if np.abs(cand - cand @ m).max() <= residual_tol:
            return cand

    full = _lstsq_full(m)
    if full is not None:
        full[~awake_mask] = 0.0
        full = np.maximum(full, 0.0)
        total = full.sum()
        if total > 0:
            full = full / total
            if np.abs(full - full @ m).max() <= residual_tol:
                return full

    raise FixedPointError(
        f"no stationary distribution within residual {residual_tol}; matrix:\n{m!r}"
    )


def stationary(q: PairWeights, awake: AvailabilitySet, *,
               residual_tol: float = RESIDUAL_TOL) -> ArmDistribution:
    """Solve the mass-transport fixed point for normalized pair weights ``q``.

    Requires ``q(i -> j) = 0`` whenever ``j`` is asleep (the upstream
    renormalization guarantees it). The result sums to 1, puts exactly zero
    mass on sleeping arms, and satisfies the fixed-point residual within
    ``residual_tol``.
    """
    q.validate(normalized=True)
    if q.n_arms != awake.n_arms:
        raise ValueError("q and awake describe different arm counts")
    sleeping_inflow = float(np.abs(q.matrix[:, ~awake.mask]).sum())
    if sleeping_inflow > 1e-12:
        raise ValueError(
            f"pair weights assign {sleeping_inflow} mass to sleeping targets; "
            "renormalize over awake targets first"
        )
    m = build_matrix(q).matrix
    try:
        p = solve_stationary(m, awake.mask, residual_tol=residual_tol)
    except FixedPointError as exc:
        raise FixedPointError(f"{exc}\npair weights:\n{q.matrix!r}") from None
    dist = ArmDistribution(p)
    dist.validate(awake)
    return dist

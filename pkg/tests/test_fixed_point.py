"""Fixed point of the pair mass-transport system vs independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleeping_bandits.core import ArmDistribution, AvailabilitySet, PairWeights
from sleeping_bandits.fixed_point import (
    build_matrix,
    reconstruct,
    stationary,
    transport,
)

from conftest import (
    power_iteration_oracle,
    random_masked_pair_weights,
    reconstruct_oracle,
)


def pw(matrix) -> PairWeights:
    return PairWeights(np.array(matrix, dtype=float))


class TestBuildMatrix:
    def test_symmetric_two_arm(self):
        m = build_matrix(pw([[0, 0.5], [0.5, 0]])).matrix
        assert np.allclose(m, [[0.5, 0.5], [0.5, 0.5]])

    def test_one_way_two_arm(self):
        m = build_matrix(pw([[0, 1.0], [0.0, 0]])).matrix
        assert np.allclose(m, [[0, 1], [0, 1]])

    def test_three_arm_chain(self):
        # off-diagonals carry the pair weights; each diagonal absorbs the
        # leftover mass so the row sums to one
        q = pw([[0, 0.5, 0], [0, 0, 0.5], [0, 0, 0]])
        m = build_matrix(q).matrix
        expected = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]])
        assert np.allclose(m, expected)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            build_matrix(pw([[0, 0.5], [0.1, 0]]))


class TestTransport:
    def test_moves_mass(self):
        p = np.array([0.2, 0.3, 0.5])
        moved = transport(p, 0, 2)
        assert np.allclose(moved, [0.0, 0.3, 0.7])


class TestStationary:
    def test_symmetric_two_arm(self):
        p = stationary(pw([[0, 0.5], [0.5, 0]]), AvailabilitySet(2, [0, 1]))
        assert np.allclose(p.probs, [0.5, 0.5], atol=1e-12)

    def test_two_arm_one_sleeping(self):
        # all weight flows 0 -> 1 and nothing flows back, so arm 0 drains
        p = stationary(pw([[0, 1.0], [0.0, 0]]), AvailabilitySet(2, [1]))
        assert np.allclose(p.probs, [0.0, 1.0], atol=1e-12)

    def test_three_arm_chain_awake_tail(self):
        # inflow to arm 0 is zero, arm 1 only receives from arm 0
        q = pw([[0, 0.5, 0], [0, 0, 0.5], [0, 0, 0]])
        p = stationary(q, AvailabilitySet(3, [1, 2]))
        assert np.allclose(p.probs, [0.0, 0.0, 1.0], atol=1e-12)

    def test_matches_long_power_iteration_on_random_instance(self, rng):
        k = 6
        awake_mask = np.array([True, True, False, True, True, True])
        q = random_masked_pair_weights(rng, k, awake_mask)
        awake = AvailabilitySet(k, awake_mask)
        p = stationary(PairWeights(q), awake).probs
        oracle = power_iteration_oracle(build_matrix(PairWeights(q)).matrix, awake_mask)
        assert np.abs(p - oracle).max() < 1e-8

    def test_rejects_mass_on_sleeping_targets(self, rng):
        q = random_masked_pair_weights(rng, 3, np.array([True, True, True]))
        with pytest.raises(ValueError):
            stationary(PairWeights(q), AvailabilitySet(3, [0, 1]))

    def test_single_awake_arm_point_mass(self, rng):
        k = 4
        awake_mask = np.zeros(k, dtype=bool)
        awake_mask[2] = True
        q = random_masked_pair_weights(rng, k, awake_mask)
        p = stationary(PairWeights(q), AvailabilitySet(k, awake_mask))
        assert np.allclose(p.probs, [0, 0, 1, 0], atol=1e-12)


class TestFixedPointProperties:
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_reconstruction_identity_and_support(self, k, seed):
        gen = np.random.default_rng(seed)
        awake_mask = gen.random(k) < 0.6
        if not awake_mask.any():
            awake_mask[int(gen.integers(k))] = True
        q = random_masked_pair_weights(gen, k, awake_mask)
        awake = AvailabilitySet(k, awake_mask)
        p = stationary(PairWeights(q), awake).probs
        # identity: rebuilding the pair-transport mixture reproduces p
        assert np.abs(reconstruct_oracle(q, p) - p).max() < 1e-9
        assert np.abs(reconstruct(q, p) - p).max() < 1e-9
        # support: sleeping arms carry exactly zero
        assert np.all(p[~awake_mask] == 0.0)
        assert abs(p.sum() - 1.0) < 1e-9

    def test_scale_robustness_smoke(self, rng):
        # small perturbations of q move p by a comparable amount
        k = 5
        awake_mask = np.ones(k, dtype=bool)
        q = random_masked_pair_weights(rng, k, awake_mask)
        awake = AvailabilitySet(k, awake_mask)
        base = stationary(PairWeights(q), awake).probs
        for eps in (1e-6, 1e-4):
            noise = rng.random((k, k)) * eps
            np.fill_diagonal(noise, 0.0)
            q2 = q + noise
            q2 = q2 / q2.sum()
            moved = stationary(PairWeights(q2), awake).probs
            assert np.abs(moved - base).max() < 100 * eps

    def test_reducible_chain_zeroes_sleeping_class(self):
        # arm 2 sleeps and has no outgoing weight: an absorbing sleeping
        # self-loop the solver must not leave mass in
        q = np.array([[0.0, 0.6, 0.0], [0.4, 0.0, 0.0], [0.0, 0.0, 0.0]])
        awake = AvailabilitySet(3, [0, 1])
        p = stationary(PairWeights(q), awake).probs
        assert p[2] == 0.0
        assert abs(p.sum() - 1.0) < 1e-9

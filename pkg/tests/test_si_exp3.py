"""Pair-expert learner: weights, policy, update rule, serialization."""

import json
import math

import numpy as np
import pytest

from sleeping_bandits.core import AvailabilitySet
from sleeping_bandits.si_exp3 import LearningRateSchedule, SiExp3

from conftest import pair_loss_oracle, reconstruct_oracle


def awake_all(k):
    return AvailabilitySet(k, list(range(k)))


class TestSchedules:
    def test_sqrt_t(self):
        s = LearningRateSchedule("sqrt_t")
        assert s.rate(5, 4, 123.0) == 0.5

    def test_fixed_requires_horizon(self):
        with pytest.raises(ValueError):
            LearningRateSchedule("fixed")
        s = LearningRateSchedule("fixed", horizon=1000)
        assert s.rate(10, 1, 0.0) == pytest.approx(math.sqrt(math.log(10) / (2 * 10 * 1000)))

    def test_adaptive_tracks_mass(self):
        s = LearningRateSchedule("adaptive")
        assert s.rate(4, 3, 50.0) == pytest.approx(math.sqrt(math.log(4) / 100.0))


class TestExpertWeights:
    def test_uniform_when_losses_equal(self):
        learner = SiExp3(4)
        learner.cum_pair_loss[:] = 3.7
        np.fill_diagonal(learner.cum_pair_loss, 0.0)
        w = learner.expert_weights().matrix
        off = w[~np.eye(4, dtype=bool)]
        assert np.allclose(off, 1.0 / 12, atol=1e-12)

    def test_closed_form_single_low_loss_pair(self):
        # one pair at 0, the other K(K-1)-1 pairs at c: softmax gives
        # e^{eta c} / (e^{eta c} + K(K-1) - 1) to the low-loss pair
        k, c = 3, 2.5
        learner = SiExp3(k)
        learner.cum_pair_loss[:] = c
        learner.cum_pair_loss[0, 1] = 0.0
        np.fill_diagonal(learner.cum_pair_loss, 0.0)
        eta = learner.schedule.rate(k, 1, 0.0)
        w = learner.expert_weights().matrix
        expected = math.exp(eta * c) / (math.exp(eta * c) + k * (k - 1) - 1)
        assert w[0, 1] == pytest.approx(expected, abs=1e-12)

    def test_shift_invariance(self, rng):
        learner = SiExp3(4)
        learner.cum_pair_loss = rng.random((4, 4)) * 10
        np.fill_diagonal(learner.cum_pair_loss, 0.0)
        w1 = learner.expert_weights().matrix
        learner.cum_pair_loss += 123.456
        np.fill_diagonal(learner.cum_pair_loss, 0.0)
        w2 = learner.expert_weights().matrix
        assert np.abs(w1 - w2).max() < 1e-12


class TestPolicy:
    def test_round_one_uniform_everything(self):
        k = 4
        learner = SiExp3(k)
        p, q = learner.policy(awake_all(k))
        assert np.allclose(p.probs, 1.0 / k, atol=1e-10)
        off = q.matrix[~np.eye(k, dtype=bool)]
        assert np.allclose(off, 1.0 / (k * (k - 1)), atol=1e-12)

    def test_round_one_partial_awake_three_arms(self):
        # fresh weights, awake {0, 1}: four pairs keep mass (targets 0/1),
        # each at 1/4; balance equations give p = (1/2, 1/2, 0)
        learner = SiExp3(3)
        p, q = learner.policy(AvailabilitySet(3, [0, 1]))
        expected_q = np.zeros((3, 3))
        expected_q[0, 1] = expected_q[1, 0] = expected_q[2, 0] = expected_q[2, 1] = 0.25
        assert np.allclose(q.matrix, expected_q, atol=1e-12)
        assert np.allclose(p.probs, [0.5, 0.5, 0.0], atol=1e-10)

    def test_single_awake_arm_point_mass(self, rng):
        learner = SiExp3(5)
        learner.cum_pair_loss = rng.random((5, 5)) * 7
        np.fill_diagonal(learner.cum_pair_loss, 0.0)
        p, _ = learner.policy(AvailabilitySet(5, [3]))
        assert np.allclose(p.probs, [0, 0, 0, 1, 0], atol=1e-12)

    def test_master_identity_every_round(self, rng):
        # the played distribution reproduces itself through the pair mixture
        k = 5
        learner = SiExp3(k)
        for t in range(30):
            mask = rng.random(k) < 0.6
            if not mask.any():
                mask[rng.integers(k)] = True
            awake = AvailabilitySet(k, mask)
            p, q = learner.policy(awake)
            recon = reconstruct_oracle(q.matrix, p.probs)
            assert np.abs(recon - p.probs).max() < 1e-9
            arm = int(rng.choice(np.flatnonzero(mask)))
            learner.update(awake, p.probs, arm, float(rng.random()))


class TestUpdate:
    def test_hand_derived_both_awake(self):
        learner = SiExp3(2)
        awake = awake_all(2)
        p = np.array([0.5, 0.5])
        learner.update(awake, p, 0, 1.0)
        # pair 0->1: played arm is the source, transported estimate is 0
        # pair 1->0: target was played, (p1 + p0) * loss / p0 = 2
        assert learner.cum_pair_loss[0, 1] == pytest.approx(0.0, abs=1e-12)
        assert learner.cum_pair_loss[1, 0] == pytest.approx(2.0, abs=1e-12)

    def test_hand_derived_sleeping_target(self):
        learner = SiExp3(2)
        awake = AvailabilitySet(2, [0])
        p = np.array([0.5, 0.5])
        learner.update(awake, p, 0, 1.0)
        # 0->1 sleeps: charged the realized loss; 1->0 importance-weighted
        assert learner.cum_pair_loss[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert learner.cum_pair_loss[1, 0] == pytest.approx(2.0, abs=1e-12)

    def test_zero_loss_only_counters_move(self):
        learner = SiExp3(3)
        awake = awake_all(3)
        p, _ = learner.policy(awake)
        learner.update(awake, p.probs, 1, 0.0)
        assert np.all(learner.cum_pair_loss == 0.0)
        assert learner.t == 1
        assert learner.availability_mass == 3.0

    def test_matches_bruteforce_oracle(self, rng):
        k = 5
        for _ in range(20):
            mask = rng.random(k) < 0.6
            if not mask.any():
                mask[rng.integers(k)] = True
            awake = AvailabilitySet(k, mask)
            learner = SiExp3(k)
            p, _ = learner.policy(awake)
            arm = int(rng.choice(np.flatnonzero(mask)))
            loss = float(rng.random())
            learner.update(awake, p.probs, arm, loss)
            oracle = pair_loss_oracle(awake, p.probs, arm, loss)
            np.fill_diagonal(oracle, 0.0)
            assert np.abs(learner.cum_pair_loss - oracle).max() < 1e-10

    def test_unbiased_pair_estimates(self):
        # expectation over the played arm reproduces the transported true
        # losses for awake targets and the mean realized loss for sleeping
        k = 4
        awake = AvailabilitySet(k, [0, 1, 3])
        losses = np.array([0.2, 0.9, np.nan, 0.4])
        base = SiExp3(k)
        p, _ = base.policy(awake)
        p = p.probs
        expectation = np.zeros((k, k))
        for arm in np.flatnonzero(awake.mask):
            trial = SiExp3(k)
            trial.update(awake, p, int(arm), float(losses[arm]))
            expectation += p[arm] * trial.cum_pair_loss
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                if awake.mask[j]:
                    moved = p.copy()
                    moved[j] += moved[i]
                    moved[i] = 0.0
                    want = float(np.nansum(moved * np.nan_to_num(losses) * awake.mask))
                else:
                    want = float(np.nansum(p * np.nan_to_num(losses)))
                assert expectation[i, j] == pytest.approx(want, abs=1e-10)

    def test_guards(self):
        learner = SiExp3(3)
        awake = AvailabilitySet(3, [0, 1])
        p = np.array([0.5, 0.5, 0.0])
        with pytest.raises(ValueError):
            learner.update(awake, p, 2, 0.5)  # sleeping arm
        with pytest.raises(ValueError):
            learner.update(awake, p, 0, 1.5)  # loss out of range
        with pytest.raises(RuntimeError):
            learner.update(awake, np.array([0.0, 1.0, 0.0]), 0, 0.5)  # zero support


class TestSnapshot:
    def test_json_round_trip_preserves_policy(self, rng):
        learner = SiExp3(4, schedule="adaptive")
        awake = awake_all(4)
        gen = np.random.default_rng(3)
        for _ in range(17):
            arm = learner.decide(awake, gen)
            learner.observe(awake, arm, float(gen.random()))
        snap = json.loads(json.dumps(learner.snapshot()))
        assert snap["cum_pair_loss"][0][0] is None
        clone = SiExp3.from_snapshot(snap)
        p1, _ = learner.policy(awake)
        p2, _ = clone.policy(awake)
        assert np.allclose(p1.probs, p2.probs, atol=1e-15)
        assert clone.t == learner.t
        assert clone.availability_mass == learner.availability_mass

    def test_observe_requires_matching_decide(self):
        learner = SiExp3(3)
        with pytest.raises(RuntimeError):
            learner.observe(awake_all(3), 0, 0.5)

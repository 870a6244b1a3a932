import itertools

import numpy as np
import pytest

from schemas import EngineConfig
from solver.archive_pruning import Archive
from solver.errors import DomainError
from solver.knee_metrics import (
    TrialRecord,
    assignment_rmse,
    front_points,
    identify_knee,
    knee_profile,
    match_frequencies,
    matched_error,
    relative_change,
    rmse_from_errors,
    slope_changes,
    stopping_met,
    success_rate,
    termination_reason,
)
from solver.signal_model import wrap_distance


def archive_of(candidate_factory, front, energy=None):
    archive = Archive(energy=energy)
    for order, residual in front:
        archive = archive.with_entry(candidate_factory(order, residual))
    return archive


class TestKnee:
    @pytest.mark.parametrize("energy", [None, 10.0, 50.0])
    def test_sharp_corner(self, candidate_factory, energy):
        archive = archive_of(candidate_factory, [(1, 10.0), (2, 1.0), (3, 0.9)], energy=energy)
        assert identify_knee(archive).order == 2

    @pytest.mark.parametrize("energy", [None, 5.0, 10.0])
    def test_two_point_front_takes_minimum_residual(self, candidate_factory, energy):
        archive = archive_of(candidate_factory, [(1, 5.0), (2, 4.0)], energy=energy)
        assert identify_knee(archive).order == 2

    def test_lowest_order_is_never_the_knee_of_a_longer_front(self, candidate_factory):
        """Order 1 has no incoming segment even when ||Y||^2 is known"""
        archive = archive_of(candidate_factory, [(1, 1.0), (2, 0.9), (3, 0.8)], energy=40.0)
        assert identify_knee(archive).order == 3

    def test_late_collapse(self, candidate_factory):
        archive = archive_of(candidate_factory, [(1, 2.0), (2, 1.9), (3, 1.8), (4, 0.1)], energy=40.0)
        assert identify_knee(archive).order == 4

    def test_unequal_two_tone_front(self, candidate_factory):
        """Second tone at half the amplitude of the first"""
        archive = archive_of(candidate_factory, [(1, 2.0), (2, 0.02), (3, 0.019), (4, 0.018)], energy=10.0)
        assert identify_knee(archive).order == 2

    def test_single_point(self, candidate_factory):
        archive = archive_of(candidate_factory, [(3, 2.0)])
        assert identify_knee(archive).order == 3

    def test_residual_collapse_with_noise_floor(self, candidate_factory):
        """Orders above an exact fit sit on the floor and are dominated"""
        front = [(1, 75.0), (2, 50.0), (3, 25.0), (4, 1e-13), (5, 1e-14), (6, 1e-15)]
        archive = archive_of(candidate_factory, front, energy=100.0)
        assert [p.order for p in front_points(archive)] == [1, 2, 3, 4]
        assert identify_knee(archive).order == 4

    def test_dominated_entries_are_filtered(self, candidate_factory):
        archive = archive_of(candidate_factory, [(1, 10.0), (2, 1.0), (3, 2.0), (4, 0.9)])
        assert [p.order for p in front_points(archive)] == [1, 2, 4]

    def test_invariant_to_affine_rescaling(self, candidate_factory):
        base = [(1, 10.0), (2, 4.0), (3, 1.0), (4, 0.8), (5, 0.7)]
        scaled = [(k, 3.0 * r + 2.0) for k, r in base]
        assert identify_knee(archive_of(candidate_factory, base)).order == \
            identify_knee(archive_of(candidate_factory, scaled)).order

    def test_first_point_has_no_slope_change(self, candidate_factory):
        points = front_points(archive_of(candidate_factory, [(1, 10.0), (2, 1.0), (3, 0.9)], energy=50.0))
        changes = slope_changes(points)
        assert np.isnan(changes[0])
        np.testing.assert_allclose(changes[1:], [1.956, 0.022], atol=1e-3)

    def test_profile_pairs_points_with_changes(self, candidate_factory):
        archive = archive_of(candidate_factory, [(1, 10.0), (2, 1.0), (3, 0.9)])
        profile = knee_profile(archive)
        assert [p.order for p, _ in profile] == [1, 2, 3]
        assert profile[0][1] is None

    def test_empty_archive_rejected(self):
        with pytest.raises(DomainError):
            identify_knee(Archive())


class TestStopping:
    def test_relative_change(self):
        previous = np.array([[3.0, 4.0]])
        assert relative_change(previous, previous) == 0.0
        assert relative_change(np.array([[3.0, 5.0]]), previous) == pytest.approx(0.2)

    def test_converges_after_three_quiet_generations(self):
        config = EngineConfig(min_generations=0)
        quiet = [np.ones((2, 1))] * 4
        assert termination_reason(quiet, generation=4, config=config) == "converged"
        assert termination_reason(quiet[:3], generation=3, config=config) is None

    def test_one_jump_resets_the_count(self):
        history = [np.ones((2, 1)), np.ones((2, 1)), 2 * np.ones((2, 1)), 2 * np.ones((2, 1))]
        assert not stopping_met(history, generation=4, config=EngineConfig(min_generations=0))

    def test_quiet_start_does_not_converge_during_warm_up(self):
        quiet = [np.ones((2, 1))] * 4
        assert termination_reason(quiet, generation=4) is None
        assert termination_reason(quiet, generation=19) is None
        assert termination_reason(quiet, generation=20) == "converged"

    def test_caps_apply_during_warm_up(self):
        config = EngineConfig(max_generations=5, min_generations=20)
        assert termination_reason([], generation=5, config=config) == "max_generations"

    def test_generation_and_evaluation_caps(self):
        config = EngineConfig(max_generations=10, max_evaluations=300)
        assert termination_reason([], generation=10, evaluations=0, config=config) == "max_generations"
        assert termination_reason([], generation=2, evaluations=300, config=config) == "max_evaluations"
        assert termination_reason([], generation=2, evaluations=299, config=config) is None


class TestMatchedError:
    def test_matches_exhaustive_assignment(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            true = rng.uniform(-1, 1, int(rng.integers(1, 6)))
            estimated = rng.uniform(-1, 1, true.size + int(rng.integers(0, 3)))
            best = min(
                wrap_distance(estimated[list(perm)], true).sum()
                for perm in itertools.permutations(range(estimated.size), true.size)
            )
            errors, matched = match_frequencies(estimated, true)
            assert errors.sum() == pytest.approx(best)
            assert matched_error(estimated, true) == pytest.approx(np.linalg.norm(errors))
            assert len(set(matched.tolist())) == true.size

    def test_extra_estimate_is_left_unmatched(self):
        errors, matched = match_frequencies([0.9, 0.12, -0.58], [0.1, -0.6])
        assert matched.tolist() == [1, 2]
        assert errors == pytest.approx([0.02, 0.02])

    def test_matching_needs_enough_estimates(self):
        with pytest.raises(DomainError):
            match_frequencies([0.1], [0.1, 0.5])

    def test_wraps_around(self):
        assert matched_error([0.99], [-0.99]) == pytest.approx(0.02)

    def test_too_few_estimates_is_excluded(self):
        assert matched_error([0.1], [0.1, 0.5]) is None

    def test_rmse_over_trials(self):
        trials = [([0.1, 0.5], [0.1, 0.5]), ([0.2], [0.2, 0.6]), ([0.3, 0.7], [0.31, 0.7])]
        # second trial is excluded; errors are 0 and 0.01
        assert assignment_rmse(trials) == pytest.approx(np.sqrt(0.005))

    def test_rmse_undefined_without_qualifying_trials(self):
        assert np.isnan(rmse_from_errors([None, None]))


class TestSuccessRate:
    def test_fraction_of_exact_orders(self):
        records = [
            TrialRecord.from_estimate([0.1, 0.4], [0.1, 0.4], generations=1, evaluations=1, wall_seconds=0.0),
            TrialRecord.from_estimate([0.1, 0.4], [0.1], generations=1, evaluations=1, wall_seconds=0.0),
            TrialRecord.from_estimate([0.1, 0.4], [0.1, 0.3, 0.4], generations=1, evaluations=1, wall_seconds=0.0),
            TrialRecord.from_estimate([0.2], [0.21], generations=1, evaluations=1, wall_seconds=0.0),
        ]
        assert success_rate(records) == pytest.approx(0.5)

    def test_failed_trial_counts_as_miss(self):
        record = TrialRecord.failed(2, "boom")
        assert not record.success
        assert record.frequency_error is None
        assert success_rate([record]) == 0.0

    def test_empty_set_rejected(self):
        with pytest.raises(DomainError):
            success_rate([])

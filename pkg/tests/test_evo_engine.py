import numpy as np
import pytest

from schemas import EngineConfig, SolverVariant
from solver.amplitude_solver import evaluate
from solver.errors import DomainError
from solver.evo_engine import (
    align_parents,
    cross_aligned,
    enforce_length_cap,
    environmental_selection,
    initialize,
    make_offspring,
    polynomial_mutation,
    solve,
    step_generation,
    tournament_selection,
    variable_length_crossover,
)
from solver.archive_pruning import Archive
from solver.pareto import pareto_dominates
from solver.signal_model import Measurements, wrap_distance


class TestInitialize:
    def test_population_shape(self, single_tone, rng):
        config = EngineConfig(population_size=12)
        population = initialize(single_tone, config, rng)
        assert len(population) == 12
        assert population.evaluations == 12
        assert population.generation == 0
        # First member is the Capon solution of length M_sel - 1
        assert population.members[0].order == 7
        for member in population.members:
            assert 1 <= member.order <= 7
            assert np.all(np.diff(member.frequencies) > 0)

    def test_needs_two_sensors(self, rng):
        measurements = Measurements(data=np.ones((1, 1)), observed_indices=np.arange(1))
        with pytest.raises(DomainError):
            initialize(measurements, EngineConfig(), rng)


class TestAlignment:
    def test_matches_nearest_monotone_pairs(self):
        alignment = align_parents([-0.5, -0.31, 0.1, 0.6], [-0.52, -0.2, 0.12])
        assert alignment.columns == [(0, 0), (1, 1), (2, 2), (3, None)]
        assert alignment.cost == pytest.approx(0.02 + 0.11 + 0.02)

    def test_shorter_first_parent(self):
        alignment = align_parents([0.0], [-0.5, 0.05, 0.6])
        assert alignment.columns == [(None, 0), (0, 1), (None, 2)]

    def test_pairs_never_cross(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            p1 = np.sort(rng.uniform(-1, 1, int(rng.integers(1, 7))))
            p2 = np.sort(rng.uniform(-1, 1, int(rng.integers(1, 7))))
            pairs = align_parents(p1, p2).pairs
            assert len(pairs) == min(p1.size, p2.size)
            for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
                assert i1 < i2 and j1 < j2

    def test_empty_parent_rejected(self):
        with pytest.raises(DomainError):
            align_parents([], [0.1])


class TestCrossover:
    def test_three_cut_exchange(self):
        """Exchanging the second and fourth aligned segments"""
        p1 = np.array([-0.5, -0.31, 0.1, 0.6])
        p2 = np.array([-0.52, -0.2, 0.12])
        child1, child2 = cross_aligned(p1, p2, align_parents(p1, p2), [1, 2, 3])
        np.testing.assert_allclose(child1, [-0.5, -0.2, 0.1])
        np.testing.assert_allclose(child2, [-0.52, -0.31, 0.12, 0.6])

    def test_children_keep_all_genes(self, rng):
        p1 = np.array([-0.8, -0.1, 0.4])
        p2 = np.array([-0.6, 0.0, 0.3, 0.9])
        for _ in range(20):
            child1, child2 = variable_length_crossover(p1, p2, rng)
            genes = np.sort(np.concatenate([child1, child2]))
            np.testing.assert_allclose(genes, np.sort(np.concatenate([p1, p2])))
            assert child1.size >= 1 and child2.size >= 1

    def test_single_gene_parents(self, rng):
        child1, child2 = variable_length_crossover([0.2], [0.5], rng)
        assert child1.size == 1 and child2.size == 1

    def test_children_are_sorted(self, rng):
        child1, child2 = variable_length_crossover([-0.9, 0.1, 0.8], [-0.3, 0.7], rng)
        assert np.all(np.diff(child1) >= 0) and np.all(np.diff(child2) >= 0)


class TestMutation:
    def test_length_and_domain_preserved(self, rng):
        genes = np.array([-0.99, -0.2, 0.5, 0.98])
        for _ in range(200):
            mutated = polynomial_mutation(genes, 20.0, rng)
            assert mutated.size == genes.size
            assert np.all((mutated >= -1.0) & (mutated < 1.0))
            assert np.all(np.diff(mutated) >= 0)

    def test_large_index_keeps_changes_small(self, rng):
        genes = np.array([0.0])
        shifts = [wrap_distance(polynomial_mutation(genes, 500.0, rng)[0], 0.0) for _ in range(200)]
        assert max(shifts) < 0.1

    def test_length_cap_drops_genes(self, rng):
        capped = enforce_length_cap(np.array([-0.5, -0.1, 0.2, 0.6, 0.9]), 3, rng)
        assert capped.size == 3
        assert set(capped).issubset({-0.5, -0.1, 0.2, 0.6, 0.9})

    def test_length_cap_leaves_short_genomes(self, rng):
        genes = np.array([0.1, 0.2])
        assert enforce_length_cap(genes, 3, rng) is genes


class TestSelection:
    def test_tournament_returns_population_size(self, single_tone, rng):
        population = initialize(single_tone, EngineConfig(population_size=10), rng)
        assert len(tournament_selection(population, rng)) == 10

    def test_environmental_selection_keeps_first_front(self, single_tone, rng):
        union = initialize(single_tone, EngineConfig(population_size=16), rng).members
        survivors = environmental_selection(union, 8)
        assert len(survivors) == 8
        front = [c for c in union if not any(pareto_dominates(o.fitness, c.fitness) for o in union)]
        if len(front) <= 8:
            for candidate in front:
                assert any(candidate is s for s in survivors)

    def test_offspring_respect_length_cap(self, single_tone, rng):
        config = EngineConfig(population_size=10)
        population = initialize(single_tone, config, rng)
        genomes = make_offspring(population.members, single_tone, config, rng)
        assert len(genomes) == 10
        assert all(1 <= g.size <= single_tone.max_order for g in genomes)


class TestGeneration:
    def test_evaluation_count_grows_by_offspring_and_prunes(self, single_tone, rng):
        config = EngineConfig(population_size=10)
        population = initialize(single_tone, config, rng)
        archive = Archive(energy=single_tone.energy)
        next_population, archive = step_generation(population, archive, single_tone, config, rng)
        assert next_population.generation == 1
        assert len(next_population) == 10
        assert 20 <= next_population.evaluations <= 20 + single_tone.max_order
        assert len(archive) >= 1

    def test_no_archive_variant_spends_only_offspring(self, single_tone, rng):
        config = EngineConfig(population_size=10, variant=SolverVariant.NO_ARCHIVE)
        population = initialize(single_tone, config, rng)
        next_population, _ = step_generation(population, Archive(), single_tone, config, rng)
        assert next_population.evaluations == 20


class TestSolve:
    def test_recovers_single_tone(self, single_tone):
        result = solve(single_tone, EngineConfig(), np.random.default_rng(2023))
        assert result.knee.order == 1
        assert wrap_distance(result.knee.frequencies[0], 0.3) < 1e-2

    def test_same_seed_same_result(self, single_tone):
        config = EngineConfig(population_size=10, max_generations=5)
        first = solve(single_tone, config, np.random.default_rng(5))
        second = solve(single_tone, config, np.random.default_rng(5))
        np.testing.assert_array_equal(first.knee.frequencies, second.knee.frequencies)
        assert first.evaluations == second.evaluations

    def test_generation_cap(self, single_tone):
        result = solve(single_tone, EngineConfig(population_size=10, max_generations=3), np.random.default_rng(1))
        assert result.generations <= 3
        assert result.termination in ("max_generations", "converged")

    def test_evaluation_budget_is_never_exceeded(self, single_tone):
        config = EngineConfig(population_size=10, max_evaluations=100)
        result = solve(single_tone, config, np.random.default_rng(1))
        assert result.evaluations <= 100
        assert result.termination in ("max_evaluations", "converged")

    @pytest.mark.parametrize("variant", list(SolverVariant))
    def test_every_variant_returns_a_knee(self, single_tone, variant):
        config = EngineConfig(population_size=10, max_generations=5, variant=variant)
        result = solve(single_tone, config, np.random.default_rng(3))
        assert 1 <= result.knee.order <= single_tone.max_order
        assert len(result.archive) >= 1

    def test_archive_log_is_tracked_on_request(self, single_tone):
        config = EngineConfig(population_size=10, max_generations=4, track_archive=True)
        result = solve(single_tone, config, np.random.default_rng(3))
        assert len(result.archive_log) == result.generations
        for earlier, later in zip(result.archive_log, result.archive_log[1:]):
            for order, residual in earlier.items():
                assert later[order] <= residual

    def test_knee_fits_the_data(self, single_tone):
        result = solve(single_tone, EngineConfig(population_size=10, max_generations=10), np.random.default_rng(9))
        refit = evaluate(result.knee.frequencies, single_tone)
        assert refit.residual == pytest.approx(result.knee.residual, rel=1e-6, abs=1e-12)


class TestOperatorExamples:
    def test_full_monotone_matching(self):
        assert align_parents([0.1, 0.5], [0.2, 0.6]).pairs == [(0, 0), (1, 1)]

    def test_identical_parents_align_with_zero_cost(self):
        alignment = align_parents([-0.4, 0.2, 0.7], [-0.4, 0.2, 0.7])
        assert alignment.pairs == [(0, 0), (1, 1), (2, 2)]
        assert alignment.cost == 0.0

    def test_unmatched_tail(self):
        alignment = align_parents([-0.31, 0.6], [-0.2])
        assert alignment.columns == [(0, 0), (1, None)]

    def test_single_cut_between_pairs(self):
        p1, p2 = np.array([0.1, 0.5]), np.array([0.2, 0.6])
        child1, child2 = cross_aligned(p1, p2, align_parents(p1, p2), [1])
        np.testing.assert_allclose(child1, [0.1, 0.6])
        np.testing.assert_allclose(child2, [0.2, 0.5])

    def test_identical_parents_give_identical_children(self, rng):
        parent = np.array([-0.4, 0.2, 0.7])
        for _ in range(10):
            child1, child2 = variable_length_crossover(parent, parent, rng)
            np.testing.assert_allclose(child1, parent)
            np.testing.assert_allclose(child2, parent)

    def test_tournament_prefers_rank_then_crowding(self, rng):
        from solver.evo_engine import binary_tournament

        ranks = np.array([0, 1, 0])
        crowding = np.array([0.2, 5.0, 3.1])
        assert binary_tournament(0, 1, ranks, crowding, rng) == 0
        assert binary_tournament(0, 2, ranks, crowding, rng) == 2

    def test_environmental_selection_by_dominance(self, candidate_factory):
        best, worse = candidate_factory(1, 1.0), candidate_factory(2, 2.0)
        assert environmental_selection([worse, best], 1) == [best]

    def test_environmental_selection_keeps_extremes(self, candidate_factory):
        union = [candidate_factory(k, r) for k, r in [(1, 4.0), (2, 2.0), (3, 1.9), (4, 0.1)]]
        survivors = environmental_selection(union, 3)
        orders = sorted(c.order for c in survivors)
        assert 1 in orders and 4 in orders and len(orders) == 3

    def test_selecting_everything_is_identity(self, candidate_factory):
        union = [candidate_factory(k, 1.0 / k) for k in range(1, 5)]
        assert sorted(c.order for c in environmental_selection(union, 4)) == [1, 2, 3, 4]

    def test_mutation_wraps_past_the_upper_edge(self):
        """A large upward step from 0.999 lands back near -1"""
        class Draws:
            def __init__(self, values):
                self.values = list(values)

            def random(self):
                return self.values.pop(0)

        mutated = polynomial_mutation([0.999], 20.0, Draws([0.0, 0.999]))
        assert -1.0 <= mutated[0] < 0.0

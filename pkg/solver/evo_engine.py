"""
Variable-length evolutionary search over frequency combinations

Each generation: binary tournament selection, alignment-based
variable-length crossover, polynomial mutation, NSGA-II environmental
selection, then archiving and model order pruning. When the search stops
the archive is slid to local least-squares optima before the knee is picked.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from schemas import EngineConfig, SolverVariant
from solver.amplitude_solver import Candidate, evaluate
from solver.archive_pruning import Archive, archive_and_prune
from solver.errors import DomainError
from solver.knee_metrics import identify_knee, termination_reason
from solver.pareto import crowding_distance, fast_nondominated_sort, pareto_dominates  # noqa: F401
from solver.refinement import slide_archive
from solver.signal_model import Measurements, capon_initial_solution, wrap_frequency

engine_logger = logging.getLogger("evo_engine")


@dataclass
class Population:
    members: List[Candidate]
    generation: int = 0
    evaluations: int = 0

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class Alignment:
    """Aligned columns as (index in p1, index in p2); None marks a gap"""

    columns: List[Tuple[Optional[int], Optional[int]]]
    cost: float

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, j in self.columns if i is not None and j is not None]


@dataclass
class SolverResult:
    knee: Candidate
    archive: Archive
    population: Population
    termination: str
    archive_log: List[Dict[int, float]] = field(default_factory=list)

    @property
    def generations(self) -> int:
        return self.population.generation

    @property
    def evaluations(self) -> int:
        return self.population.evaluations


# ===== INITIALIZATION =====

def initialize(measurements: Measurements, config: EngineConfig, rng: np.random.Generator) -> Population:
    """Capon solution of length M_sel-1 plus N-1 random combinations"""
    if measurements.num_observed < 2:
        raise DomainError("At least two observed sensors are required")

    max_order = measurements.max_order
    genes = [capon_initial_solution(measurements, max_order)]
    for _ in range(config.population_size - 1):
        length = int(rng.integers(1, max_order + 1))
        genes.append(np.sort(rng.uniform(-1.0, 1.0, length)))

    members = [evaluate(g, measurements) for g in genes]
    return Population(members=members, generation=0, evaluations=len(members))


# ===== SELECTION =====

def rank_population(members: Sequence[Candidate]) -> Tuple[np.ndarray, np.ndarray]:
    """Nondomination rank and crowding distance of every member"""
    fitnesses = [c.fitness for c in members]
    fronts, ranks = fast_nondominated_sort(fitnesses)
    crowding = np.zeros(len(members))
    for front in fronts:
        crowding[front] = crowding_distance(fitnesses, front)
    return np.asarray(ranks), crowding


def binary_tournament(i: int, j: int, ranks: np.ndarray, crowding: np.ndarray, rng: np.random.Generator) -> int:
    """Lower rank wins, then larger crowding distance, then a coin flip"""
    if ranks[i] != ranks[j]:
        return i if ranks[i] < ranks[j] else j
    if crowding[i] != crowding[j]:
        return i if crowding[i] > crowding[j] else j
    return i if rng.random() < 0.5 else j


def tournament_selection(
    population: Population,
    rng: np.random.Generator,
    ranks: Optional[np.ndarray] = None,
    crowding: Optional[np.ndarray] = None,
) -> List[Candidate]:
    """N binary tournaments with replacement"""
    members = population.members
    if ranks is None or crowding is None:
        ranks, crowding = rank_population(members)

    size = len(members)
    pool = []
    for _ in range(size):
        i, j = (int(k) for k in rng.integers(size, size=2))
        pool.append(members[binary_tournament(i, j, ranks, crowding, rng)])
    return pool


def environmental_selection(union: Sequence[Candidate], size: int) -> List[Candidate]:
    """NSGA-II survival: whole fronts, last front truncated by crowding distance"""
    fitnesses = [c.fitness for c in union]
    fronts, _ = fast_nondominated_sort(fitnesses)

    selected: List[int] = []
    for front in fronts:
        if len(selected) + len(front) <= size:
            selected.extend(front)
        else:
            distances = crowding_distance(fitnesses, front)
            order = np.argsort(-distances, kind="stable")
            selected.extend(front[k] for k in order[: size - len(selected)])
        if len(selected) == size:
            break

    return [union[i] for i in selected]


# ===== VARIATION =====

def align_parents(p1: Sequence[float], p2: Sequence[float]) -> Alignment:
    """
    Link every entry of the shorter parent to a distinct entry of the longer
    one without crossings, minimizing the summed absolute distance.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.size == 0 or p2.size == 0:
        raise DomainError("Parents must be non-empty")

    swapped = p1.size < p2.size
    longer, shorter = (p2, p1) if swapped else (p1, p2)
    n, m = shorter.size, longer.size

    cost = np.full((n + 1, m + 1), np.inf)
    cost[0, :] = 0.0
    matched = np.zeros((n + 1, m + 1), dtype=bool)
    for i in range(1, n + 1):
        for j in range(i, m + 1):
            match = cost[i - 1, j - 1] + abs(shorter[i - 1] - longer[j - 1])
            skip = cost[i, j - 1]
            matched[i, j] = match <= skip
            cost[i, j] = match if matched[i, j] else skip

    partner: Dict[int, int] = {}
    i, j = n, m
    while i > 0:
        if matched[i, j]:
            partner[j - 1] = i - 1
            i -= 1
        j -= 1

    columns = []
    for j in range(m):
        k = partner.get(j)
        columns.append((k, j) if swapped else (j, k))
    return Alignment(columns=columns, cost=float(cost[n, m]))


def cross_aligned(
    p1: Sequence[float],
    p2: Sequence[float],
    alignment: Alignment,
    cuts: Sequence[int],
) -> Tuple[np.ndarray, np.ndarray]:
    """Exchange every even-numbered segment between cut positions"""
    bounds = [0] + sorted(int(c) for c in cuts) + [len(alignment.columns)]
    child1, child2 = [], []
    for segment, (start, stop) in enumerate(zip(bounds, bounds[1:]), start=1):
        for i, j in alignment.columns[start:stop]:
            genes1 = [p1[i]] if i is not None else []
            genes2 = [p2[j]] if j is not None else []
            if segment % 2 == 0:
                genes1, genes2 = genes2, genes1
            child1.extend(genes1)
            child2.extend(genes2)
    return np.sort(np.asarray(child1, dtype=float)), np.sort(np.asarray(child2, dtype=float))


def variable_length_crossover(
    p1: Sequence[float],
    p2: Sequence[float],
    rng: np.random.Generator,
    attempts: int = 10,
) -> Tuple[np.ndarray, np.ndarray]:
    """n-point crossover on aligned parents with n drawn from [1, shorter length]"""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    alignment = align_parents(p1, p2)
    interior = np.arange(1, len(alignment.columns))

    for _ in range(attempts):
        points = int(rng.integers(1, min(p1.size, p2.size) + 1))
        points = min(points, interior.size)
        cuts = rng.choice(interior, size=points, replace=False) if points > 0 else []
        child1, child2 = cross_aligned(p1, p2, alignment, cuts)
        if child1.size and child2.size:
            return child1, child2

    return p1.copy(), p2.copy()


def polynomial_mutation(thetas: Sequence[float], eta: float, rng: np.random.Generator) -> np.ndarray:
    """Mutate each gene with probability 1/k; results wrap back into [-1, 1)"""
    genes = np.array(thetas, dtype=float)
    rate = 1.0 / genes.size
    for g in range(genes.size):
        if rng.random() >= rate:
            continue
        u = rng.random()
        if u < 0.5:
            delta = (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0
        else:
            delta = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
        # Domain width is 2
        genes[g] = wrap_frequency(genes[g] + 2.0 * delta)
    return np.sort(genes)


def enforce_length_cap(thetas: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    """Drop frequencies uniformly at random until at most cap remain"""
    if thetas.size <= cap:
        return thetas
    keep = rng.choice(thetas.size, size=cap, replace=False)
    return np.sort(thetas[np.sort(keep)])


def make_offspring(
    pool: Sequence[Candidate],
    measurements: Measurements,
    config: EngineConfig,
    rng: np.random.Generator,
) -> List[np.ndarray]:
    """N offspring genomes from consecutive pairs of the shuffled pool"""
    size = len(pool)
    shuffled = [pool[k] for k in rng.permutation(size)]
    genomes: List[np.ndarray] = []
    for i in range(0, size, 2):
        first = shuffled[i]
        second = shuffled[(i + 1) % size]
        children = variable_length_crossover(
            first.frequencies, second.frequencies, rng, config.crossover_attempts
        )
        for child in children:
            if len(genomes) == size:
                break
            child = polynomial_mutation(child, config.mutation_distribution_index, rng)
            genomes.append(enforce_length_cap(child, measurements.max_order, rng))
    return genomes


# ===== GENERATION LOOP =====

def snapshot_archive(members: Sequence[Candidate], energy: Optional[float]) -> Archive:
    """Per-length best of the given members, with no memory of earlier generations"""
    archive = Archive(energy=energy)
    for candidate in members:
        incumbent = archive.get(candidate.order)
        if incumbent is None or candidate.residual < incumbent.residual:
            archive = archive.with_entry(candidate)
    return archive


def step_generation(
    population: Population,
    archive: Archive,
    measurements: Measurements,
    config: EngineConfig,
    rng: np.random.Generator,
) -> Tuple[Population, Archive]:
    """One generation; returns the new population and archive"""
    size = len(population)
    ranks, crowding = rank_population(population.members)
    pool = tournament_selection(population, rng, ranks, crowding)

    offspring = [evaluate(g, measurements) for g in make_offspring(pool, measurements, config, rng)]
    evaluations = population.evaluations + len(offspring)

    members = environmental_selection(population.members + offspring, size)

    if config.variant == SolverVariant.NO_ARCHIVE:
        archive = snapshot_archive(members, measurements.energy)
    else:
        archive, members, spent = archive_and_prune(
            archive, members, measurements, rng, prune=config.variant == SolverVariant.FULL
        )
        evaluations += spent

    return Population(members=members, generation=population.generation + 1, evaluations=evaluations), archive


def solve(
    measurements: Measurements,
    config: EngineConfig = EngineConfig(),
    rng: Optional[np.random.Generator] = None,
) -> SolverResult:
    """Run the search until the stopping rule fires and return the knee"""
    rng = rng if rng is not None else np.random.default_rng()
    population = initialize(measurements, config, rng)
    archive = Archive(energy=measurements.energy)

    # Worst case per generation: N offspring plus one pruned refit per length
    generation_cost = config.population_size + min(config.population_size, measurements.max_order)

    history: List[np.ndarray] = []
    archive_log: List[Dict[int, float]] = []
    while True:
        reason = termination_reason(history, population.generation, population.evaluations, config)
        if reason is None and population.evaluations + generation_cost > config.max_evaluations:
            reason = "max_evaluations"
        if reason is not None:
            break

        population, archive = step_generation(population, archive, measurements, config, rng)
        knee = identify_knee(archive, config.residual_floor)
        history.append(knee.synthesize(measurements.observed_indices))
        history = history[-(config.stall_generations + 1):]
        if config.track_archive:
            archive_log.append(archive.residuals())

        engine_logger.debug(
            f"Generation {population.generation}: evaluations={population.evaluations} "
            f"archive={len(archive)} knee_order={knee.order}"
        )

    if len(archive) == 0:
        archive = snapshot_archive(population.members, measurements.energy)
    if config.slide_evaluations > 0:
        archive, spent = slide_archive(
            archive,
            measurements,
            config.max_evaluations - population.evaluations,
            config.slide_evaluations,
        )
        population.evaluations += spent
    knee = identify_knee(archive, config.residual_floor)

    engine_logger.info(
        f"Search finished ({reason}) after {population.generation} generations, "
        f"{population.evaluations} evaluations; knee order {knee.order}"
    )
    return SolverResult(
        knee=knee,
        archive=archive,
        population=population,
        termination=reason,
        archive_log=archive_log,
    )

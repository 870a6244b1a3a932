"""
Per-model-order archive and model order pruning

The archive keeps the lowest-residual candidate seen at each length. Every
candidate that newly enters it is pruned once: a random number of its
weakest frequencies is cut, amplitudes are refit, and the shorter candidate
is offered back to the archive and the population.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from solver.amplitude_solver import Candidate, evaluate
from solver.pareto import nondominated_indices
from solver.signal_model import Measurements

archive_logger = logging.getLogger("archive_pruning")


@dataclass
class Archive:
    """Best candidate per model order; energy is ||Y||_F^2 when known"""

    entries: Dict[int, Candidate] = field(default_factory=dict)
    energy: Optional[float] = None

    def get(self, order: int) -> Optional[Candidate]:
        return self.entries.get(order)

    def orders(self) -> List[int]:
        return sorted(self.entries)

    def candidates(self) -> List[Candidate]:
        """Entries ordered by model order"""
        return [self.entries[k] for k in self.orders()]

    def residuals(self) -> Dict[int, float]:
        return {k: self.entries[k].residual for k in self.orders()}

    def with_entry(self, candidate: Candidate) -> "Archive":
        """Copy with candidate stored under its own length"""
        entries = dict(self.entries)
        entries[candidate.order] = candidate
        return Archive(entries=entries, energy=self.energy)

    def __len__(self):
        return len(self.entries)


def elites(population: Sequence[Candidate]) -> List[Candidate]:
    """Pareto nondominated members of the population"""
    fitnesses = [c.fitness for c in population]
    return [population[i] for i in nondominated_indices(fitnesses)]


def archive_elites(archive: Archive, population: Sequence[Candidate]) -> Tuple[Archive, List[Candidate]]:
    """Store elites that beat (or fill) the archive slot of their length; return newcomers"""
    best_by_order: Dict[int, Candidate] = {}
    for elite in elites(population):
        incumbent = best_by_order.get(elite.order)
        if incumbent is None or elite.residual < incumbent.residual:
            best_by_order[elite.order] = elite

    updated = archive
    newcomers = []
    for order in sorted(best_by_order):
        elite = best_by_order[order]
        incumbent = updated.get(order)
        # Same length, so dominance means strictly lower residual
        if incumbent is None or elite.residual < incumbent.residual:
            updated = updated.with_entry(elite)
            newcomers.append(elite)

    return updated, newcomers


def compute_powers(amplitudes: np.ndarray) -> np.ndarray:
    """Per-frequency power sqrt(sum_l |S_il|^2)"""
    amplitudes = np.atleast_2d(np.asarray(amplitudes))
    return np.sqrt(np.sum(np.abs(amplitudes) ** 2, axis=1))


def prune_frequencies(candidate: Candidate, cut: int) -> np.ndarray:
    """Keep the order - cut highest-power frequencies, sorted ascending"""
    powers = compute_powers(candidate.amplitudes)
    # Stable: equal powers keep the lower index first
    ranking = np.argsort(-powers, kind="stable")
    kept = ranking[: candidate.order - cut]
    return np.sort(candidate.frequencies[kept])


def prune_newcomer(
    candidate: Candidate,
    measurements: Measurements,
    rng: np.random.Generator,
) -> Optional[Candidate]:
    """Cut a random number in [1, K-1] of the weakest frequencies and refit"""
    if candidate.order <= 1:
        return None
    cut = int(rng.integers(1, candidate.order))
    return evaluate(prune_frequencies(candidate, cut), measurements)


def apply_update(
    archive: Archive,
    population: Sequence[Candidate],
    pruned: Candidate,
    rng: np.random.Generator,
) -> Tuple[Archive, List[Candidate]]:
    """Offer a pruned candidate to the archive and population (three cases)"""
    members = list(population)
    incumbent = archive.get(pruned.order)

    if incumbent is None:
        # Case c: new length, archive only
        return archive.with_entry(pruned), members

    if pruned.residual < incumbent.residual:
        # Case b: replaces the archive entry and an arbitrary member
        slot = int(rng.integers(len(members)))
        members[slot] = pruned
        return archive.with_entry(pruned), members

    # Case a: incumbent is at least as good
    return archive, members


def archive_and_prune(
    archive: Archive,
    population: Sequence[Candidate],
    measurements: Measurements,
    rng: np.random.Generator,
    prune: bool = True,
) -> Tuple[Archive, List[Candidate], int]:
    """
    Archive the elites, then prune each newcomer once and apply the update.
    Returns the archive, the population and the number of evaluations spent.
    """
    archive, newcomers = archive_elites(archive, population)
    members = list(population)
    if not prune:
        return archive, members, 0

    evaluations = 0
    for newcomer in newcomers:
        pruned = prune_newcomer(newcomer, measurements, rng)
        if pruned is None:
            continue
        evaluations += 1
        archive, members = apply_update(archive, members, pruned, rng)

    archive_logger.debug(f"Archived {len(newcomers)} newcomers, {evaluations} pruned evaluations")
    return archive, members, evaluations

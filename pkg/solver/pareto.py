"""
Pareto dominance utilities shared by the engine, the archive and the knee finder
"""

from typing import List, Sequence, Tuple

import numpy as np

Fitness = Tuple[float, float]


def pareto_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when a is no worse than b everywhere and strictly better somewhere"""
    no_worse = all(x <= y for x, y in zip(a, b))
    better = any(x < y for x, y in zip(a, b))
    return no_worse and better


def fast_nondominated_sort(fitnesses: Sequence[Sequence[float]]) -> Tuple[List[List[int]], List[int]]:
    """
    Fast nondominated sort.
    Returns fronts as index lists (best first) and the 0-based rank of each point.
    """
    size = len(fitnesses)
    dominated_by = [[] for _ in range(size)]
    domination_count = [0 for _ in range(size)]
    rank = [0 for _ in range(size)]
    fronts = [[]]

    for p in range(size):
        for q in range(size):
            if p == q:
                continue
            if pareto_dominates(fitnesses[p], fitnesses[q]):
                dominated_by[p].append(q)
            elif pareto_dominates(fitnesses[q], fitnesses[p]):
                domination_count[p] += 1
        if domination_count[p] == 0:
            rank[p] = 0
            fronts[0].append(p)

    i = 0
    while fronts[i]:
        next_front = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                domination_count[q] -= 1
                if domination_count[q] == 0:
                    rank[q] = i + 1
                    next_front.append(q)
        i += 1
        fronts.append(sorted(next_front))

    fronts.pop()
    return fronts, rank


def crowding_distance(fitnesses: Sequence[Sequence[float]], front: Sequence[int]) -> np.ndarray:
    """Crowding distance of each member of front; boundary members get inf"""
    count = len(front)
    distances = np.zeros(count)
    if count == 0:
        return distances
    if count <= 2:
        distances[:] = np.inf
        return distances

    points = np.asarray([fitnesses[i] for i in front], dtype=float)
    for m in range(points.shape[1]):
        order = np.argsort(points[:, m], kind="stable")
        values = points[order, m]
        distances[order[0]] = np.inf
        distances[order[-1]] = np.inf
        span = values[-1] - values[0]
        if span <= 0.0:
            continue
        distances[order[1:-1]] += (values[2:] - values[:-2]) / span

    return distances


def nondominated_indices(fitnesses: Sequence[Sequence[float]]) -> List[int]:
    """Indices of the first front"""
    if not fitnesses:
        return []
    fronts, _ = fast_nondominated_sort(fitnesses)
    return fronts[0]

"""Environmental selection.

Two selection mechanisms are provided:

* rank-and-crowding truncation under an epsilon-relaxed feasible-first
  ordering (``environmental_select``), and
* reference-vector subregion selection in the angular domain
  (``angle_subregion_select``).

The epsilon-relaxed ordering compares solutions by max(0, cv - epsilon)
first; ties fall through to Pareto dominance on objectives. epsilon = 0 is
strict feasible-first comparison, epsilon = inf ignores constraints.

Tie-break contract (shared by every consumer, including test oracles):
fronts are filled in rank order; a split front is truncated by descending
crowding distance, ties kept in original index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Population, Solution, pareto_dominates

_VECTOR_PAD_SEED = 987654321


def adjusted_cv(cv: float, epsilon: float) -> float:
    """Violation remaining after the epsilon allowance."""
    if math.isinf(epsilon):
        return 0.0
    return max(0.0, cv - epsilon)


def epsilon_cdp_compare(a: Solution, b: Solution, epsilon: float) -> int:
    """-1 if a is better, 1 if b is better, 0 if incomparable.

    Lower adjusted violation wins outright; at equal adjusted violation the
    comparison falls back to Pareto dominance on objectives.
    """
    ca = adjusted_cv(a.cv, epsilon)
    cb = adjusted_cv(b.cv, epsilon)
    if ca < cb:
        return -1
    if cb < ca:
        return 1
    if pareto_dominates(a.objectives, b.objectives):
        return -1
    if pareto_dominates(b.objectives, a.objectives):
        return 1
    return 0


def _dominance_matrix(F: np.ndarray, cv_adj: np.ndarray) -> np.ndarray:
    """dom[i, j] = solution i dominates solution j under the relaxed order."""
    less_cv = cv_adj[:, None] < cv_adj[None, :]
    eq_cv = cv_adj[:, None] == cv_adj[None, :]
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    return less_cv | (eq_cv & le & lt)


def nondominated_ranks(F: np.ndarray, cvs: np.ndarray, epsilon: float) -> np.ndarray:
    """Fast nondominated sorting; rank 0 is the best front."""
    n = len(F)
    if math.isinf(epsilon):
        cv_adj = np.zeros(n)
    else:
        cv_adj = np.maximum(0.0, np.asarray(cvs, dtype=float) - epsilon)
    dom = _dominance_matrix(np.asarray(F, dtype=float), cv_adj)
    n_dominators = dom.sum(axis=0)
    ranks = np.full(n, -1, dtype=int)
    current = np.flatnonzero(n_dominators == 0)
    rank = 0
    while current.size:
        ranks[current] = rank
        n_dominators = n_dominators - dom[current].sum(axis=0)
        n_dominators[current] = -1
        current = np.flatnonzero(n_dominators == 0)
        rank += 1
    return ranks


def crowding_distances(F: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Cuboid crowding distance per front; boundary members get +inf."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    for r in np.unique(ranks):
        idx = np.flatnonzero(ranks == r)
        if idx.size <= 2:
            dist[idx] = np.inf
            continue
        for j in range(m):
            order = idx[np.argsort(F[idx, j], kind="stable")]
            fmin, fmax = F[order[0], j], F[order[-1], j]
            dist[order[0]] = np.inf
            dist[order[-1]] = np.inf
            span = fmax - fmin
            if span <= 0:
                continue
            gaps = (F[order[2:], j] - F[order[:-2], j]) / span
            dist[order[1:-1]] += gaps
    return dist


def rank_and_crowd(solutions, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    members = list(solutions)
    F = np.array([s.objectives for s in members])
    cvs = np.array([s.cv for s in members])
    ranks = nondominated_ranks(F, cvs, epsilon)
    crowd = crowding_distances(F, ranks)
    return ranks, crowd


def fitness_order(solutions, epsilon: float) -> list[int]:
    """Indices sorted best-first: rank ascending, crowding descending,
    original position as the final tie-break."""
    ranks, crowd = rank_and_crowd(solutions, epsilon)
    return sorted(range(len(ranks)), key=lambda i: (ranks[i], -crowd[i], i))


def environmental_select(union, n: int, epsilon: float) -> Population:
    """Keep the best min(n, |union|) solutions under the relaxed ordering.

    Whole fronts are admitted in rank order; the front that overflows is
    truncated by descending crowding distance.
    """
    members = list(union)
    if not members:
        raise ValueError("cannot select from an empty union")
    if len(members) <= n:
        return Population(members)
    ranks, crowd = rank_and_crowd(members, epsilon)
    chosen: list[int] = []
    for r in range(int(ranks.max()) + 1):
        front = [i for i in range(len(members)) if ranks[i] == r]
        if len(chosen) + len(front) <= n:
            chosen.extend(front)
            if len(chosen) == n:
                break
        else:
            front.sort(key=lambda i: (-crowd[i], i))
            chosen.extend(front[: n - len(chosen)])
            break
    return Population([members[i] for i in chosen])


@dataclass(frozen=True)
class ReferenceVectorSet:
    """Unit direction vectors in objective space; ``min_angle`` is the
    smallest member-to-vector angle observed at the last assignment."""

    vectors: np.ndarray
    min_angle: float | None = None


def _simplex_lattice(m: int, h: int) -> np.ndarray:
    """All compositions of h into m nonnegative parts, first coordinate
    descending, scaled to the unit simplex."""
    if m == 1:
        return np.array([[float(h)]])
    rows = []
    for first in range(h, -1, -1):
        rest = _simplex_lattice(m - 1, h - first)
        rows.append(np.column_stack([np.full(len(rest), float(first)), rest]))
    return np.vstack(rows)


def das_dennis_vectors(m: int, target: int, pad_seed: int = _VECTOR_PAD_SEED) -> ReferenceVectorSet:
    """Simplex-lattice directions, unit 2-norm.

    Uses the largest lattice parameter H whose point count does not exceed
    ``target``; any shortfall is padded with seeded uniform simplex points
    so the result always holds exactly ``target`` vectors.
    """
    if m < 2 or target < 2:
        raise ValueError("need m >= 2 and target >= 2")
    h = 1
    while math.comb(h + m, m - 1) <= target:
        h += 1
    pts = _simplex_lattice(m, h) / h
    if len(pts) > target:
        pts = pts[:target]
    if len(pts) < target:
        rng = np.random.Generator(np.random.PCG64(pad_seed + 1000 * m + target))
        extra = rng.dirichlet(np.ones(m), size=target - len(pts))
        pts = np.vstack([pts, extra])
    vectors = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return ReferenceVectorSet(vectors=vectors)


def unconstrained_nondominated(F: np.ndarray) -> np.ndarray:
    """Indices of the Pareto-nondominated rows of an objective matrix."""
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    dominated = (le & lt).any(axis=0)
    return np.flatnonzero(~dominated)


def angular_distances(normalized: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Angle in radians between each normalized objective vector (rows) and
    each reference vector (columns)."""
    norms = np.maximum(np.linalg.norm(normalized, axis=1, keepdims=True), 1e-12)
    cosine = (normalized @ vectors.T) / norms
    return np.arccos(np.clip(cosine, -1.0, 1.0))


def angle_subregion_select(pop_aux, offspring, n_s: int, epsilon: float) -> Population:
    """Subregion selection in the angular domain.

    The nondominated subset of the combined candidates is normalized to
    [0, 1] per objective and assigned to reference vectors. Each vector picks
    one candidate: a feasible one with the smallest violation-plus-angle
    score when any candidate falls strictly inside the global minimum-angle
    radius, otherwise simply the angularly nearest candidate. When the
    incoming population is smaller than 25, unselected candidates top up the
    pool. The picks are then ranked under the epsilon ordering and the best
    n_s returned.
    """
    aux_members = list(pop_aux)
    members = aux_members + list(offspring)
    if not members:
        raise ValueError("cannot select from an empty candidate set")
    F = np.array([s.objectives for s in members])
    cvs = np.array([s.cv for s in members])
    nd = unconstrained_nondominated(F)

    z_min = F[nd].min(axis=0)
    z_max = F[nd].max(axis=0)
    span = np.maximum(z_max - z_min, 1e-12)
    normalized = (F[nd] - z_min) / span

    ref = das_dennis_vectors(F.shape[1], n_s)
    ang = angular_distances(normalized, ref.vectors)
    h = float(ang.min())

    picks: list[int] = []
    for k in range(n_s):
        inside = np.flatnonzero(ang[:, k] < h)
        if inside.size == 0:
            local = int(np.argmin(ang[:, k]))
        else:
            feasible = inside[cvs[nd[inside]] == 0.0]
            if feasible.size:
                scores = cvs[nd[feasible]] + ang[feasible, k]
                local = int(feasible[np.argmin(scores)])
            else:
                local = int(inside[np.argmin(ang[inside, k])])
        picks.append(int(nd[local]))

    selected = [members[i] for i in picks]
    chosen_set = set(picks)
    remainder = [members[i] for i in range(len(members)) if i not in chosen_set]
    pool = list(selected)
    if len(aux_members) < 25:
        pool.extend(remainder[: 25 - len(aux_members)])

    order = fitness_order(pool, epsilon)
    return Population([pool[i] for i in order[:n_s]])

"""Exploration-stage convergence detection and classification of how the
constrained front relates to the unconstrained one.

The relationship types:
    1  fronts coincide
    2  fronts partially overlap
    3  fronts completely separated
    4  unclear (reached only through repeated reclassification disagreement)
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .core import Population
from .selection import unconstrained_nondominated

TYPE_COINCIDENT = 1
TYPE_PARTIAL = 2
TYPE_SEPARATED = 3
TYPE_UNCLEAR = 4


class HistoryNotReady(LookupError):
    """Not enough recorded generations to evaluate the movement metric."""


class PointHistory:
    """Ring buffer of (ideal, nadir, average) points per generation."""

    def __init__(self, gap: int = 10, delta: float = 1e-7):
        if gap < 1:
            raise ValueError("gap must be at least 1")
        self.gap = gap
        self.delta = delta
        self._entries: deque[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = deque(maxlen=gap + 1)

    def record(self, generation: int, pop: Population) -> None:
        self.record_points(generation, pop.ideal, pop.nadir, pop.average)

    def record_points(self, generation: int, ideal, nadir, average) -> None:
        self._entries.append((generation, np.array(ideal, dtype=float),
                              np.array(nadir, dtype=float), np.array(average, dtype=float)))

    def lookup(self, generation: int):
        for entry in self._entries:
            if entry[0] == generation:
                return entry
        raise HistoryNotReady(f"no record for generation {generation}")

    @property
    def latest_generation(self) -> int | None:
        return self._entries[-1][0] if self._entries else None


def rs_metric(history: PointHistory, g: int) -> float:
    """Largest relative movement of the ideal, nadir or average point over
    the configured generation gap. Small values mean the population has
    stopped moving in objective space."""
    _, *now = history.lookup(g)
    _, *then = history.lookup(g - history.gap)
    worst = 0.0
    for p_now, p_then in zip(now, then):
        denom = np.maximum(np.abs(p_then), history.delta)
        worst = max(worst, float((np.abs(p_now - p_then) / denom).max()))
    return worst


def should_switch(rs: float, g: int, strict_only: bool = False) -> bool:
    """Stage-transition trigger: progressively looser movement thresholds as
    generations accumulate, with a hard cap at generation 250.

    ``strict_only`` keeps just the tightest threshold (plus the cap).
    """
    if g > 250:
        return True
    if rs < 0.001 and g > 10:
        return True
    if strict_only:
        return False
    if rs < 0.02 and g > 100:
        return True
    if rs < 0.05 and g > 150:
        return True
    return False


def classify_relationship(pop_main: Population, pop_aux: Population,
                          coincident_threshold: float = 0.9) -> int:
    """Classify the front relationship from the auxiliary population.

    Looks at the feasible fraction of the auxiliary population's
    unconstrained nondominated set: everything feasible means the fronts
    coincide, nothing feasible means they are separated, and anything in
    between is partial overlap. The main population is accepted for
    interface parity but the decision rests on the auxiliary one.
    """
    if not len(pop_main) or not len(pop_aux):
        raise ValueError("both populations must be nonempty")
    F = pop_aux.objectives()
    nd = unconstrained_nondominated(F)
    cvs = pop_aux.cvs()[nd]
    phi = float(np.mean(cvs == 0.0))
    if phi >= coincident_threshold:
        return TYPE_COINCIDENT
    if phi == 0.0:
        return TYPE_SEPARATED
    return TYPE_PARTIAL


@dataclass(frozen=True)
class TypeTracker:
    """Current relationship type plus a disagreement counter.

    The counter increments whenever a reclassification disagrees with the
    held type; the type itself only moves once the counter has passed 3.
    By default the counter persists across updates; ``reset_on_update``
    clears it each time the type changes.
    """

    type: int
    cnt: int = 0
    reset_on_update: bool = False


def track_type(tracker: TypeTracker, ntype: int) -> TypeTracker:
    if ntype == tracker.type:
        return tracker
    cnt = tracker.cnt + 1
    if cnt > 3:
        return replace(tracker, type=ntype, cnt=0 if tracker.reset_on_update else cnt)
    return replace(tracker, cnt=cnt)

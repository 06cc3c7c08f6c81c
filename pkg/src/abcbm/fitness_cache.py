"""Nearest-neighbour fitness approximation for a single block search.

A :class:`HistoryArray` holds every position whose SAD was actually computed.
:meth:`HistoryArray.classify` decides, for a new position, whether to compute
its SAD or to copy the value of the closest stored position:

* exact hit -> reuse the stored value (SAD is deterministic);
* nothing stored within distance ``d`` -> evaluate (exploration);
* the closest stored position holds the best SAD so far -> evaluate (exploitation);
* otherwise -> estimate with the closest stored value.

Only real evaluations are stored; estimates never enter the history.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

Position = tuple[int, int]


class DecisionKind(enum.Enum):
    EVALUATE = "evaluate"
    ESTIMATE = "estimate"
    REUSE = "reuse"


@dataclass(frozen=True)
class HistoryEntry:
    position: Position
    objective: int
    insertion_index: int


@dataclass(frozen=True)
class CacheParams:
    d: float = 3.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("distance threshold d must be positive")


@dataclass(frozen=True)
class CacheDecision:
    kind: DecisionKind
    value: int | None = None
    nearest_distance: float = math.inf
    # 1 exploitation, 2 exploration, 3 nearest-neighbour estimate; None for reuse
    rule: int | None = None
    donor: Position | None = None


def distance(a: Position, b: Position) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class HistoryArray:
    entries: list = field(default_factory=list)
    best: int | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, p) -> bool:
        return tuple(p) in self._index

    def nearest(self, p: Position) -> tuple[HistoryEntry, float] | None:
        """Closest stored entry; ties resolve to the earliest insertion."""
        best_entry, best_dist = None, math.inf
        for e in self.entries:
            dist = distance(e.position, p)
            if dist < best_dist:
                best_entry, best_dist = e, dist
        if best_entry is None:
            return None
        return best_entry, best_dist

    def classify(self, p: Position, params: CacheParams) -> CacheDecision:
        hit = self.nearest(p)
        if hit is None:
            return CacheDecision(DecisionKind.EVALUATE, rule=2)
        entry, dist = hit
        if dist == 0:
            return CacheDecision(DecisionKind.REUSE, entry.objective, 0.0, donor=entry.position)
        if dist > params.d:
            return CacheDecision(DecisionKind.EVALUATE, nearest_distance=dist, rule=2)
        if entry.objective == self.best:
            return CacheDecision(DecisionKind.EVALUATE, nearest_distance=dist, rule=1)
        return CacheDecision(DecisionKind.ESTIMATE, entry.objective, dist, rule=3,
                             donor=entry.position)

    def record(self, p: Position, objective: int) -> HistoryEntry:
        p = (int(p[0]), int(p[1]))
        if p in self._index:
            raise ValueError(f"position {p} is already in the history")
        entry = HistoryEntry(p, int(objective), len(self.entries))
        self.entries.append(entry)
        self._index[p] = entry
        if self.best is None or entry.objective < self.best:
            self.best = entry.objective
        return entry

    def lookup(self, p: Position) -> HistoryEntry | None:
        return self._index.get(tuple(p))


def nearest(T: HistoryArray, p: Position):
    return T.nearest(p)


def classify(T: HistoryArray, p: Position, params: CacheParams = CacheParams()) -> CacheDecision:
    return T.classify(p, params)


def record(T: HistoryArray, p: Position, objective: int) -> HistoryArray:
    T.record(p, objective)
    return T

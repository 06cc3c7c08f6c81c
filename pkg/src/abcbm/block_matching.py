"""Per-block motion search and whole-frame motion fields.

Four searches are provided: exhaustive full search (the accuracy oracle), the
three-step and diamond baselines, and the bee-colony search with a
nearest-neighbour fitness cache. All of them break SAD ties the same way:
smaller Euclidean norm of the vector first, then raster order (v, then u).
The pattern searches additionally keep the current centre on a tie.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .abc_engine import (
    AbcParams,
    FoodSource,
    Provenance,
    SearchBounds,
    block_rng,
    greedy_replace,
    neighbor,
    roulette_select,
    scout_check,
    selection_probabilities,
)
from .fitness_cache import CacheParams, DecisionKind, HistoryArray
from .frame_io import Frame
from .metrics import BlockSpec, block_grid

ALGORITHMS = ("fsa", "tss", "ds", "abc")

DEFAULT_PATTERN = ((0, 0), (-4, 0), (4, 0), (0, -4), (0, 4))

LDSP = ((0, 0), (0, -2), (-1, -1), (1, -1), (-2, 0), (2, 0), (-1, 1), (1, 1), (0, 2))
SDSP = ((0, 0), (0, -1), (-1, 0), (1, 0), (0, 1))


class MotionVector(NamedTuple):
    u: int
    v: int


@dataclass(frozen=True)
class SearchWindow:
    w: int
    bounds: SearchBounds

    @property
    def size(self) -> int:
        return self.bounds.size

    def __contains__(self, p) -> bool:
        return p in self.bounds


@dataclass(frozen=True)
class TraceEvent:
    iteration: int
    phase: str
    position: tuple[int, int]
    kind: str
    value: int | None
    nearest_distance: float | None = None
    rule: int | None = None


@dataclass(frozen=True)
class BlockResult:
    mv: MotionVector
    sad: int
    evaluations: int
    estimations: int = 0
    reuses: int = 0
    candidates: int = 0
    trace: tuple | None = field(default=None, compare=False)


@dataclass(frozen=True)
class MotionField:
    grid: tuple
    n: int
    w: int
    algorithm: str = ""

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def blocks(self):
        for r, row in enumerate(self.grid):
            for c, res in enumerate(row):
                yield r, c, res


@dataclass(frozen=True)
class SearchConfig:
    algorithm: str = "abc"
    block_size: int = 16
    window: int = 8
    d: float = 3.0
    limit: int = 10
    iterations: int | None = None
    population: int = 5
    pattern: tuple = DEFAULT_PATTERN
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.block_size < 1 or self.window < 1:
            raise ValueError("block size and window must be positive")

    @property
    def n_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return 4 if self.window <= 8 else 8

    def abc_params(self) -> AbcParams:
        return AbcParams(self.population, self.limit, self.n_iterations, self.seed)

    def cache_params(self) -> CacheParams:
        return CacheParams(self.d)


def _rank(s: int, p) -> tuple:
    return (s, p[0] * p[0] + p[1] * p[1], p[1], p[0])


def clip_window(block: BlockSpec, width: int, height: int, w: int) -> SearchWindow:
    """Displacements within [-w, w]^2 that keep the displaced block inside the frame."""
    if not block.fits(width, height):
        raise ValueError(f"{block} does not fit a {width}x{height} frame")
    low = (max(-w, -block.x), max(-w, -block.y))
    high = (min(w, width - block.n - block.x), min(w, height - block.n - block.y))
    return SearchWindow(w, SearchBounds(low, high))


class _BlockCost:
    """SAD of one template block against displaced blocks, with bookkeeping."""

    def __init__(self, current: Frame, previous: Frame, block: BlockSpec, trace: bool = False):
        n = block.n
        self.block = block
        self.template = current.luma[block.y:block.y + n, block.x:block.x + n].astype(np.int32)
        self.prev = previous.luma
        self.seen: dict = {}
        self.evaluations = 0
        self.reuses = 0
        self.events = [] if trace else None

    def compute(self, p) -> int:
        n, x, y = self.block.n, self.block.x + p[0], self.block.y + p[1]
        cand = self.prev[y:y + n, x:x + n].astype(np.int32)
        return int(np.abs(self.template - cand).sum())

    def probe(self, p, iteration: int = 0, phase: str = "") -> int:
        """Memoised SAD: repeated positions are reused, not recomputed."""
        p = (int(p[0]), int(p[1]))
        if p in self.seen:
            self.reuses += 1
            s = self.seen[p]
            self._log(iteration, phase, p, "reuse", s)
        else:
            s = self.seen[p] = self.compute(p)
            self.evaluations += 1
            self._log(iteration, phase, p, "evaluate", s)
        return s

    def _log(self, iteration, phase, p, kind, value, dist=None, rule=None):
        if self.events is not None:
            self.events.append(TraceEvent(iteration, phase, p, kind, value, dist, rule))

    def result(self, mv, s, estimations: int = 0, candidates: int | None = None) -> BlockResult:
        if candidates is None:
            candidates = self.evaluations + self.reuses + estimations
        return BlockResult(
            MotionVector(int(mv[0]), int(mv[1])), int(s), self.evaluations, estimations,
            self.reuses, candidates, tuple(self.events) if self.events is not None else None,
        )


# ---------------------------------------------------------------- full search

def full_search(current: Frame, previous: Frame, block: BlockSpec, w: int,
                window: SearchWindow | None = None, trace: bool = False) -> BlockResult:
    """Exhaustive search over the clipped window."""
    if window is None:
        window = clip_window(block, previous.width, previous.height, w)
    (ulo, vlo), (uhi, vhi) = window.bounds.low, window.bounds.high
    n = block.n
    template = current.luma[block.y:block.y + n, block.x:block.x + n].astype(np.int32)
    region = previous.luma[block.y + vlo:block.y + vhi + n, block.x + ulo:block.x + uhi + n]
    views = sliding_window_view(region, (n, n))  # [v_idx, u_idx, n, n]
    sads = np.abs(views.astype(np.int32) - template).sum(axis=(2, 3))
    vs, us = np.mgrid[vlo:vhi + 1, ulo:uhi + 1]
    order = np.lexsort((us.ravel(), vs.ravel(), (us * us + vs * vs).ravel(), sads.ravel()))
    k = int(order[0])
    mv = (int(us.ravel()[k]), int(vs.ravel()[k]))
    events = None
    if trace:
        events = tuple(
            TraceEvent(0, "full", (int(u), int(v)), "evaluate", int(s))
            for u, v, s in zip(us.ravel(), vs.ravel(), sads.ravel())
        )
    count = int(sads.size)
    return BlockResult(MotionVector(*mv), int(sads.ravel()[k]), count, 0, 0, count, events)


# ---------------------------------------------------------------- pattern searches

def _pattern_step(cost: _BlockCost, window: SearchWindow, center, offsets, scale: int,
                  iteration: int, phase: str):
    best, best_key = None, None
    for du, dv in offsets:
        p = (center[0] + du * scale, center[1] + dv * scale)
        if p not in window:
            continue
        s = cost.probe(p, iteration, phase)
        key = (s, p != tuple(center)) + _rank(0, p)[1:]
        if best_key is None or key < best_key:
            best, best_key = p, key
    return best, best_key[0]


def tss(current: Frame, previous: Frame, block: BlockSpec, w: int,
        window: SearchWindow | None = None, trace: bool = False) -> BlockResult:
    """Three-step search: 3x3 pattern at spacing s, halving s down to 1."""
    if w < 2:
        raise ValueError("three-step search needs w >= 2")
    if window is None:
        window = clip_window(block, previous.width, previous.height, w)
    cost = _BlockCost(current, previous, block, trace)
    step = 2 ** (math.ceil(math.log2(w)) - 1)
    center, s = (0, 0), None
    square = [(du, dv) for dv in (-1, 0, 1) for du in (-1, 0, 1)]
    k = 0
    while step >= 1:
        center, s = _pattern_step(cost, window, center, square, step, k, "step")
        step //= 2
        k += 1
    return cost.result(center, s)


def ds(current: Frame, previous: Frame, block: BlockSpec, w: int,
       window: SearchWindow | None = None, trace: bool = False) -> BlockResult:
    """Diamond search: large diamond until the centre wins, then one small diamond."""
    if w < 2:
        raise ValueError("diamond search needs w >= 2")
    if window is None:
        window = clip_window(block, previous.width, previous.height, w)
    cost = _BlockCost(current, previous, block, trace)
    center = (0, 0)
    k = 0
    while True:
        best, _ = _pattern_step(cost, window, center, LDSP, 1, k, "large")
        k += 1
        if best == center:
            break
        center = best
    center, s = _pattern_step(cost, window, center, SDSP, 1, k, "small")
    return cost.result(center, s)


# ---------------------------------------------------------------- bee colony

def initial_pattern(window: SearchWindow, pattern: Sequence = DEFAULT_PATTERN) -> list:
    """Clip the fixed start positions into the window, moving duplicates to the
    nearest free in-window position."""
    taken: list = []
    for p in pattern:
        q = window.bounds.clamp(p)
        if q in taken:
            free = [c for c in window.bounds.positions() if c not in taken]
            if not free:
                break
            q = min(free, key=lambda c: (
                (c[0] - q[0]) ** 2 + (c[1] - q[1]) ** 2, c[0] ** 2 + c[1] ** 2, c[1], c[0]))
        taken.append(q)
    return taken


def abc_bm(current: Frame, previous: Frame, block: BlockSpec, window: SearchWindow,
           params: AbcParams = AbcParams(), cache_params: CacheParams = CacheParams(),
           rng: np.random.Generator | None = None, pattern: Sequence = DEFAULT_PATTERN,
           trace: bool = False) -> BlockResult:
    """Bee-colony block search whose SADs go through the nearest-neighbour cache.

    Each iteration issues one employed and one onlooker candidate per food source,
    so a run processes ``population * (1 + 2 * iterations)`` candidates. A source
    abandoned by a scout is given a random position; that position is resolved
    through the cache as the source's employed candidate in the next iteration.
    The returned vector is the best position whose SAD was really computed.
    """
    if rng is None:
        rng = np.random.default_rng(params.rng_seed)
    cost = _BlockCost(current, previous, block, trace)
    T = HistoryArray()
    bounds = window.bounds
    estimations = 0
    candidates = 0

    def resolve(p, iteration, phase, force=False):
        nonlocal estimations, candidates
        candidates += 1
        dec = T.classify(p, cache_params)
        if dec.kind is DecisionKind.REUSE:
            cost.reuses += 1
            cost._log(iteration, phase, p, "reuse", dec.value, 0.0, None)
            return dec.value, Provenance.REUSED
        if dec.kind is DecisionKind.ESTIMATE and not force:
            estimations += 1
            cost._log(iteration, phase, p, "estimate", dec.value, dec.nearest_distance, 3)
            return dec.value, Provenance.ESTIMATED
        s = cost.compute(p)
        cost.evaluations += 1
        T.record(p, s)
        rule = dec.rule if dec.kind is DecisionKind.EVALUATE else None
        dist = dec.nearest_distance if math.isfinite(dec.nearest_distance) else None
        cost._log(iteration, phase, p, "evaluate", s, dist, rule)
        return s, Provenance.EVALUATED

    pop = []
    for p in initial_pattern(window, pattern)[:params.population]:
        s, prov = resolve(p, 0, "init", force=True)
        pop.append(FoodSource(p, s, prov))

    if len(pop) >= 2:
        size = len(pop)
        for it in range(params.iterations):
            for i in range(size):
                src = pop[i]
                if src.objective is None:
                    s, prov = resolve(src.position, it, "scout")
                    pop[i] = FoodSource(src.position, s, prov)
                    continue
                cand = neighbor(pop, i, bounds, rng)
                s, prov = resolve(cand, it, "employed")
                pop[i], _ = greedy_replace(src, FoodSource(cand, s, prov))

            probs = selection_probabilities([src.fitness for src in pop])
            for _ in range(size):
                i = roulette_select(probs, rng)
                cand = neighbor(pop, i, bounds, rng)
                s, prov = resolve(cand, it, "onlooker")
                pop[i], _ = greedy_replace(pop[i], FoodSource(cand, s, prov))

            pop = [scout_check(src, params, bounds, rng) for src in pop]

    best = min(T, key=lambda e: _rank(e.objective, e.position))
    return cost.result(best.position, best.objective, estimations, candidates)


# ---------------------------------------------------------------- frames

def search_block(current: Frame, previous: Frame, block: BlockSpec, config: SearchConfig,
                 rng: np.random.Generator | None = None, trace: bool = False) -> BlockResult:
    window = clip_window(block, previous.width, previous.height, config.window)
    if config.algorithm == "fsa":
        return full_search(current, previous, block, config.window, window, trace)
    if config.algorithm == "tss":
        return tss(current, previous, block, config.window, window, trace)
    if config.algorithm == "ds":
        return ds(current, previous, block, config.window, window, trace)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return abc_bm(current, previous, block, window, config.abc_params(), config.cache_params(),
                  rng, config.pattern, trace)


def estimate_motion_field(current: Frame, previous: Frame, config: SearchConfig,
                          frame_index: int = 0, workers: int = 1,
                          trace: bool = False) -> MotionField:
    """One search per block. Each block gets its own generator derived from
    (seed, frame_index, row, col), so the field does not depend on `workers`."""
    if current.luma.shape != previous.luma.shape:
        raise ValueError(
            f"frame sizes differ: {current.width}x{current.height} vs "
            f"{previous.width}x{previous.height}"
        )
    n = config.block_size
    if current.width % n or current.height % n:
        raise ValueError(f"{current.width}x{current.height} frame is not cropped to {n}px blocks")
    grid = block_grid(current.width, current.height, n)
    jobs = [(r, c, b) for r, row in enumerate(grid) for c, b in enumerate(row)]

    def run(job):
        r, c, b = job
        rng = block_rng(config.seed, frame_index, r, c) if config.algorithm == "abc" else None
        return search_block(current, previous, b, config, rng, trace)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    cols = len(grid[0])
    out = tuple(tuple(results[r * cols:(r + 1) * cols]) for r in range(len(grid)))
    return MotionField(out, n, config.window, config.algorithm)

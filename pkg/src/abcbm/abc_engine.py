"""Artificial Bee Colony building blocks over a bounded 2-D integer lattice.

Random numbers come from numpy's PCG64 bit generator. A search is given its
own ``numpy.random.Generator``; :func:`block_rng` derives one per block from
``SeedSequence([seed, frame_index, block_row, block_col])`` so results do not
depend on the order in which blocks are processed.

Draw order inside :func:`neighbor` is fixed: dimension, partner, then phi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

Position = tuple[int, int]


class Provenance(enum.Enum):
    EVALUATED = "evaluated"
    ESTIMATED = "estimated"
    REUSED = "reused"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SearchBounds:
    low: Position
    high: Position

    def __post_init__(self):
        if self.low[0] > self.high[0] or self.low[1] > self.high[1]:
            raise ValueError(f"empty bounds {self.low}..{self.high}")

    def clamp(self, p: Sequence[int]) -> Position:
        return (min(max(int(p[0]), self.low[0]), self.high[0]),
                min(max(int(p[1]), self.low[1]), self.high[1]))

    def __contains__(self, p) -> bool:
        return (self.low[0] <= p[0] <= self.high[0]) and (self.low[1] <= p[1] <= self.high[1])

    @property
    def size(self) -> int:
        return (self.high[0] - self.low[0] + 1) * (self.high[1] - self.low[1] + 1)

    def positions(self):
        """All lattice points in raster order (second coordinate outer)."""
        for v in range(self.low[1], self.high[1] + 1):
            for u in range(self.low[0], self.high[0] + 1):
                yield (u, v)


@dataclass(frozen=True)
class FoodSource:
    position: Position
    objective: int | None = None
    provenance: Provenance = Provenance.UNKNOWN
    trials: int = 0

    @property
    def fitness(self) -> float | None:
        return None if self.objective is None else fitness_transform(self.objective)


@dataclass(frozen=True)
class AbcParams:
    population: int = 5
    limit: int = 10
    iterations: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2 (neighbour moves need a partner)")
        if self.limit < 1 or self.iterations < 1:
            raise ValueError("limit and iterations must be >= 1")


def block_rng(seed: int, frame_index: int, row: int, col: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, frame_index, row, col])))


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def init_random(bounds: SearchBounds, rng: np.random.Generator) -> Position:
    """Uniform random lattice point: low + U(0,1) * (high - low), rounded and clamped."""
    coords = []
    for lo, hi in zip(bounds.low, bounds.high):
        coords.append(round_half_away(lo + rng.random() * (hi - lo)))
    return bounds.clamp(coords)


def neighbor(pop: Sequence[FoodSource], i: int, bounds: SearchBounds,
             rng: np.random.Generator) -> Position:
    """Perturb one randomly chosen coordinate of pop[i] relative to a random partner k != i."""
    if len(pop) < 2:
        raise ValueError("neighbour generation needs at least two food sources")
    if not 0 <= i < len(pop):
        raise IndexError(f"source index {i} out of range for population of {len(pop)}")
    j = int(rng.integers(2))
    k = int(rng.integers(len(pop) - 1))
    if k >= i:
        k += 1
    phi = rng.uniform(-1.0, 1.0)
    return perturb(pop[i].position, pop[k].position, j, phi, bounds)


def perturb(xi: Position, xk: Position, j: int, phi: float, bounds: SearchBounds) -> Position:
    """The deterministic half of :func:`neighbor`, for a given dimension and phi."""
    out = list(xi)
    out[j] = round_half_away(xi[j] + phi * (xi[j] - xk[j]))
    return bounds.clamp(out)


def fitness_transform(j: float) -> float:
    return 1.0 / (1.0 + j) if j >= 0 else 1.0 + abs(j)


def selection_probabilities(fits: Sequence[float]) -> list[float]:
    if len(fits) == 0:
        raise ValueError("no fitness values")
    if any(not f > 0 for f in fits):
        raise ValueError("fitness values must be positive")
    total = math.fsum(fits)
    return [f / total for f in fits]


def roulette_index(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF lookup of a uniform draw u in [0, 1)."""
    if len(probs) == 0:
        raise ValueError("no probabilities")
    acc = 0.0
    for idx, p in enumerate(probs):
        acc += p
        if u < acc:
            return idx
    # u fell past the float sum; take the last index with mass
    return max(idx for idx, p in enumerate(probs) if p > 0)


def roulette_select(probs: Sequence[float], rng: np.random.Generator) -> int:
    return roulette_index(probs, rng.random())


def greedy_replace(incumbent: FoodSource, challenger: FoodSource) -> tuple[FoodSource, bool]:
    """Keep the fitter source; ties go to the incumbent and count as a failed trial."""
    if incumbent.objective is None or challenger.objective is None:
        raise ValueError("greedy selection needs known fitness on both sides")
    if challenger.fitness > incumbent.fitness:
        return replace(challenger, trials=0), True
    return replace(incumbent, trials=incumbent.trials + 1), False


def scout_check(source: FoodSource, params: AbcParams, bounds: SearchBounds,
                rng: np.random.Generator) -> FoodSource:
    if source.trials <= params.limit:
        return source
    return FoodSource(init_random(bounds, rng))

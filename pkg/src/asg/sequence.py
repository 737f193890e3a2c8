"""Chromosomes, feasibility, and the two fitness objectives.

A chromosome is an assembly order of part ids plus one approach direction per
placement. Fitness 1 rewards satisfied insertion precedences and few
direction changes; Fitness 2 rewards a low maximum constraint-state
transition difficulty. Infeasible chromosomes evaluate to the sentinels
(eta/2, 0) but carry an explicit feasibility flag so the sentinels are never
used to infer feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .relations import RelationSet
from .voxel import TRANSLATION_LABELS

DIRECTION_INDEX = {lab: i for i, lab in enumerate(TRANSLATION_LABELS)}


@dataclass(frozen=True)
class Chromosome:
    """Assembly order (permutation of 1-based part ids) with directions.

    ``directions[p]`` is the motion vector of the part placed at position p
    (e.g. "-z" means the part is lowered into place).
    """

    order: tuple[int, ...]
    directions: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.order) != len(self.directions):
            raise ValueError("order and directions must have equal length")
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise ValueError("order must be a permutation of 1..eta")
        for d in self.directions:
            if d not in DIRECTION_INDEX:
                raise ValueError(f"bad direction {d!r}")

    @property
    def eta(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class FitnessPair:
    fitness1: float
    fitness2: float
    feasible: bool

    @property
    def total(self) -> float:
        return self.fitness1 + self.fitness2

    def vector(self) -> tuple[float, float]:
        return (self.fitness1, self.fitness2)


def is_feasible(c: Chromosome, rel: RelationSet) -> bool:
    """Every placement must be able to approach along its direction.

    Approaching from infinity along d is collision-free with each already
    placed part iff the part can retreat unboundedly along the opposite
    direction: M[opp(d)][new][placed] = 1.
    """
    eta = c.eta
    if eta <= 1:
        return True
    m = rel.m_stack()
    opp = rel.opposite_index()
    order_idx = np.fromiter((pid - 1 for pid in c.order), dtype=np.int64, count=eta)
    dir_idx = np.fromiter((DIRECTION_INDEX[d] for d in c.directions), dtype=np.int64, count=eta)
    rows = m[opp[dir_idx], order_idx, :]  # rows[k, q] = M[opp(d_k)][part_k][q]
    table = rows[:, order_idx]  # table[k, j] vs the part placed at position j
    lower = np.tril_indices(eta, -1)
    return bool(table[lower].all())


def direction_changes(c: Chromosome) -> int:
    """r(s): adjacent placements whose assembly direction differs."""
    return sum(1 for a, b in zip(c.directions, c.directions[1:]) if a != b)


def insertion_score(c: Chromosome, I: np.ndarray) -> tuple[int, int]:
    """(alpha, beta): satisfied vs violated insertion precedences.

    I[i][k] = 1 reads "part i is inserted into part k"; the pair is satisfied
    when k precedes i in the order.
    """
    pos = {pid: p for p, pid in enumerate(c.order)}
    alpha = beta = 0
    for i, k in zip(*np.nonzero(I)):
        if pos[k + 1] < pos[i + 1]:
            alpha += 1
        else:
            beta += 1
    return alpha, beta


def fitness1(c: Chromosome, rel: RelationSet, feasible: bool | None = None) -> float:
    """Insertion-condition objective: 2*eta + alpha - beta - r, or eta/2."""
    if feasible is None:
        feasible = is_feasible(c, rel)
    if not feasible:
        return c.eta / 2.0
    a, b = insertion_score(c, rel.I)
    return 2.0 * c.eta + a - b - direction_changes(c)


def step_cstd(c: Chromosome, C: np.ndarray) -> list[int]:
    """Per-placement constraint sums against the already placed parts."""
    idx = np.fromiter((pid - 1 for pid in c.order), dtype=np.int64, count=c.eta)
    sub = C[np.ix_(idx, idx)]
    steps = []
    for k in range(1, c.eta):
        steps.append(int(sub[:k, k].sum()))
    return steps


def max_cstd(c: Chromosome, C: np.ndarray) -> int:
    """H: the worst constraint-state transition over all placements."""
    if c.eta < 2:
        return 0
    idx = np.fromiter((pid - 1 for pid in c.order), dtype=np.int64, count=c.eta)
    sub = C[np.ix_(idx, idx)]
    prefix = np.cumsum(sub, axis=0)
    steps = prefix[np.arange(c.eta - 1), np.arange(1, c.eta)]
    return int(steps.max())


def fitness2(c: Chromosome, rel: RelationSet, feasible: bool | None = None) -> float:
    """CSTD objective: 12*(eta-1) - H, or 0 when infeasible."""
    if feasible is None:
        feasible = is_feasible(c, rel)
    if not feasible:
        return 0.0
    return 12.0 * (c.eta - 1) - max_cstd(c, rel.C)


def evaluate(c: Chromosome, rel: RelationSet) -> FitnessPair:
    feasible = is_feasible(c, rel)
    return FitnessPair(fitness1(c, rel, feasible), fitness2(c, rel, feasible), feasible)

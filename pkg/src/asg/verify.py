"""Pareto-quality verification.

The one-part-reorder neighborhood mirrors the published verification: the
(eta-1)^2 distinct sequences obtained by moving a single part to a new
position must not dominate the candidate. For small models an exhaustive
enumeration provides ground truth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadReference, TooLarge
from .moga import dominates
from .relations import RelationSet
from .sequence import Chromosome, FitnessPair, evaluate
from .voxel import OPPOSITE_LABEL, TRANSLATION_LABELS


@dataclass
class NeighborhoodReport:
    base: Chromosome
    base_fitness: FitnessPair
    neighbors: list[tuple[Chromosome, FitnessPair]]
    dominated_by_neighbor: bool
    feasible_fraction: float

    @property
    def neighbor_count(self) -> int:
        return len(self.neighbors)


def reorder_neighborhood(c: Chromosome) -> list[Chromosome]:
    """All (eta-1)^2 distinct one-part reorders of a chromosome.

    A reorder removes the gene at position p and reinserts it so it lands at
    final position t; directions travel with their genes and none is changed.
    Moving p one slot right duplicates moving p+1 one slot left, so those
    pairs are enumerated once.
    """
    eta = c.eta
    genes = list(zip(c.order, c.directions))
    out: list[Chromosome] = []
    for p in range(eta):
        for t in range(eta):
            if t == p:
                continue
            if t == p + 1:
                continue  # duplicate of moving p+1 one slot left
            rest = genes[:p] + genes[p + 1:]
            merged = rest[:t] + [genes[p]] + rest[t:]
            out.append(Chromosome(tuple(g for g, _ in merged), tuple(d for _, d in merged)))
    return out


def pareto_check(base: Chromosome, rel: RelationSet) -> NeighborhoodReport:
    """Evaluate the reorder neighborhood and look for a dominating neighbor."""
    base_fit = evaluate(base, rel)
    neighbors = [(n, evaluate(n, rel)) for n in reorder_neighborhood(base)]
    dominated = any(dominates(fit, base_fit) for _, fit in neighbors)
    feasible = sum(1 for _, fit in neighbors if fit.feasible)
    frac = feasible / len(neighbors) if neighbors else 0.0
    return NeighborhoodReport(base, base_fit, neighbors, dominated, frac)


# ---------------------------------------------------------------------------
# Exhaustive ground truth
# ---------------------------------------------------------------------------


def _merge_front(
    front: list[tuple[FitnessPair, Chromosome]], fit: FitnessPair, c: Chromosome
) -> None:
    for kept, _ in front:
        if dominates(kept, fit) or kept.vector() == fit.vector():
            return
    front[:] = [(f, ch) for f, ch in front if not dominates(fit, f)]
    front.append((fit, c))


def exhaustive_front(
    rel: RelationSet,
    max_eta: int = 7,
    budget: int = 10 ** 8,
    prune: bool = True,
    restrict_directions: bool = False,
) -> list[tuple[FitnessPair, Chromosome]]:
    """Non-dominated set of all feasible sequences, by direct enumeration.

    The pruned search extends prefixes only with collision-free placements
    (a prefix violation can never be repaired by later placements). Raises
    TooLarge when eta exceeds ``max_eta`` or the node budget runs out.
    """
    eta = rel.eta
    if eta > max_eta:
        raise TooLarge(f"eta={eta} exceeds the exhaustive bound {max_eta}")
    if not prune:
        return _exhaustive_bruteforce(rel, budget)

    m = rel.m_stack()
    opp = rel.opposite_index()
    # freemask[p][d]: bit q set iff part p+1 can approach along d with q+1 placed
    freemask = np.zeros((eta, 6), dtype=np.int64)
    for p in range(eta):
        for d in range(6):
            mask = 0
            for q in range(eta):
                if m[opp[d], p, q]:
                    mask |= 1 << q
            freemask[p, d] = mask
    dir_choices: dict[int, list[int]] = {}
    for p in range(eta):
        if restrict_directions:
            dir_choices[p] = [d for d in range(6) if freemask[p, d] != 0]
        else:
            dir_choices[p] = list(range(6))

    C = rel.C
    I = rel.I
    front: list[tuple[FitnessPair, Chromosome]] = []
    visited = 0

    order: list[int] = []
    dirs: list[int] = []
    acc = np.zeros(eta, dtype=np.int64)  # pending step-CSTD per unplaced part

    def dfs(placed_mask: int, depth: int, last_dir: int, r: int, alpha: int, beta: int, h: int) -> None:
        nonlocal visited
        if depth == eta:
            f1 = 2.0 * eta + alpha - beta - r
            f2 = 12.0 * (eta - 1) - h
            chrom = Chromosome(
                tuple(p + 1 for p in order),
                tuple(TRANSLATION_LABELS[d] for d in dirs),
            )
            _merge_front(front, FitnessPair(f1, f2, True), chrom)
            return
        for p in range(eta):
            if placed_mask & (1 << p):
                continue
            new_h = max(h, int(acc[p]))
            a2 = alpha
            b2 = beta
            for k in range(eta):
                if I[p, k]:
                    if placed_mask & (1 << k):
                        a2 += 1
                    else:
                        b2 += 1
            legal = [d for d in dir_choices[p] if not placed_mask & ~freemask[p, d]]
            if not legal:
                continue
            order.append(p)
            acc[:] += C[p]
            for d in legal:
                visited += 1
                if visited > budget:
                    raise TooLarge(f"exhaustive enumeration exceeded budget {budget}")
                r2 = r + (1 if depth > 0 and d != last_dir else 0)
                dirs.append(d)
                dfs(placed_mask | (1 << p), depth + 1, d, r2, a2, b2, new_h)
                dirs.pop()
            acc[:] -= C[p]
            order.pop()

    dfs(0, 0, -1, 0, 0, 0, 0)
    front.sort(key=lambda t: (-t[0].fitness1, -t[0].fitness2))
    return front


def _exhaustive_bruteforce(rel: RelationSet, budget: int) -> list[tuple[FitnessPair, Chromosome]]:
    """Unpruned reference enumeration (small eta only)."""
    eta = rel.eta
    front: list[tuple[FitnessPair, Chromosome]] = []
    visited = 0
    for perm in itertools.permutations(range(1, eta + 1)):
        for dirs in itertools.product(TRANSLATION_LABELS, repeat=eta):
            visited += 1
            if visited > budget:
                raise TooLarge(f"exhaustive enumeration exceeded budget {budget}")
            c = Chromosome(perm, dirs)
            fit = evaluate(c, rel)
            if fit.feasible:
                _merge_front(front, fit, c)
    front.sort(key=lambda t: (-t[0].fitness1, -t[0].fitness2))
    return front


# ---------------------------------------------------------------------------
# Hypervolume
# ---------------------------------------------------------------------------


def hypervolume(front: list[FitnessPair] | list[tuple[float, float]], reference) -> float:
    """2-D dominated hypervolume of a maximized front above ``reference``."""
    ref1, ref2 = (reference.fitness1, reference.fitness2) if isinstance(reference, FitnessPair) else reference
    pts = []
    for f in front:
        v = f.vector() if isinstance(f, FitnessPair) else (float(f[0]), float(f[1]))
        if v[0] < ref1 or v[1] < ref2 or v == (ref1, ref2):
            raise BadReference(f"front point {v} does not dominate the reference {(ref1, ref2)}")
        pts.append(v)
    if not pts:
        return 0.0
    # keep the non-dominated staircase
    pts.sort(key=lambda v: (-v[0], -v[1]))
    stair = []
    best_f2 = -np.inf
    for v in pts:
        if v[1] > best_f2:
            stair.append(v)
            best_f2 = v[1]
    stair.reverse()  # ascending f1, descending f2
    area = 0.0
    prev_f1 = ref1
    for f1, f2 in stair:
        area += (f1 - prev_f1) * (f2 - ref2)
        prev_f1 = f1
    return area

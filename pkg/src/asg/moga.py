"""NSGA-II over assembly chromosomes.

Both objectives are maximized. Dominance is constrained: a feasible solution
always dominates an infeasible one, otherwise the usual two-objective rule
applies. Survivor selection is elitist (mu+lambda) with exact-duplicate
deduplication and a best-sum preservation guard so the best total fitness
never regresses within a run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid
from .relations import RelationSet
from .sequence import Chromosome, FitnessPair, evaluate
from .voxel import OPPOSITE_LABEL, TRANSLATION_LABELS

log = logging.getLogger(__name__)


@dataclass
class GAConfig:
    """Run parameters; the defaults are the experiment values."""

    population: int | None = None  # None: one chromosome per part
    crossover_rate: float = 0.2
    mutation_rate: float = 0.1
    cut_and_paste_rate: float = 0.35
    break_and_join_rate: float = 0.35
    generations: int = 100
    iterations: int = 10
    seed: int = 0

    def validate(self) -> None:
        rates = {
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "cut_and_paste_rate": self.cut_and_paste_rate,
            "break_and_join_rate": self.break_and_join_rate,
        }
        for name, r in rates.items():
            if not (0.0 <= r <= 1.0):
                raise ConfigInvalid(f"{name} must be in [0, 1], got {r}")
        if self.population is not None and self.population < 2:
            raise ConfigInvalid("population must be at least 2")
        if self.generations < 0 or self.iterations < 1:
            raise ConfigInvalid("generations must be >= 0 and iterations >= 1")

    def resolved_population(self, eta: int) -> int:
        return self.population if self.population is not None else max(2, eta)


@dataclass
class Member:
    chromosome: Chromosome
    fitness: FitnessPair
    front_rank: int = 0
    crowding: float = 0.0


@dataclass
class RankedPopulation:
    members: list[Member]

    def front(self, rank: int = 0) -> list[Member]:
        return [m for m in self.members if m.front_rank == rank]


@dataclass
class ConvergenceRow:
    generation: int
    mean_fitness1: float
    mean_fitness2: float
    feasible_count: int
    best_sum: float


@dataclass
class EvolveResult:
    ranked: RankedPopulation
    best: Member
    histories: list[list[ConvergenceRow]]
    eta: int
    population_size: int


# ---------------------------------------------------------------------------
# Dominance, sorting, crowding
# ---------------------------------------------------------------------------


def dominates(a: FitnessPair, b: FitnessPair) -> bool:
    """Constrained two-objective maximization dominance."""
    if a.feasible != b.feasible:
        return a.feasible
    if a.fitness1 < b.fitness1 or a.fitness2 < b.fitness2:
        return False
    return a.fitness1 > b.fitness1 or a.fitness2 > b.fitness2


def nondominated_sort(fitnesses: list[FitnessPair]) -> list[int]:
    """Fast non-dominated sorting; returns the front rank of each member."""
    n = len(fitnesses)
    dominated_by_me: list[list[int]] = [[] for _ in range(n)]
    dominators = [0] * n
    ranks = [0] * n
    front: list[int] = []
    for p in range(n):
        for q in range(p + 1, n):
            if dominates(fitnesses[p], fitnesses[q]):
                dominated_by_me[p].append(q)
                dominators[q] += 1
            elif dominates(fitnesses[q], fitnesses[p]):
                dominated_by_me[q].append(p)
                dominators[p] += 1
    for p in range(n):
        if dominators[p] == 0:
            ranks[p] = 0
            front.append(p)
    rank = 0
    while front:
        nxt = []
        for p in front:
            for q in dominated_by_me[p]:
                dominators[q] -= 1
                if dominators[q] == 0:
                    ranks[q] = rank + 1
                    nxt.append(q)
        rank += 1
        front = nxt
    return ranks


def crowding_distance(front: list[FitnessPair]) -> list[float]:
    """Neighbor-gap sums per objective; boundary members get infinity."""
    n = len(front)
    if n == 0:
        return []
    if n <= 2:
        return [float("inf")] * n
    dist = [0.0] * n
    for key in (lambda f: f.fitness1, lambda f: f.fitness2):
        idx = sorted(range(n), key=lambda i: key(front[i]))
        lo, hi = key(front[idx[0]]), key(front[idx[-1]])
        dist[idx[0]] = dist[idx[-1]] = float("inf")
        span = hi - lo
        if span <= 0:
            continue
        for j in range(1, n - 1):
            gap = key(front[idx[j + 1]]) - key(front[idx[j - 1]])
            dist[idx[j]] += gap / span
    return dist


def assign_ranks(members: list[Member]) -> None:
    ranks = nondominated_sort([m.fitness for m in members])
    for m, r in zip(members, ranks):
        m.front_rank = r
    by_front: dict[int, list[int]] = {}
    for i, r in enumerate(ranks):
        by_front.setdefault(r, []).append(i)
    for idxs in by_front.values():
        dists = crowding_distance([members[i].fitness for i in idxs])
        for i, d in zip(idxs, dists):
            members[i].crowding = d


# ---------------------------------------------------------------------------
# Initialization: randomized greedy disassembly
# ---------------------------------------------------------------------------


def initialize_population(rel: RelationSet, size: int, rng: np.random.Generator) -> list[Chromosome]:
    """Build chromosomes by repeatedly removing a retreat-free part.

    The removal list reversed is the assembly order; a part removed along e
    was assembled along opposite(e). When no part can retreat the builder
    falls back to a uniform random chromosome (which may be infeasible).
    """
    return [_greedy_disassembly(rel, rng) for _ in range(size)]


def _greedy_disassembly(rel: RelationSet, rng: np.random.Generator) -> Chromosome:
    eta = rel.eta
    m = rel.m_stack()
    remaining = list(range(1, eta + 1))
    removal: list[tuple[int, str]] = []
    prev_retreat: str | None = None
    while remaining:
        options: list[tuple[int, list[str]]] = []
        for pid in remaining:
            others = [q - 1 for q in remaining if q != pid]
            dirs = [
                lab
                for j, lab in enumerate(TRANSLATION_LABELS)
                if not others or m[j, pid - 1, others].all()
            ]
            if dirs:
                options.append((pid, dirs))
        if not options:
            log.info("greedy disassembly stalled with %d parts left; random fallback", len(remaining))
            return _random_chromosome(eta, rng)
        pid, dirs = options[int(rng.integers(len(options)))]
        # keep the previous removal direction when the part allows it: fewer
        # direction changes, which is exactly what the r(s) term rewards
        if prev_retreat in dirs:
            retreat = prev_retreat
        else:
            retreat = dirs[int(rng.integers(len(dirs)))]
        removal.append((pid, OPPOSITE_LABEL[retreat]))
        remaining.remove(pid)
        prev_retreat = retreat
    removal.reverse()
    return Chromosome(tuple(p for p, _ in removal), tuple(d for _, d in removal))


def _random_chromosome(eta: int, rng: np.random.Generator) -> Chromosome:
    order = rng.permutation(eta) + 1
    dirs = [TRANSLATION_LABELS[int(rng.integers(6))] for _ in range(eta)]
    return Chromosome(tuple(int(p) for p in order), tuple(dirs))


# ---------------------------------------------------------------------------
# Genetic operators
# ---------------------------------------------------------------------------


def order_crossover(p1: Chromosome, p2: Chromosome, rng: np.random.Generator) -> Chromosome:
    """OX: keep a slice of p1, fill the rest in p2 order; directions travel."""
    eta = p1.eta
    i = int(rng.integers(eta))
    j = int(rng.integers(eta))
    i, j = min(i, j), max(i, j) + 1
    kept = set(p1.order[i:j])
    fill = [(pid, d) for pid, d in zip(p2.order, p2.directions) if pid not in kept]
    order: list[int] = []
    dirs: list[str] = []
    it = iter(fill)
    for pos in range(eta):
        if i <= pos < j:
            order.append(p1.order[pos])
            dirs.append(p1.directions[pos])
        else:
            pid, d = next(it)
            order.append(pid)
            dirs.append(d)
    return Chromosome(tuple(order), tuple(dirs))


def swap_mutation(c: Chromosome, rng: np.random.Generator, rel: RelationSet | None = None) -> Chromosome:
    """Swap two genes (directions travel), then re-randomize one direction.

    With a relation set available the new direction is drawn from the
    approach-feasible directions at that position; otherwise from all six.
    """
    eta = c.eta
    a = int(rng.integers(eta))
    b = int(rng.integers(eta))
    order = list(c.order)
    dirs = list(c.directions)
    order[a], order[b] = order[b], order[a]
    dirs[a], dirs[b] = dirs[b], dirs[a]
    r = int(rng.integers(eta))
    choices = list(TRANSLATION_LABELS)
    if rel is not None:
        m = rel.m_stack()
        opp = rel.opposite_index()
        earlier = [p - 1 for p in order[:r]]
        legal = [
            lab
            for j, lab in enumerate(TRANSLATION_LABELS)
            if not earlier or m[opp[j], order[r] - 1, earlier].all()
        ]
        if legal:
            choices = legal
    dirs[r] = choices[int(rng.integers(len(choices)))]
    return Chromosome(tuple(order), tuple(dirs))


def cut_and_paste(c: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Move a contiguous block to a new position; directions travel."""
    eta = c.eta
    start = int(rng.integers(eta))
    length = int(rng.integers(1, eta + 1))
    length = min(length, eta - start)
    genes = list(zip(c.order, c.directions))
    block = genes[start:start + length]
    rest = genes[:start] + genes[start + length:]
    dest = int(rng.integers(len(rest) + 1))
    merged = rest[:dest] + block + rest[dest:]
    return Chromosome(tuple(p for p, _ in merged), tuple(d for _, d in merged))


def break_and_join(c: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Split at a random point and swap the two segments."""
    eta = c.eta
    if eta < 2:
        return c
    s = int(rng.integers(1, eta))
    genes = list(zip(c.order, c.directions))
    merged = genes[s:] + genes[:s]
    return Chromosome(tuple(p for p, _ in merged), tuple(d for _, d in merged))


def _tournament(members: list[Member], rng: np.random.Generator) -> Member:
    a = int(rng.integers(len(members)))
    b = int(rng.integers(len(members)))
    ka = (members[a].front_rank, -members[a].crowding, a)
    kb = (members[b].front_rank, -members[b].crowding, b)
    return members[a] if ka <= kb else members[b]


def genetic_operators(
    parents: list[Member],
    count: int,
    config: GAConfig,
    rng: np.random.Generator,
    rel: RelationSet | None = None,
) -> list[Chromosome]:
    """Produce offspring: tournament parent, then the four operators in order
    (crossover, mutation, cut-and-paste, break-and-join), each applied
    independently with its configured rate.
    """
    offspring = []
    for _ in range(count):
        child = _tournament(parents, rng).chromosome
        if rng.random() < config.crossover_rate:
            other = _tournament(parents, rng).chromosome
            child = order_crossover(child, other, rng)
        if rng.random() < config.mutation_rate:
            child = swap_mutation(child, rng, rel)
        if rng.random() < config.cut_and_paste_rate:
            child = cut_and_paste(child, rng)
        if rng.random() < config.break_and_join_rate:
            child = break_and_join(child, rng)
        offspring.append(child)
    return offspring


# ---------------------------------------------------------------------------
# Survivor selection and the outer loop
# ---------------------------------------------------------------------------


def _best_key(m: Member, index: int) -> tuple:
    # feasible first, then highest sum, then highest fitness2, then earliest
    return (not m.fitness.feasible, -m.fitness.total, -m.fitness.fitness2, index)


def best_member(members: list[Member]) -> Member:
    i = min(range(len(members)), key=lambda i: _best_key(members[i], i))
    return members[i]


def _select_survivors(pool: list[Member], size: int, incumbent: Member | None) -> list[Member]:
    seen: dict[tuple, int] = {}
    unique: list[Member] = []
    duplicates: list[Member] = []
    for m in pool:
        key = (m.chromosome.order, m.chromosome.directions)
        if key in seen:
            duplicates.append(m)
        else:
            seen[key] = len(unique)
            unique.append(m)
    assign_ranks(unique)
    ordered = sorted(range(len(unique)), key=lambda i: (unique[i].front_rank, -unique[i].crowding, i))
    survivors = [unique[i] for i in ordered[:size]]
    while len(survivors) < size and duplicates:
        survivors.append(duplicates.pop(0))
    if incumbent is not None:
        best_now = max((m.fitness.total for m in survivors if m.fitness.feasible), default=-np.inf)
        inc_ok = incumbent.fitness.feasible and incumbent.fitness.total > best_now
        if inc_ok:
            survivors[-1] = Member(incumbent.chromosome, incumbent.fitness)
    assign_ranks(survivors)
    return survivors


def _record(members: list[Member], generation: int) -> ConvergenceRow:
    f1 = float(np.mean([m.fitness.fitness1 for m in members]))
    f2 = float(np.mean([m.fitness.fitness2 for m in members]))
    feas = sum(1 for m in members if m.fitness.feasible)
    best = best_member(members)
    return ConvergenceRow(generation, f1, f2, feas, best.fitness.total)


def evolve(rel: RelationSet, config: GAConfig) -> EvolveResult:
    """Independent seeded runs pooled into one re-ranked population.

    Each run initializes its own population, evolves for the configured
    number of generation updates, and logs a convergence row per generation
    (including generation 0). The per-run seed streams are spawned from the
    master seed, one child per run index.
    """
    config.validate()
    size = config.resolved_population(rel.eta)
    histories: list[list[ConvergenceRow]] = []
    pool: list[Member] = []
    for run in range(config.iterations):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(run,)))
        chroms = initialize_population(rel, size, rng)
        members = [Member(c, evaluate(c, rel)) for c in chroms]
        assign_ranks(members)
        rows = [_record(members, 0)]
        incumbent = best_member(members)
        for gen in range(1, config.generations + 1):
            children = genetic_operators(members, size, config, rng, rel)
            child_members = [Member(c, evaluate(c, rel)) for c in children]
            members = _select_survivors(members + child_members, size, incumbent)
            incumbent = best_member(members)
            rows.append(_record(members, gen))
        histories.append(rows)
        pool.extend(Member(m.chromosome, m.fitness) for m in members)
    assign_ranks(pool)
    best = best_member(pool)
    return EvolveResult(RankedPopulation(pool), best, histories, rel.eta, size)

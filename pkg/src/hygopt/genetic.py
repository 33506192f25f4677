"""Population evolution: tournament selection, crossover, mutation, elitism.

`next_generation` is genome-agnostic: it draws operations and parents and
delegates the actual crossover/mutation to a small ops adapter, so the same
loop drives both bit-string and instruction-matrix genomes.  Duplicate
regeneration and the soft-constraint check apply to crossover and mutation
products; elitism and replication copies are verbatim by design.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .individual import Individual, Population
from .space import chromosome_key


@dataclass
class GaConfig:
    """Evolution parameters shared by the bit-string and program modes."""

    n_elite: int = 1
    tournament_size: int = 7
    p_select: float = 1.0
    p_crossover: float = 0.55
    p_mutation: float = 0.45
    p_replication: float = 0.0
    crossover_points: int = 1
    crossover_mix: bool = True
    mutation_rate: float = 0.0          # per-bit; 0 still flips one bit
    # A small retry budget avoids most wasted duplicate evaluations; large
    # budgets turn the generator into an exhaustive tabu search around the
    # incumbent, which overstates baseline GA convergence on small grids.
    max_regeneration_attempts: int = 2
    constraint: Callable | None = None  # genome -> bool

    def __post_init__(self):
        total = self.p_crossover + self.p_mutation + self.p_replication
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"operation probabilities must sum to 1, got {total}")
        if not 0.0 <= self.p_select <= 1.0:
            raise ValueError("p_select must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.n_elite < 0:
            raise ValueError("n_elite must be >= 0")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "n_elite", "tournament_size", "p_select", "p_crossover",
            "p_mutation", "p_replication", "crossover_points",
            "crossover_mix", "mutation_rate", "max_regeneration_attempts")}
        return d


def tournament_select(population: Population, n_t: int, p_s: float,
                      rng: np.random.Generator) -> int:
    """Index of the selected parent in a cost-sorted population.

    Draws n_t distinct contestants, then walks them best to worst accepting
    each with probability p_s; if nobody is accepted the tournament's worst
    contestant wins.
    """
    size = len(population)
    if n_t > size:
        raise ValueError(f"tournament size {n_t} exceeds population size {size}")
    contestants = np.sort(rng.choice(size, size=n_t, replace=False))
    for idx in contestants[:-1]:
        if rng.random() < p_s:
            return int(idx)
    return int(contestants[-1])


def crossover(a: np.ndarray, b: np.ndarray, n_points: int, mix: bool,
              rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Exchange chromosome segments between two equal-length parents.

    Cuts the parents at `n_points` interior positions.  With mix=False the
    segments alternate sources; with mix=True each segment pair is swapped
    independently with probability 1/2.  The children are complementary:
    child_a XOR child_b == a XOR b.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.size != b.size:
        raise ValueError("parents must have equal length")
    length = a.size
    if not 1 <= n_points < length:
        raise ValueError(f"need 1 <= crossover points < {length}")
    cuts = np.sort(rng.choice(np.arange(1, length), size=n_points, replace=False))
    bounds = np.concatenate(([0], cuts, [length]))
    child_a = a.copy()
    child_b = b.copy()
    for seg, (s, e) in enumerate(zip(bounds[:-1], bounds[1:])):
        swap = (rng.random() < 0.5) if mix else (seg % 2 == 1)
        if swap:
            child_a[s:e] = b[s:e]
            child_b[s:e] = a[s:e]
    return child_a, child_b


def mutate(parent: np.ndarray, rate: float,
           rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability `rate`.

    If no bit flips, one uniformly random bit is forced, so the child always
    differs from the parent.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    parent = np.asarray(parent, dtype=np.uint8)
    flips = rng.random(parent.size) < rate
    if not flips.any():
        flips[rng.integers(parent.size)] = True
    child = parent.copy()
    child[flips] ^= 1
    return child


class BitstringOps:
    """Genome adapter for binary chromosomes."""

    def __init__(self, config: GaConfig):
        self.config = config

    def crossover(self, a, b, rng):
        return crossover(a, b, self.config.crossover_points,
                         self.config.crossover_mix, rng)

    def mutate(self, a, rng):
        return mutate(a, self.config.mutation_rate, rng)

    @staticmethod
    def key(genome) -> bytes:
        return chromosome_key(genome)


def next_generation(population: Population, config: GaConfig, ops,
                    rng: np.random.Generator, n_offspring: int,
                    history: set[bytes] | None = None,
                    generation: int = 0) -> list[Individual]:
    """Produce exactly n_offspring individuals for the next generation.

    Slots 0..n_elite-1 are verbatim copies of the elite.  Remaining slots
    draw an operation with probabilities (p_replication, p_mutation,
    p_crossover) on tournament-selected parents.  Crossover/mutation
    products are regenerated while they duplicate any genome seen so far
    (current offspring plus `history`) or violate the constraint predicate;
    after max_regeneration_attempts the candidate is admitted flagged.
    """
    if not population.members or any(not m.evaluated for m in population.members):
        raise ValueError("population must be non-empty and fully evaluated")
    history = history if history is not None else set()
    cfg = config
    offspring: list[Individual] = []
    seen: set[bytes] = set()

    def admit(ind: Individual):
        offspring.append(ind)
        seen.add(ind.key())

    n_elite = min(cfg.n_elite, n_offspring, len(population))
    for i in range(n_elite):
        elite = population[i].copy_as("elitism")
        elite.generation = generation
        admit(elite)

    def valid(genome) -> bool:
        k = ops.key(genome)
        if k in seen or k in history:
            return False
        if cfg.constraint is not None and not cfg.constraint(genome):
            return False
        return True

    def pick_parent() -> Individual:
        return population[tournament_select(population, cfg.tournament_size,
                                            cfg.p_select, rng)]

    pending: list[Individual] = []   # second crossover children awaiting a slot
    while len(offspring) < n_offspring:
        if pending:
            admit(pending.pop(0))
            continue
        candidate = None
        extra = None
        flagged = False
        for _ in range(cfg.max_regeneration_attempts + 1):
            u = rng.random()
            if u < cfg.p_replication:
                parent = pick_parent()
                rep = parent.copy_as("replication")
                rep.generation = generation
                admit(rep)
                candidate = None
                break
            if u < cfg.p_replication + cfg.p_mutation:
                genome = ops.mutate(pick_parent().genome, rng)
                candidate = Individual(genome=genome, origin="mutation",
                                       generation=generation)
                extra = None
            else:
                pa = pick_parent()
                pb = pick_parent()
                ga, gb = ops.crossover(pa.genome, pb.genome, rng)
                candidate = Individual(genome=ga, origin="crossover",
                                       generation=generation)
                extra = Individual(genome=gb, origin="crossover",
                                   generation=generation)
            if valid(candidate.genome):
                break
            if extra is not None and valid(extra.genome):
                candidate = extra
                extra = None
                break
        else:
            flagged = True   # cap exhausted: admit as-is
        if candidate is None:
            continue
        candidate.flagged = flagged
        admit(candidate)
        if extra is not None and len(offspring) < n_offspring \
                and valid(extra.genome):
            admit(extra)
    return offspring[:n_offspring]

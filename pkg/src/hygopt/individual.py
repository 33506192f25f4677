"""Individuals and cost-sorted populations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .space import chromosome_key

# provenance tags for every way an individual can be created
ORIGINS = (
    "random", "lhs", "elitism", "replication", "crossover", "mutation",
    "simplex-reflection", "simplex-expansion", "simplex-contraction",
    "simplex-shrink", "simplex-corrective", "seeded",
)


@dataclass
class Individual:
    """One candidate solution: genome, decoded phenotype and cost."""

    genome: object                      # bit array (GA) or LgpProgram
    phenotype: np.ndarray | None = None
    cost: float | None = None
    origin: str = "random"
    flagged: bool = False               # admitted after regeneration cap
    generation: int = 0
    eval_index: int = -1

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")

    @property
    def evaluated(self) -> bool:
        return self.cost is not None

    def set_cost(self, cost: float):
        if not math.isfinite(cost):
            raise ValueError("cost must be finite once evaluated")
        self.cost = float(cost)

    def key(self) -> bytes:
        """Genome identity for duplicate detection."""
        genome = self.genome
        if isinstance(genome, np.ndarray):
            return chromosome_key(genome)
        return genome.key()

    def copy_as(self, origin: str) -> "Individual":
        return Individual(genome=self.genome, phenotype=self.phenotype,
                          cost=self.cost, origin=origin,
                          generation=self.generation)


@dataclass
class Population:
    """A generation of individuals, kept sorted by ascending cost."""

    members: list[Individual] = field(default_factory=list)
    generation: int = 0

    def sort(self):
        if any(not m.evaluated for m in self.members):
            raise ValueError("cannot sort a population with unevaluated members")
        self.members.sort(key=lambda m: m.cost)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def best(self) -> Individual:
        return self.members[0]

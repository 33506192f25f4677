"""Degeneracy-proof downhill simplex exploitation.

The simplex walks through the classical reflection / expansion /
contraction / shrink cycle as a strict propose-evaluate-accept state
machine, with every candidate snapped to the binary grid of the parameter
space.  A guard watches the recent simplex-generated points: when they
collapse onto a lower-dimensional hyperplane (high R-squared of an affine
fit) a corrective point is placed orthogonal to that hyperplane and the
simplex is rebuilt, restoring the lost search direction.

For instruction-matrix genomes the same machinery runs over the weights of
a linear combination of the fittest programs; every weight vector is
materialized as a genuine program so its result re-enters the population.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .individual import Individual
from .lgp import (LgpProgram, compact_registers, remove_introns,
                  OP_ADD, OP_MUL)
from .space import ParameterSpace, chromosome_key, encode


class SimplexProtocolError(RuntimeError):
    """Propose/accept calls out of order."""


@dataclass
class DegeneracyGuardConfig:
    """Hyperplane-collapse detector settings."""

    n_f: int                      # history window size
    r2_threshold: float = 0.99
    corrective_multiplier: float = 4.0
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.r2_threshold <= 1.0:
            raise ValueError("r2_threshold must lie in (0, 1]")


# -- raw simplex geometry (pre-snap), used by the state machine and tests --

def reflect_point(centroid: np.ndarray, worst: np.ndarray) -> np.ndarray:
    return centroid + (centroid - worst)


def expand_point(centroid: np.ndarray, worst: np.ndarray) -> np.ndarray:
    return centroid + 2.0 * (centroid - worst)


def contract_point(centroid: np.ndarray, worst: np.ndarray) -> np.ndarray:
    return centroid + 0.5 * (worst - centroid)


def shrink_point(best: np.ndarray, vertex: np.ndarray) -> np.ndarray:
    return best + 0.5 * (vertex - best)


class SimplexState:
    """Sequential propose -> evaluate -> accept downhill-simplex machine.

    Vertices are (phenotype, cost) pairs kept sorted by ascending cost.
    Exactly one proposal may be outstanding at a time.
    """

    def __init__(self, vertices, space: ParameterSpace,
                 history_size: int | None = None):
        if len(vertices) != space.ndim + 1:
            raise ValueError(f"need {space.ndim + 1} vertices, "
                             f"got {len(vertices)}")
        self.space = space
        self.vertices = [(np.asarray(p, float).copy(), float(c))
                         for p, c in vertices]
        self.vertices.sort(key=lambda v: v[1])
        self.phase = "reflect"
        self.pending = None           # dict(kind, point) while outstanding
        self._centroid = None
        self._worst = None
        self._reflect_result = None
        self._shrink_queue = []
        self._shrink_collected = []
        self.generated = 0
        cap = history_size if history_size is not None else space.ndim + 1
        self.history: deque = deque(maxlen=cap)

    # costs of the sorted simplex
    @property
    def best_cost(self) -> float:
        return self.vertices[0][1]

    def _snap(self, raw: np.ndarray) -> np.ndarray:
        return self.space.snap(raw)

    def propose(self) -> np.ndarray:
        """Next phenotype to evaluate (grid-snapped and clamped)."""
        if self.pending is not None:
            raise SimplexProtocolError("a proposal is already outstanding")
        if self.phase == "reflect":
            self._centroid = np.mean([v[0] for v in self.vertices[:-1]], axis=0)
            self._worst = self.vertices[-1][0]
            raw = reflect_point(self._centroid, self._worst)
            kind = "reflection"
        elif self.phase == "expand":
            raw = expand_point(self._centroid, self._worst)
            kind = "expansion"
        elif self.phase == "contract":
            raw = contract_point(self._centroid, self._worst)
            kind = "contraction"
        elif self.phase == "shrink":
            raw = shrink_point(self.vertices[0][0], self._shrink_queue[0])
            kind = "shrink"
        else:                         # pragma: no cover
            raise SimplexProtocolError(f"unknown phase {self.phase}")
        self.pending = {"kind": kind, "point": self._snap(raw)}
        return self.pending["point"].copy()

    def substitute_pending(self, point: np.ndarray):
        """Replace the outstanding proposal (duplicate-perturbation hook)."""
        if self.pending is None:
            raise SimplexProtocolError("no outstanding proposal")
        self.pending["point"] = np.asarray(point, float).copy()

    @property
    def pending_origin(self) -> str:
        if self.pending is None:
            raise SimplexProtocolError("no outstanding proposal")
        return "simplex-" + self.pending["kind"]

    def accept(self, cost: float):
        """Feed back the evaluated cost of the outstanding proposal."""
        if self.pending is None:
            raise SimplexProtocolError("no outstanding proposal to accept")
        point = self.pending["point"]
        kind = self.pending["kind"]
        cost = float(cost)
        j1 = self.vertices[0][1]
        jn = self.vertices[-2][1]
        jworst = self.vertices[-1][1]
        if kind == "reflection":
            if cost < j1:
                self._reflect_result = (point, cost)
                self.phase = "expand"
            elif cost >= jn:
                self._reflect_result = (point, cost)
                self.phase = "contract"
            else:
                self._replace_worst(point, cost)
        elif kind == "expansion":
            rp, rc = self._reflect_result
            if cost < rc:
                self._replace_worst(point, cost)
            else:
                self._replace_worst(rp, rc)
            self._reflect_result = None
        elif kind == "contraction":
            if cost < jworst:
                self._replace_worst(point, cost)
            else:
                # shrink every non-best vertex toward the best one
                self._shrink_queue = [v[0] for v in self.vertices[1:]]
                self._shrink_collected = []
                self.phase = "shrink"
            self._reflect_result = None
        elif kind == "shrink":
            self._shrink_collected.append((point, cost))
            self._shrink_queue.pop(0)
            if not self._shrink_queue:
                self.vertices = [self.vertices[0]] + self._shrink_collected
                self.vertices.sort(key=lambda v: v[1])
                self._shrink_collected = []
                self.phase = "reflect"
        self.history.append(point.copy())
        self.generated += 1
        self.pending = None

    def _replace_worst(self, point: np.ndarray, cost: float):
        self.vertices[-1] = (point, cost)
        self.vertices.sort(key=lambda v: v[1])
        self.phase = "reflect"

    def to_dict(self) -> dict:
        return {
            "vertices": [(p.tolist(), c) for p, c in self.vertices],
            "phase": self.phase,
            "history": [p.tolist() for p in self.history],
            "history_size": self.history.maxlen,
            "generated": self.generated,
        }

    @classmethod
    def from_dict(cls, d: dict, space: ParameterSpace) -> "SimplexState":
        state = cls([(np.array(p), c) for p, c in d["vertices"]], space,
                    history_size=d["history_size"])
        state.phase = d["phase"]
        state.history.extend(np.array(p) for p in d["history"])
        state.generated = d["generated"]
        return state


def detect_degeneracy(history, config: DegeneracyGuardConfig):
    """Affine-hyperplane fit of the recent simplex points.

    Returns (unit normal, r_squared) when the window is full and the fit
    quality reaches the threshold, else None.  R-squared is one minus the
    fraction of total variance left orthogonal to the best-fit hyperplane.
    """
    if not config.enabled:
        return None
    pts = np.asarray(list(history), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < config.n_f or pts.shape[1] < 2:
        return None
    pts = pts[-config.n_f:]
    centered = pts - pts.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    total = float(np.sum(svals ** 2))
    if total <= 0.0:
        r2 = 1.0
        normal = np.zeros(pts.shape[1])
    else:
        # fewer singular values than dimensions means exact rank deficiency
        resid = float(svals[-1] ** 2) if svals.size >= pts.shape[1] else 0.0
        r2 = 1.0 - resid / total
        normal = vt[-1]
    if r2 >= config.r2_threshold:
        return normal, r2
    return None


def corrective_vertex(best: np.ndarray, normal: np.ndarray,
                      space: ParameterSpace,
                      multiplier: float = 4.0,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Point placed orthogonal to a degenerate hyperplane.

    Offset magnitude is the largest grid step times `multiplier`; the sign
    points toward the domain interior.  A zero normal (fully degenerate
    fit) falls back to a random unit direction.
    """
    best = np.asarray(best, float)
    normal = np.asarray(normal, float)
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        rng = rng if rng is not None else np.random.default_rng()
        normal = rng.standard_normal(space.ndim)
        norm = np.linalg.norm(normal)
    normal = normal / norm
    center = 0.5 * (space.lows + space.highs)
    sign = np.sign(float(np.dot(normal, center - best))) or 1.0
    dist = multiplier * float(np.max(space.steps))
    return space.snap(best + sign * dist * normal)


def _perturb_one_step(point: np.ndarray, space: ParameterSpace,
                      rng: np.random.Generator) -> np.ndarray:
    dim = int(rng.integers(space.ndim))
    direction = 1.0 if rng.random() < 0.5 else -1.0
    moved = point.copy()
    moved[dim] += direction * space.steps[dim]
    snapped = space.snap(moved)
    if np.array_equal(snapped, point):          # clamped at a bound: go inward
        moved[dim] = point[dim] - 2 * direction * space.steps[dim]
        snapped = space.snap(moved)
    return snapped


def _dedupe_proposal(point: np.ndarray, space: ParameterSpace,
                     known_keys, rng, max_tries: int = 32) -> np.ndarray:
    if known_keys is None:
        return point
    for _ in range(max_tries):
        if chromosome_key(encode(point, space)) not in known_keys:
            return point
        point = _perturb_one_step(point, space, rng)
    return point


def seed_vertices(population_members, space: ParameterSpace,
                  rng: np.random.Generator):
    """(phenotype, cost) pairs for the initial simplex: the N+1 fittest
    individuals, with coincident phenotypes perturbed by one grid step."""
    need = space.ndim + 1
    evaluated = [m for m in population_members if m.evaluated
                 and m.phenotype is not None]
    if len(evaluated) < need:
        raise ValueError(f"need at least {need} evaluated members to seed "
                         "a simplex")
    evaluated.sort(key=lambda m: m.cost)
    vertices = []
    taken = set()
    for m in evaluated[:need]:
        point = space.snap(m.phenotype)
        for _ in range(64):
            k = chromosome_key(encode(point, space))
            if k not in taken:
                break
            point = _perturb_one_step(point, space, rng)
        taken.add(chromosome_key(encode(point, space)))
        vertices.append((point, m.cost))
    return vertices


def exploit_parametric(population_members, n_exploit: int, evaluate,
                       space: ParameterSpace,
                       guard: DegeneracyGuardConfig | None = None,
                       rng: np.random.Generator | None = None,
                       known_keys=None) -> list[Individual]:
    """Run propose/evaluate/accept cycles until >= n_exploit individuals.

    `evaluate(phenotype, origin) -> Individual` is supplied by the caller
    (it owns encoding, logging and budget accounting).  Shrink steps may
    overshoot n_exploit; duplicate proposals are perturbed by one grid step
    before evaluation.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if guard is None:
        guard = DegeneracyGuardConfig(n_f=space.ndim + 1, enabled=False)
    vertices = seed_vertices(population_members, space, rng)
    state = SimplexState(vertices, space, history_size=guard.n_f)
    generated: list[Individual] = []
    while len(generated) < n_exploit:
        point = state.propose()
        deduped = _dedupe_proposal(point, space, known_keys, rng)
        if not np.array_equal(deduped, point):
            state.substitute_pending(deduped)
            point = deduped
        ind = evaluate(point, state.pending_origin)
        state.accept(ind.cost)
        generated.append(ind)
        fired = detect_degeneracy(state.history, guard)
        if fired is not None:
            normal, _ = fired
            corr = corrective_vertex(state.vertices[0][0], normal, space,
                                     guard.corrective_multiplier, rng)
            corr = _dedupe_proposal(corr, space, known_keys, rng)
            corr_ind = evaluate(corr, "simplex-corrective")
            generated.append(corr_ind)
            # rebuild the simplex from the N+1 best individuals seen so far
            pool = list(population_members) + generated
            vertices = seed_vertices(pool, space, rng)
            state = SimplexState(vertices, space, history_size=guard.n_f)
    return generated


def combine_programs(programs: list[LgpProgram],
                     weights: np.ndarray) -> LgpProgram:
    """Genuine program computing the weighted sum of the given programs.

    Each source program writes into its own temporary registers; a trailing
    block scales the temporaries by the weights and accumulates them into
    the shared outputs.
    """
    from .lgp import RegisterLayout  # local import to avoid cycle noise
    if not programs:
        raise ValueError("need at least one program to combine")
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(programs):
        raise ValueError("one weight per program required")
    base = programs[0].layout
    k_n = len(programs)
    effective = [remove_introns(p) for p in programs]
    mem_sizes = [p.layout.n_mem for p in effective]
    n_temp = k_n * base.n_out
    layout = RegisterLayout(
        n_out=base.n_out,
        n_mem=sum(mem_sizes) + n_temp,
        n_sensor=base.n_sensor,
        n_time=base.n_time,
        n_const=sum(p.layout.n_const for p in effective) + k_n,
    )
    mem_offsets = np.concatenate(([0], np.cumsum(mem_sizes)))[:-1]
    const_sizes = [p.layout.n_const for p in effective]
    const_offsets = np.concatenate(([0], np.cumsum(const_sizes)))[:-1]
    temp_base = layout.n_out + sum(mem_sizes)   # temp registers live in mem

    instructions = []
    for k, prog in enumerate(effective):
        src = prog.layout

        def remap(idx: int, k=k, src=src) -> int:
            if idx < src.n_out:                          # output -> temp
                return temp_base + k * base.n_out + idx
            if idx < src.n_out + src.n_mem:              # memory block
                return layout.n_out + int(mem_offsets[k]) + (idx - src.n_out)
            if idx < src.const_offset:                   # shared inputs
                return layout.input_offset + (idx - src.input_offset)
            return (layout.const_offset + int(const_offsets[k])
                    + (idx - src.const_offset))

        for a1, a2, op, dest in prog.instructions:
            instructions.append([remap(int(a1)), remap(int(a2)), int(op),
                                 remap(int(dest))])
    weight_base = layout.const_offset + int(sum(const_sizes))
    for j in range(base.n_out):
        for k in range(k_n):
            temp = temp_base + k * base.n_out + j
            instructions.append([temp, weight_base + k, OP_MUL, temp])
            instructions.append([j, temp, OP_ADD, j])

    const_values = np.concatenate(
        [p.const_values for p in effective] + [weights])
    mem_init = np.concatenate(
        [p.mem_init for p in effective] + [np.zeros(n_temp)])
    combined = LgpProgram(np.array(instructions, np.int64), layout,
                          const_values, mem_init)
    # the concatenated register bank keeps every source's registers even
    # when the sources are themselves combination products; compacting
    # stops the bank from compounding across repeated combinations
    return compact_registers(combined)


def exploit_lgp(population_members, n_sub: int, n_exploit: int,
                evaluate_program, rng: np.random.Generator,
                weight_bound: float = 2.0, weight_bits: int = 12,
                guard: DegeneracyGuardConfig | None = None,
                max_subprogram_length: int | None = None) -> list[Individual]:
    """Weighted-combination simplex exploitation for program genomes.

    Runs the parametric simplex over the weight vector of a combination of
    the n_sub fittest programs; the initial simplex is the unit-weight
    basis vectors plus their centroid.  `evaluate_program(program, origin,
    phenotype) -> Individual` is supplied by the caller.

    Combination products from earlier generations can grow far beyond the
    evolved programs, and recombining them compounds that growth without
    bound, so max_subprogram_length keeps oversized members out of the
    combination pool (they still compete in the population itself).
    """
    evaluated = [m for m in population_members if m.evaluated]
    if max_subprogram_length is not None:
        short = [m for m in evaluated
                 if len(m.genome.instructions) <= max_subprogram_length]
        if len(short) >= n_sub:
            evaluated = short
    if len(evaluated) < n_sub:
        raise ValueError(f"need at least {n_sub} evaluated members")
    evaluated.sort(key=lambda m: m.cost)
    top = [m.genome for m in evaluated[:n_sub]]
    wspace = ParameterSpace.uniform(n_sub, -weight_bound, weight_bound,
                                    weight_bits)
    if guard is None:
        guard = DegeneracyGuardConfig(n_f=n_sub + 1, enabled=False)

    generated: list[Individual] = []

    def eval_weights(w: np.ndarray, origin: str) -> Individual:
        program = combine_programs(top, w)
        ind = evaluate_program(program, origin, w.copy())
        generated.append(ind)
        return ind

    # unit-weight basis vectors plus centroid
    seeds = [np.eye(n_sub)[k] for k in range(n_sub)]
    seeds.append(np.full(n_sub, 1.0 / n_sub))
    vertices = []
    for w in seeds:
        w = wspace.snap(w)
        ind = eval_weights(w, "seeded")
        vertices.append((w, ind.cost))
    state = SimplexState(vertices, wspace, history_size=guard.n_f)
    while len(generated) < n_exploit:
        w = state.propose()
        ind = eval_weights(w, state.pending_origin)
        state.accept(ind.cost)
        fired = detect_degeneracy(state.history, guard)
        if fired is not None:
            normal, _ = fired
            corr = corrective_vertex(state.vertices[0][0], normal, wspace,
                                     guard.corrective_multiplier, rng)
            eval_weights(corr, "simplex-corrective")
            pairs = sorted(
                ((g.phenotype, g.cost) for g in generated
                 if g.phenotype is not None and g.phenotype.size == n_sub),
                key=lambda v: v[1])
            vertices = [(np.asarray(p, float), c)
                        for p, c in pairs[:n_sub + 1]]
            state = SimplexState(vertices, wspace, history_size=guard.n_f)
    return generated

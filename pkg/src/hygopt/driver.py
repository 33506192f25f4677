"""Run orchestration: alternating explore/exploit generations, convergence
detection, budget accounting, checkpoint/resume and multi-stage runs.

One generation explores by genetic operations, then (in hybrid mode)
exploits by simplex moves seeded from the fittest individuals; the run
terminates on exact-optimum discovery, stagnation or budget caps.  State
snapshots are taken at generation boundaries, so a resumed run replays the
interrupted generation from the same random stream and reproduces the
uninterrupted result bit for bit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import pickle
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .genetic import BitstringOps, GaConfig, next_generation
from .individual import Individual, Population
from .lgp import LgpConfig, LgpProgram, ProgramOps
from .simplex import (DegeneracyGuardConfig, exploit_lgp, exploit_parametric)
from .space import ParameterSpace, decode, encode, lhs_sample, random_chromosome

CHECKPOINT_MAGIC = b"HYGOPTCK1\n"
PENALTY_COST = 1e30


class BudgetExhausted(Exception):
    """Internal signal: the evaluation cap was reached."""


class CheckpointError(RuntimeError):
    """Unreadable, corrupted or wrong-version checkpoint."""


class EvaluationError(RuntimeError):
    """Evaluator failure; carries a resume token when a checkpoint exists."""

    def __init__(self, message: str, checkpoint_path: str | None = None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


@dataclass
class RunConfig:
    """Everything a run needs besides the evaluator itself."""

    mode: str = "ga"                       # "ga" or "lgp"
    hybrid: bool = True
    space: ParameterSpace | None = None    # ga mode
    lgp: LgpConfig | None = None           # lgp mode
    ga: GaConfig = field(default_factory=GaConfig)
    init_size: int = 70
    init_method: str = "mcs"               # "mcs" or "lhs"
    n_explor: int = 70
    n_exploit: int = 30
    n_sub: int = 10                        # combination size, lgp exploit
    max_generations: int = 50
    max_evaluations: int | None = 5000
    stagnation_window: int | None = None
    stagnation_tol: float = 1e-12
    seed: int = 0
    guard: DegeneracyGuardConfig | None = None
    known_optima: list | None = None       # grid phenotypes ending the run
    checkpoint_path: str | None = None
    checkpoint_every: int = 1              # generations between snapshots
    jobs: int = 1
    evaluator_serial: bool = False         # force serial evaluation
    penalize_flagged: bool = False
    penalty_cost: float = PENALTY_COST
    weight_bound: float = 2.0              # lgp exploitation weight box
    weight_bits: int = 12

    def __post_init__(self):
        if self.mode not in ("ga", "lgp"):
            raise ValueError("mode must be 'ga' or 'lgp'")
        if self.mode == "ga" and self.space is None:
            raise ValueError("ga mode requires a parameter space")
        if self.mode == "lgp" and self.lgp is None:
            raise ValueError("lgp mode requires an LGP config")
        if self.init_method not in ("mcs", "lhs"):
            raise ValueError("init_method must be 'mcs' or 'lhs'")
        if self.stagnation_window is not None and self.stagnation_window < 1:
            raise ValueError("stagnation window must be >= 1")
        if self.hybrid and self.mode == "ga" \
                and self.n_explor < self.space.ndim + 1:
            raise ValueError("hybrid parametric runs need n_explor >= N+1 "
                             "so the simplex can be seeded")
        if self.guard is None and self.mode == "ga":
            self.guard = DegeneracyGuardConfig(n_f=self.space.ndim + 1)

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode, "hybrid": self.hybrid,
            "space": self.space.to_dict() if self.space else None,
            "lgp": self.lgp.to_dict() if self.lgp else None,
            "ga": self.ga.to_dict(),
            "init_size": self.init_size, "init_method": self.init_method,
            "n_explor": self.n_explor, "n_exploit": self.n_exploit,
            "n_sub": self.n_sub,
            "max_generations": self.max_generations,
            "max_evaluations": self.max_evaluations,
            "stagnation_window": self.stagnation_window,
            "stagnation_tol": self.stagnation_tol,
            "seed": self.seed,
            "guard": None if self.guard is None else {
                "n_f": self.guard.n_f,
                "r2_threshold": self.guard.r2_threshold,
                "corrective_multiplier": self.guard.corrective_multiplier,
                "enabled": self.guard.enabled},
            "known_optima": None if self.known_optima is None else
                [np.asarray(p, float).tolist() for p in self.known_optima],
            "checkpoint_path": self.checkpoint_path,
            "checkpoint_every": self.checkpoint_every,
            "jobs": self.jobs, "evaluator_serial": self.evaluator_serial,
            "penalize_flagged": self.penalize_flagged,
            "penalty_cost": self.penalty_cost,
            "weight_bound": self.weight_bound,
            "weight_bits": self.weight_bits,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if d.get("space"):
            d["space"] = ParameterSpace.from_dict(d["space"])
        if d.get("lgp"):
            d["lgp"] = LgpConfig.from_dict(d["lgp"])
        if isinstance(d.get("ga"), dict):
            d["ga"] = GaConfig(**d["ga"])
        if isinstance(d.get("guard"), dict):
            d["guard"] = DegeneracyGuardConfig(**d["guard"])
        if d.get("known_optima") is not None:
            d["known_optima"] = [np.asarray(p, float)
                                 for p in d["known_optima"]]
        return cls(**d)


@dataclass
class StageSpec:
    """One stage of a stepped run: frozen dimensions plus seeding."""

    frozen: dict[int, float] = field(default_factory=dict)
    seeds: list | None = None              # explicit full-space phenotypes
    seed_builder: object = None            # prev_best_phenotype -> seed list
    generations: int | None = None
    max_evaluations: int | None = None
    init_size: int | None = None


@dataclass
class EvalRecord:
    """One row of the evaluation log."""

    eval_index: int
    generation: int
    origin: str
    cost: float
    phenotype: tuple | None = None
    flagged: bool = False
    stage: int = 0

    def to_dict(self) -> dict:
        return {"eval_index": self.eval_index, "generation": self.generation,
                "origin": self.origin, "cost": self.cost,
                "phenotype": None if self.phenotype is None
                else list(self.phenotype),
                "flagged": self.flagged, "stage": self.stage}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        d = dict(d)
        if d["phenotype"] is not None:
            d["phenotype"] = tuple(d["phenotype"])
        return cls(**d)


@dataclass
class RunResult:
    """Outcome of a run: full log plus per-generation best series."""

    records: list[EvalRecord]
    best_costs: list[float]                # best cost after each generation
    best: Individual
    termination: str
    generations: int
    evaluations: int
    wall_time: float = 0.0
    converged: bool = False

    @property
    def best_cost(self) -> float:
        return self.best.cost


def _genome_to_blob(genome):
    if isinstance(genome, LgpProgram):
        return ("lgp", genome.to_dict())
    return ("bits", np.asarray(genome, np.uint8).tolist())


def _genome_from_blob(blob):
    kind, data = blob
    if kind == "lgp":
        return LgpProgram.from_dict(data)
    return np.asarray(data, np.uint8)


def _individual_to_dict(ind: Individual) -> dict:
    return {"genome": _genome_to_blob(ind.genome),
            "phenotype": None if ind.phenotype is None
            else np.asarray(ind.phenotype, float).tolist(),
            "cost": ind.cost, "origin": ind.origin, "flagged": ind.flagged,
            "generation": ind.generation, "eval_index": ind.eval_index}


def _individual_from_dict(d: dict) -> Individual:
    return Individual(genome=_genome_from_blob(d["genome"]),
                      phenotype=None if d["phenotype"] is None
                      else np.asarray(d["phenotype"], float),
                      cost=d["cost"], origin=d["origin"],
                      flagged=d["flagged"], generation=d["generation"],
                      eval_index=d["eval_index"])


def check_convergence(best_costs: list[float], config: RunConfig,
                      best_phenotype=None, generation: int | None = None,
                      evaluations: int | None = None) -> str | None:
    """Termination decision after a completed generation.

    Returns the reason string ("converged", "generation-cap",
    "evaluation-cap", "stagnated") or None to continue.
    """
    if best_phenotype is not None and config.known_optima is not None:
        hit = any(np.array_equal(best_phenotype, np.asarray(opt, float))
                  for opt in config.known_optima)
        if hit:
            return "converged"
    if generation is not None and generation >= config.max_generations:
        return "generation-cap"
    if evaluations is not None and config.max_evaluations is not None \
            and evaluations >= config.max_evaluations:
        return "evaluation-cap"
    window = config.stagnation_window
    if window is not None and len(best_costs) > window:
        old = best_costs[-window - 1]
        new = best_costs[-1]
        if (old - new) / max(abs(old), 1e-300) < config.stagnation_tol:
            return "stagnated"
    return None


def write_checkpoint(path: str, payload: dict) -> bytes:
    blob = checkpoint_blob(payload)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
    return blob


def checkpoint_blob(payload: dict) -> bytes:
    body = pickle.dumps(payload, protocol=4)
    return CHECKPOINT_MAGIC + hashlib.sha256(body).digest() + body


def load_checkpoint_blob(blob: bytes) -> dict:
    if not blob.startswith(CHECKPOINT_MAGIC):
        if blob[:7] == CHECKPOINT_MAGIC[:7]:
            raise CheckpointError("checkpoint version mismatch")
        raise CheckpointError("not a checkpoint blob")
    digest = blob[len(CHECKPOINT_MAGIC):len(CHECKPOINT_MAGIC) + 32]
    body = blob[len(CHECKPOINT_MAGIC) + 32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint is corrupted (checksum mismatch)")
    return pickle.loads(body)


def read_checkpoint(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return load_checkpoint_blob(blob)


# blob-level aliases matching the save/load naming used elsewhere
checkpoint_save = checkpoint_blob
checkpoint_load = load_checkpoint_blob


class Driver:
    """Executes one run; see `run` and `resume` for the public entry points."""

    def __init__(self, config: RunConfig, evaluator, metadata: dict | None = None,
                 stage: int = 0):
        self.config = config
        self.evaluator = evaluator
        self.metadata = metadata or {}
        self.stage = stage
        self.rng = np.random.default_rng(config.seed)
        self.population: Population | None = None
        self.generation = 1                 # next generation to produce
        self.records: list[EvalRecord] = []
        self.history: set[bytes] = set()
        self.eval_count = 0
        self.best_costs: list[float] = []
        self.termination: str | None = None
        self.converged = False
        self._pool = None
        self._initial_phenotypes = None     # stepped-run seeding hook
        self._exploit_buffer: list[Individual] = []
        if config.mode == "ga":
            self.ops = BitstringOps(config.ga)
        else:
            self.ops = ProgramOps(config.lgp)

    # -- evaluation ---------------------------------------------------------

    def _budget_left(self) -> int | None:
        if self.config.max_evaluations is None:
            return None
        return self.config.max_evaluations - self.eval_count

    def _record(self, ind: Individual):
        ind.eval_index = self.eval_count
        self.eval_count += 1
        phen = None if ind.phenotype is None else tuple(
            float(v) for v in ind.phenotype)
        self.records.append(EvalRecord(
            eval_index=ind.eval_index, generation=ind.generation,
            origin=ind.origin, cost=ind.cost, phenotype=phen,
            flagged=ind.flagged, stage=self.stage))

    def _raw_cost(self, ind: Individual) -> float:
        if self.config.mode == "ga":
            if ind.phenotype is None:
                ind.phenotype = decode(ind.genome, self.config.space)
            return self.evaluator(ind.phenotype)
        return self.evaluator(ind.genome)

    def _apply_cost(self, ind: Individual, cost: float):
        if ind.flagged and self.config.penalize_flagged:
            cost = self.config.penalty_cost
        if not np.isfinite(cost):
            cost = self.config.penalty_cost
            ind.flagged = True
        ind.set_cost(cost)
        self.history.add(ind.key())
        self._record(ind)

    def _evaluate_one(self, ind: Individual) -> Individual:
        left = self._budget_left()
        if left is not None and left <= 0:
            raise BudgetExhausted
        try:
            cost = self._raw_cost(ind)
        except BudgetExhausted:
            raise
        except Exception as exc:
            raise self._surface_failure(exc) from exc
        self._apply_cost(ind, cost)
        return ind

    def _evaluate_batch(self, individuals: list[Individual]) -> list[Individual]:
        """Evaluate unevaluated members; truncates at the budget cap."""
        todo = [m for m in individuals if not m.evaluated]
        left = self._budget_left()
        capped = left is not None and len(todo) > left
        if capped:
            todo = todo[:left]
        jobs = 1 if self.config.evaluator_serial else self.config.jobs
        if jobs > 1 and todo:
            if self.config.mode == "ga":
                for m in todo:
                    if m.phenotype is None:
                        m.phenotype = decode(m.genome, self.config.space)
                args = [m.phenotype for m in todo]
            else:
                args = [m.genome for m in todo]
            if self._pool is None:
                self._pool = ProcessPoolExecutor(max_workers=jobs)
            try:
                costs = list(self._pool.map(self.evaluator, args))
            except Exception as exc:
                raise self._surface_failure(exc) from exc
            for m, c in zip(todo, costs):
                self._apply_cost(m, c)
        else:
            for m in todo:
                self._evaluate_one(m)
        done = [m for m in individuals if m.evaluated]
        if capped:
            raise BudgetExhausted
        return done

    def _surface_failure(self, exc: Exception) -> EvaluationError:
        path = None
        if self.config.checkpoint_path:
            path = self.config.checkpoint_path
            write_checkpoint(path, self._snapshot_payload())
        return EvaluationError(
            f"evaluator failed: {exc!r}"
            + (f" (resume from {path})" if path else ""), path)

    # -- run phases ----------------------------------------------------------

    def _initial_individuals(self) -> list[Individual]:
        cfg = self.config
        out: list[Individual] = []
        if self._initial_phenotypes is not None:     # stepped-run seeds
            seen: set[bytes] = set()
            for phen in self._initial_phenotypes:
                genome = encode(phen, cfg.space)
                ind = Individual(genome=genome,
                                 phenotype=decode(genome, cfg.space),
                                 origin="seeded", generation=1)
                seen.add(ind.key())
                out.append(ind)
            # pad with random samples so the population can seed a simplex
            while len(out) < cfg.init_size:
                for _ in range(cfg.ga.max_regeneration_attempts + 1):
                    genome = random_chromosome(cfg.space, self.rng)
                    ind = Individual(genome=genome, origin="random",
                                     generation=1)
                    if ind.key() not in seen:
                        break
                seen.add(ind.key())
                out.append(ind)
            return out
        if cfg.mode == "ga" and cfg.init_method == "lhs":
            for genome in lhs_sample(cfg.space, cfg.init_size, self.rng):
                out.append(Individual(genome=genome, origin="lhs",
                                      generation=1))
            return out
        seen: set[bytes] = set()
        for _ in range(cfg.init_size):
            for _ in range(cfg.ga.max_regeneration_attempts + 1):
                if cfg.mode == "ga":
                    genome = random_chromosome(cfg.space, self.rng)
                else:
                    genome = self.ops.random(self.rng)
                ind = Individual(genome=genome, origin="random", generation=1)
                if ind.key() not in seen:
                    break
            seen.add(ind.key())
            out.append(ind)
        return out

    def _exploit(self):
        cfg = self.config
        gen = self.generation

        if cfg.mode == "ga":
            def evaluate(phenotype, origin):
                genome = encode(phenotype, cfg.space)
                ind = Individual(genome=genome,
                                 phenotype=decode(genome, cfg.space),
                                 origin=origin, generation=gen)
                self._evaluate_one(ind)
                self._exploit_buffer.append(ind)
                return ind

            exploit_parametric(
                self.population.members, cfg.n_exploit, evaluate,
                cfg.space, cfg.guard, self.rng, self.history)
            return

        def evaluate_program(program, origin, weights):
            ind = Individual(genome=program, phenotype=weights,
                             origin=origin, generation=gen)
            self._evaluate_one(ind)
            self._exploit_buffer.append(ind)
            return ind

        exploit_lgp(self.population.members, cfg.n_sub,
                    cfg.n_exploit, evaluate_program, self.rng,
                    cfg.weight_bound, cfg.weight_bits,
                    max_subprogram_length=cfg.lgp.max_instructions)

    def _optimum_hit(self) -> bool:
        if self.config.known_optima is None or self.config.mode != "ga":
            return False
        best = self.population.best.phenotype
        return any(np.array_equal(best, np.asarray(opt, float))
                   for opt in self.config.known_optima)

    def _check_after_generation(self):
        self.best_costs.append(self.population.best.cost)
        phenotype = (self.population.best.phenotype
                     if self.config.mode == "ga" else None)
        reason = check_convergence(self.best_costs, self.config,
                                   best_phenotype=phenotype)
        if reason is not None:
            self.termination = reason
            self.converged = reason == "converged"

    def run(self) -> RunResult:
        start = time.perf_counter()
        try:
            while self.termination is None:
                self._maybe_checkpoint()
                if self.generation == 1:
                    self._run_first_generation()
                elif self.generation > self.config.max_generations:
                    self.termination = "generation-cap"
                    self.generation -= 1    # last completed generation
                    break
                else:
                    self._run_generation()
                if self.termination is not None:
                    break
                self.generation += 1
        except BudgetExhausted:
            self.termination = "evaluation-cap"
            if self.population is not None and self.population.members:
                self.population.sort()
                if len(self.best_costs) < self.generation:
                    self.best_costs.append(self.population.best.cost)
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        wall = time.perf_counter() - start
        result = RunResult(
            records=self.records, best_costs=self.best_costs,
            best=self.population.best, termination=self.termination,
            generations=min(self.generation, self.config.max_generations),
            evaluations=self.eval_count, wall_time=wall,
            converged=self.converged)
        if self.config.checkpoint_path:
            write_checkpoint(self.config.checkpoint_path,
                             self._snapshot_payload(done=True))
        return result

    def _run_first_generation(self):
        inds = self._initial_individuals()
        try:
            self._evaluate_batch(inds)
        except BudgetExhausted:
            self.population = Population([m for m in inds if m.evaluated],
                                         generation=1)
            raise
        self.population = Population(inds, generation=1)
        self.population.sort()
        if self._optimum_hit():
            self.best_costs.append(self.population.best.cost)
            self.termination = "converged"
            self.converged = True
            return
        if self.config.hybrid:
            self._run_exploit_phase()
        self._check_after_generation()

    def _run_generation(self):
        cfg = self.config
        offspring = next_generation(self.population, cfg.ga, self.ops,
                                    self.rng, cfg.n_explor, self.history,
                                    generation=self.generation)
        try:
            self._evaluate_batch(offspring)
        except BudgetExhausted:
            done = [m for m in offspring if m.evaluated]
            if done:
                self.population = Population(done,
                                             generation=self.generation)
            raise
        self.population = Population(offspring, generation=self.generation)
        self.population.sort()
        if self._optimum_hit():
            self.best_costs.append(self.population.best.cost)
            self.termination = "converged"
            self.converged = True
            return
        if cfg.hybrid:
            self._run_exploit_phase()
        self._check_after_generation()

    def _run_exploit_phase(self):
        """Exploit the current population in place.

        A budget hit mid-phase still merges whatever was generated before
        the cap, so the final population reflects every logged evaluation.
        """
        self._exploit_buffer = []
        try:
            self._exploit()
        finally:
            self.population.members.extend(self._exploit_buffer)
            self._exploit_buffer = []
        self.population.sort()

    # -- checkpointing --------------------------------------------------------

    def _snapshot_payload(self, done: bool = False) -> dict:
        state = {
            "rng_state": self.rng.bit_generator.state,
            "generation": self.generation,
            "population": None if self.population is None else {
                "generation": self.population.generation,
                "members": [_individual_to_dict(m)
                            for m in self.population.members]},
            "records": [r.to_dict() for r in self.records],
            "history": sorted(self.history),
            "eval_count": self.eval_count,
            "best_costs": list(self.best_costs),
            "termination": self.termination,
            "converged": self.converged,
            "stage": self.stage,
            "simplex": None,     # exploit state lives within a generation
            "done": done,
        }
        return {"config": self.config.to_dict(),
                "metadata": self.metadata,
                "state": state}

    def _maybe_checkpoint(self):
        cfg = self.config
        if not cfg.checkpoint_path:
            return
        if (self.generation - 1) % max(cfg.checkpoint_every, 1) == 0:
            write_checkpoint(cfg.checkpoint_path, self._snapshot_payload())

    @classmethod
    def from_payload(cls, payload: dict, evaluator) -> "Driver":
        config = RunConfig.from_dict(payload["config"])
        driver = cls(config, evaluator, metadata=payload.get("metadata"))
        st = payload["state"]
        driver.rng.bit_generator.state = st["rng_state"]
        driver.generation = st["generation"]
        if st["population"] is not None:
            pop = Population(
                [_individual_from_dict(d)
                 for d in st["population"]["members"]],
                generation=st["population"]["generation"])
            driver.population = pop
        driver.records = [EvalRecord.from_dict(d) for d in st["records"]]
        driver.history = set(st["history"])
        driver.eval_count = st["eval_count"]
        driver.best_costs = list(st["best_costs"])
        driver.termination = st["termination"]
        driver.converged = st["converged"]
        driver.stage = st["stage"]
        return driver


def run(config: RunConfig, evaluator, metadata: dict | None = None) -> RunResult:
    """Execute a full optimization run."""
    return Driver(config, evaluator, metadata=metadata).run()


def resume(checkpoint_path: str, evaluator) -> RunResult:
    """Continue a checkpointed run to termination."""
    payload = read_checkpoint(checkpoint_path)
    if payload["state"].get("done"):
        driver = Driver.from_payload(payload, evaluator)
        driver.population.sort()
        return RunResult(records=driver.records,
                         best_costs=driver.best_costs,
                         best=driver.population.best,
                         termination="already terminated",
                         generations=min(driver.generation,
                                         driver.config.max_generations),
                         evaluations=driver.eval_count,
                         converged=driver.converged)
    driver = Driver.from_payload(payload, evaluator)
    return driver.run()


def run_stepped(stages: list[StageSpec], config: RunConfig,
                evaluator) -> RunResult:
    """Staged run: each stage optimizes the non-frozen dimensions, seeding
    the next stage with explicit phenotypes plus the previous stage's best."""
    if not stages:
        raise ValueError("need at least one stage")
    if config.mode != "ga":
        raise ValueError("stepped runs are defined for parametric mode")
    full_space = config.space
    records: list[EvalRecord] = []
    eval_count = 0
    best_costs: list[float] = []
    prev_best_full: np.ndarray | None = None
    prev_best_cost: float | None = None
    last_result = None
    seed = config.seed

    for stage_idx, stage in enumerate(stages):
        frozen = dict(stage.frozen)
        for dim, value in frozen.items():
            if not 0 <= dim < full_space.ndim:
                raise ValueError(f"frozen dimension {dim} out of range")
            if not (full_space.lows[dim] <= value <= full_space.highs[dim]):
                raise ValueError(f"frozen value for dim {dim} outside bounds")
        free = [i for i in range(full_space.ndim) if i not in frozen]
        if not free:
            raise ValueError("a stage must leave at least one dimension free")
        sub_space = ParameterSpace(full_space.lows[free],
                                   full_space.highs[free],
                                   full_space.bits[free])

        def assemble(sub_phen, frozen=frozen, free=free):
            full = np.empty(full_space.ndim)
            for dim, value in frozen.items():
                full[dim] = value
            full[free] = sub_phen
            return full

        def stage_eval(sub_phen, assemble=assemble):
            return evaluator(assemble(sub_phen))

        # per-stage budgets are offsets on the shared evaluation counter
        stage_budget = stage.max_evaluations
        if stage_budget is None:
            stage_budget = config.max_evaluations
        stage_cfg = dataclasses.replace(
            config,
            space=sub_space,
            seed=seed + stage_idx,
            known_optima=None,             # optima live in the full space
            checkpoint_path=None,
            max_generations=(stage.generations if stage.generations
                             is not None else config.max_generations),
            max_evaluations=(None if stage_budget is None
                             else eval_count + stage_budget),
            init_size=(stage.init_size if stage.init_size is not None
                       else config.init_size))

        driver = Driver(stage_cfg, stage_eval, stage=stage_idx)
        driver.records = records
        driver.eval_count = eval_count

        seeds_full = []
        if stage.seeds is not None:
            seeds_full.extend(np.asarray(s, float) for s in stage.seeds)
        if stage.seed_builder is not None and prev_best_full is not None:
            seeds_full.extend(np.asarray(s, float)
                              for s in stage.seed_builder(prev_best_full))
        if seeds_full or prev_best_full is not None:
            phenos = []
            for s in seeds_full:
                if not full_space.contains(s):
                    raise ValueError("seed phenotype outside the domain")
                phenos.append(np.asarray(s, float)[free])
            if prev_best_full is not None:
                phenos.append(prev_best_full[free])
            driver._initial_phenotypes = [sub_space.snap(p) for p in phenos]

        result = driver.run()
        eval_count = driver.eval_count
        best_costs.extend(result.best_costs)
        best_sub = result.best
        best_full = assemble(best_sub.phenotype)
        if prev_best_cost is None or best_sub.cost < prev_best_cost:
            prev_best_full = best_full
            prev_best_cost = best_sub.cost
        last_result = result

    best_ind = Individual(genome=encode(prev_best_full, full_space),
                          phenotype=prev_best_full, origin="seeded")
    best_ind.cost = prev_best_cost
    return RunResult(records=records, best_costs=best_costs, best=best_ind,
                     termination=last_result.termination,
                     generations=len(best_costs),
                     evaluations=eval_count,
                     converged=last_result.converged)

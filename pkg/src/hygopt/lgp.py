"""Linear genetic programming: instruction-matrix programs over a register bank.

A program is an (n, 4) integer matrix; each row is (arg1, arg2, op, dest).
Registers are laid out as [outputs | memory | inputs | constants]; outputs
and memory are writable, inputs and constants are read-only.  All operators
are totalized (protected division/log, clamped exp, NaN squashed to zero),
so evaluation always yields finite outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:          # pragma: no cover - numba is a declared dep
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# operator ids; the default set includes the binary arithmetic ops plus
# smooth unaries useful for control-law synthesis
OP_ADD, OP_SUB, OP_MUL, OP_DIV = 0, 1, 2, 3
OP_SIN, OP_COS, OP_TANH, OP_EXP, OP_LOG = 4, 5, 6, 7, 8
DEFAULT_OP_SET = (OP_ADD, OP_SUB, OP_MUL, OP_DIV,
                  OP_SIN, OP_COS, OP_TANH, OP_EXP, OP_LOG)
UNARY_OPS = frozenset({OP_SIN, OP_COS, OP_TANH, OP_EXP, OP_LOG})
OP_SYMBOLS = {OP_ADD: "+", OP_SUB: "-", OP_MUL: "*", OP_DIV: "/",
              OP_SIN: "sin", OP_COS: "cos", OP_TANH: "tanh",
              OP_EXP: "exp", OP_LOG: "log"}


@dataclass(frozen=True)
class RegisterLayout:
    """Register bank shape shared by all programs of a run."""

    n_out: int
    n_mem: int
    n_sensor: int
    n_time: int = 0
    n_const: int = 2

    def __post_init__(self):
        if self.n_out < 1:
            raise ValueError("need at least one output register")
        for name in ("n_mem", "n_sensor", "n_time", "n_const"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def n_in(self) -> int:
        return self.n_sensor + self.n_time

    @property
    def n_writable(self) -> int:
        return self.n_out + self.n_mem

    @property
    def n_registers(self) -> int:
        return self.n_out + self.n_mem + self.n_in + self.n_const

    @property
    def input_offset(self) -> int:
        return self.n_out + self.n_mem

    @property
    def const_offset(self) -> int:
        return self.n_out + self.n_mem + self.n_in

    def register_name(self, idx: int) -> str:
        if idx < self.n_out:
            return f"y{idx}"
        if idx < self.n_out + self.n_mem:
            return f"m{idx - self.n_out}"
        if idx < self.const_offset:
            k = idx - self.input_offset
            return f"s{k}" if k < self.n_sensor else f"h{k - self.n_sensor}"
        return f"c{idx - self.const_offset}"

    def to_dict(self) -> dict:
        return {"n_out": self.n_out, "n_mem": self.n_mem,
                "n_sensor": self.n_sensor, "n_time": self.n_time,
                "n_const": self.n_const}

    @classmethod
    def from_dict(cls, d: dict) -> "RegisterLayout":
        return cls(**d)


def _exec_core(instructions, regs):
    """Run the instruction matrix on a register vector, in place."""
    for k in range(instructions.shape[0]):
        a = regs[instructions[k, 0]]
        b = regs[instructions[k, 1]]
        op = instructions[k, 2]
        if op == 0:
            r = a + b
        elif op == 1:
            r = a - b
        elif op == 2:
            r = a * b
        elif op == 3:
            r = a if -1e-12 < b < 1e-12 else a / b
        elif op == 4:
            r = math.sin(a)
        elif op == 5:
            r = math.cos(a)
        elif op == 6:
            r = math.tanh(a)
        elif op == 7:
            x = 700.0 if a > 700.0 else a
            r = math.exp(x)
            if r > 1e6:
                r = 1e6
        else:
            r = math.log(abs(a) + 1e-12)
        if r != r:
            r = 0.0
        elif r > 1e15:
            r = 1e15
        elif r < -1e15:
            r = -1e15
        elif -2.2250738585072014e-308 < r < 2.2250738585072014e-308:
            # flush subnormal results to zero: denormal register chains
            # make hardware arithmetic orders of magnitude slower
            r = 0.0
        regs[instructions[k, 3]] = r


exec_core_jit = njit(cache=True)(_exec_core) if NUMBA_AVAILABLE else _exec_core


@dataclass
class LgpProgram:
    """Variable-length instruction matrix plus per-individual register data."""

    instructions: np.ndarray            # (n, 4) int64
    layout: RegisterLayout
    const_values: np.ndarray            # (n_const,) float64
    mem_init: np.ndarray                # (n_mem,) float64

    def __post_init__(self):
        self.instructions = np.asarray(self.instructions,
                                       dtype=np.int64).reshape(-1, 4)
        self.const_values = np.asarray(self.const_values, dtype=np.float64)
        self.mem_init = np.asarray(self.mem_init, dtype=np.float64)
        lay = self.layout
        if self.const_values.size != lay.n_const:
            raise ValueError("const_values size does not match layout")
        if self.mem_init.size != lay.n_mem:
            raise ValueError("mem_init size does not match layout")
        if self.instructions.size:
            if self.instructions[:, :2].min() < 0 or \
                    self.instructions[:, :2].max() >= lay.n_registers:
                raise ValueError("argument register out of range")
            dests = self.instructions[:, 3]
            if dests.min() < 0 or dests.max() >= lay.n_writable:
                raise ValueError("destination must be a writable register")

    def __len__(self):
        return self.instructions.shape[0]

    def initial_registers(self) -> np.ndarray:
        """Fresh register vector: zero outputs, stored memory, constants."""
        lay = self.layout
        regs = np.zeros(lay.n_registers, dtype=np.float64)
        regs[lay.n_out:lay.n_out + lay.n_mem] = self.mem_init
        regs[lay.const_offset:] = self.const_values
        return regs

    def key(self) -> bytes:
        """Identity for duplicate detection: effective code plus register data."""
        eff = remove_introns(self)
        return (eff.instructions.tobytes() + self.const_values.tobytes()
                + self.mem_init.tobytes())

    def to_lines(self, effective: bool = True) -> list[str]:
        """Assignment listing, one instruction per line."""
        prog = remove_introns(self) if effective else self
        lay = self.layout
        lines = []
        for a1, a2, op, dest in prog.instructions:
            lhs = lay.register_name(int(dest))
            sa = self._operand(int(a1))
            if op in UNARY_OPS:
                rhs = f"{OP_SYMBOLS[int(op)]}({sa})"
            else:
                rhs = f"({sa} {OP_SYMBOLS[int(op)]} {self._operand(int(a2))})"
            lines.append(f"{lhs} = {rhs}")
        return lines

    def _operand(self, idx: int) -> str:
        lay = self.layout
        if idx >= lay.const_offset:
            return format(self.const_values[idx - lay.const_offset], ".6g")
        return lay.register_name(idx)

    def to_expression(self, max_len: int = 4000) -> str:
        """Inline symbolic expression for each output register.

        Falls back to the assignment listing when substitution blows up.
        """
        lay = self.layout
        prog = remove_introns(self)
        exprs = {}
        for idx in range(lay.n_registers):
            if idx >= lay.const_offset:
                exprs[idx] = format(self.const_values[idx - lay.const_offset], ".6g")
            elif idx < lay.n_out:
                exprs[idx] = "0"
            elif idx < lay.n_out + lay.n_mem:
                exprs[idx] = format(self.mem_init[idx - lay.n_out], ".6g")
            else:
                exprs[idx] = lay.register_name(idx)
        blew_up = False
        for a1, a2, op, dest in prog.instructions:
            sa = exprs[int(a1)]
            if op in UNARY_OPS:
                e = f"{OP_SYMBOLS[int(op)]}({sa})"
            else:
                e = f"({sa} {OP_SYMBOLS[int(op)]} {exprs[int(a2)]})"
            if len(e) > max_len:
                blew_up = True
                break
            exprs[int(dest)] = e
        if blew_up:
            return "; ".join(self.to_lines())
        outs = [f"{lay.register_name(i)} = {exprs[i]}" for i in range(lay.n_out)]
        return "; ".join(outs)

    def to_dict(self) -> dict:
        return {"instructions": self.instructions.tolist(),
                "layout": self.layout.to_dict(),
                "const_values": self.const_values.tolist(),
                "mem_init": self.mem_init.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LgpProgram":
        return cls(np.array(d["instructions"], np.int64).reshape(-1, 4),
                   RegisterLayout.from_dict(d["layout"]),
                   np.array(d["const_values"], float),
                   np.array(d["mem_init"], float))


def eval_program(program: LgpProgram, sensor_values, time_values=()) -> np.ndarray:
    """Execute the program on the given inputs; returns the output registers."""
    lay = program.layout
    sensor_values = np.asarray(sensor_values, dtype=np.float64).ravel()
    time_values = np.asarray(time_values, dtype=np.float64).ravel()
    if sensor_values.size != lay.n_sensor or time_values.size != lay.n_time:
        raise ValueError("input vector sizes do not match the register layout")
    regs = program.initial_registers()
    regs[lay.input_offset:lay.input_offset + lay.n_sensor] = sensor_values
    regs[lay.input_offset + lay.n_sensor:lay.const_offset] = time_values
    exec_core_jit(program.instructions, regs)
    return regs[:lay.n_out].copy()


def remove_introns(program: LgpProgram) -> LgpProgram:
    """Drop instructions whose results cannot reach any output register.

    Backward liveness sweep; the returned program is semantically identical
    on all inputs, and the operation is idempotent.
    """
    lay = program.layout
    live = set(range(lay.n_out))
    keep = []
    for k in range(len(program) - 1, -1, -1):
        a1, a2, op, dest = program.instructions[k]
        if int(dest) not in live:
            continue
        keep.append(k)
        live.discard(int(dest))
        live.add(int(a1))
        if int(op) not in UNARY_OPS:
            live.add(int(a2))
    keep.reverse()
    return LgpProgram(program.instructions[keep], lay,
                      program.const_values, program.mem_init)


def compact_registers(program: LgpProgram) -> LgpProgram:
    """Drop memory and constant registers no instruction references.

    Combination products sum the register banks of their sources, so
    repeatedly combining them inflates the bank without bound; a huge bank
    makes every register-vector copy (one per control invocation in plant
    simulations) dominate the run time.  Outputs and inputs are preserved
    verbatim, so the returned program is semantically identical.
    """
    lay = program.layout
    used = set()
    for a1, a2, op, dest in program.instructions:
        used.add(int(a1))
        if int(op) not in UNARY_OPS:
            used.add(int(a2))
        used.add(int(dest))
    mem_kept = sorted(i - lay.n_out for i in used
                      if lay.n_out <= i < lay.input_offset)
    const_kept = sorted(i - lay.const_offset for i in used
                        if i >= lay.const_offset)
    new_lay = RegisterLayout(n_out=lay.n_out, n_mem=len(mem_kept),
                             n_sensor=lay.n_sensor, n_time=lay.n_time,
                             n_const=len(const_kept))
    remap = np.arange(lay.n_registers, dtype=np.int64)
    for j, m in enumerate(mem_kept):
        remap[lay.n_out + m] = new_lay.n_out + j
    for j in range(lay.n_in):
        remap[lay.input_offset + j] = new_lay.input_offset + j
    for j, c in enumerate(const_kept):
        remap[lay.const_offset + c] = new_lay.const_offset + j
    instr = program.instructions.copy()
    if instr.size:
        instr[:, 0] = remap[instr[:, 0]]
        # unary ops never read their second operand; point it at the first
        # so the remapped index is guaranteed in range
        for k in range(instr.shape[0]):
            if int(instr[k, 2]) in UNARY_OPS:
                instr[k, 1] = instr[k, 0]
            else:
                instr[k, 1] = remap[program.instructions[k, 1]]
        instr[:, 3] = remap[instr[:, 3]]
    return LgpProgram(instr, new_lay,
                      program.const_values[const_kept],
                      program.mem_init[mem_kept])


def random_instruction(layout: RegisterLayout, op_set,
                       rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.integers(layout.n_registers),
                     rng.integers(layout.n_registers),
                     op_set[rng.integers(len(op_set))],
                     rng.integers(layout.n_writable)], dtype=np.int64)


def random_program(layout: RegisterLayout, length_range: tuple[int, int],
                   op_set=DEFAULT_OP_SET, rng: np.random.Generator = None,
                   max_attempts: int = 200,
                   max_instructions: int | None = None) -> LgpProgram:
    """Random program whose post-intron effective length falls in length_range.

    Re-draws until the effective length lands in range (bounded attempts,
    then the closest draw is accepted).
    """
    lo, hi = length_range
    if not 1 <= lo <= hi:
        raise ValueError(f"impossible length range {length_range}")
    if max_instructions is not None and lo > max_instructions:
        raise ValueError("length range exceeds the instruction cap")
    raw_cap = 2 * hi if max_instructions is None else min(2 * hi, max_instructions)
    rng = rng if rng is not None else np.random.default_rng()
    const_values = rng.random(layout.n_const)
    mem_init = rng.random(layout.n_mem)
    best = None
    best_gap = None
    for _ in range(max_attempts):
        raw_len = int(rng.integers(lo, raw_cap + 1))
        instr = np.vstack([random_instruction(layout, op_set, rng)
                           for _ in range(raw_len)])
        prog = LgpProgram(instr, layout, const_values, mem_init)
        eff = len(remove_introns(prog))
        if lo <= eff <= hi:
            return prog
        gap = lo - eff if eff < lo else eff - hi
        if best_gap is None or gap < best_gap:
            best, best_gap = prog, gap
    return best


def conform_instructions(instructions: np.ndarray,
                         layout: RegisterLayout) -> np.ndarray:
    """Fold register indices into a layout's valid range (modulo).

    Lets instruction blocks migrate between parents with differently sized
    register banks; indices already in range are untouched.
    """
    out = np.asarray(instructions, np.int64).reshape(-1, 4).copy()
    out[:, 0] %= layout.n_registers
    out[:, 1] %= layout.n_registers
    out[:, 3] %= layout.n_writable
    return out


def lgp_crossover(a: LgpProgram, b: LgpProgram, rng: np.random.Generator,
                  max_instructions: int = 50, min_instructions: int = 1,
                  max_attempts: int = 50) -> tuple[LgpProgram, LgpProgram]:
    """Swap one contiguous instruction block between two parents.

    Block positions and lengths are drawn independently per parent; children
    that exceed max_instructions are truncated, and draws are repeated until
    both children meet min_instructions.  Imported blocks are conformed to
    the receiving parent's register bank.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("crossover parents must be non-empty")
    for _ in range(max_attempts):
        sa = int(rng.integers(len(a)))
        la = int(rng.integers(1, len(a) - sa + 1))
        sb = int(rng.integers(len(b)))
        lb = int(rng.integers(1, len(b) - sb + 1))
        ia = np.vstack([a.instructions[:sa],
                        conform_instructions(b.instructions[sb:sb + lb],
                                             a.layout),
                        a.instructions[sa + la:]])
        ib = np.vstack([b.instructions[:sb],
                        conform_instructions(a.instructions[sa:sa + la],
                                             b.layout),
                        b.instructions[sb + lb:]])
        if len(ia) >= min_instructions and len(ib) >= min_instructions:
            return (LgpProgram(ia[:max_instructions], a.layout,
                               a.const_values, a.mem_init),
                    LgpProgram(ib[:max_instructions], b.layout,
                               b.const_values, b.mem_init))
    # degenerate parents (e.g. both length 1): swap whole programs
    return (LgpProgram(conform_instructions(b.instructions, a.layout),
                       a.layout, a.const_values, a.mem_init),
            LgpProgram(conform_instructions(a.instructions, b.layout),
                       b.layout, b.const_values, b.mem_init))


def lgp_mutate(a: LgpProgram, instr_mutation_prob: float,
               rng: np.random.Generator, op_set=DEFAULT_OP_SET,
               const_perturb_prob: float = 0.1) -> LgpProgram:
    """Replace each instruction with a fresh random one with the given
    probability; at least one instruction always changes.  One constant may
    additionally be perturbed to keep constant diversity."""
    if not 0.0 <= instr_mutation_prob <= 1.0:
        raise ValueError("instruction mutation probability must lie in [0, 1]")
    instr = a.instructions.copy()
    hits = rng.random(len(a)) < instr_mutation_prob
    if not hits.any():
        hits[rng.integers(len(a))] = True
    for k in np.flatnonzero(hits):
        instr[k] = random_instruction(a.layout, op_set, rng)
    const_values = a.const_values
    if a.layout.n_const and rng.random() < const_perturb_prob:
        const_values = const_values.copy()
        j = rng.integers(const_values.size)
        const_values[j] = float(np.clip(const_values[j] + 0.1 * rng.standard_normal(),
                                        0.0, 1.0))
    return LgpProgram(instr, a.layout, const_values, a.mem_init)


@dataclass
class LgpConfig:
    """Program-mode parameters."""

    layout: RegisterLayout
    op_set: tuple = DEFAULT_OP_SET
    max_instructions: int = 50
    min_instructions: int = 2
    init_length_range: tuple[int, int] = (5, 35)
    instr_mutation_prob: float = 0.3
    const_perturb_prob: float = 0.1

    def to_dict(self) -> dict:
        return {"layout": self.layout.to_dict(), "op_set": list(self.op_set),
                "max_instructions": self.max_instructions,
                "min_instructions": self.min_instructions,
                "init_length_range": list(self.init_length_range),
                "instr_mutation_prob": self.instr_mutation_prob,
                "const_perturb_prob": self.const_perturb_prob}

    @classmethod
    def from_dict(cls, d: dict) -> "LgpConfig":
        return cls(layout=RegisterLayout.from_dict(d["layout"]),
                   op_set=tuple(d.get("op_set", DEFAULT_OP_SET)),
                   max_instructions=d.get("max_instructions", 50),
                   min_instructions=d.get("min_instructions", 2),
                   init_length_range=tuple(d.get("init_length_range", (5, 35))),
                   instr_mutation_prob=d.get("instr_mutation_prob", 0.3),
                   const_perturb_prob=d.get("const_perturb_prob", 0.1))


class ProgramOps:
    """Genome adapter plugging LGP operators into the evolution loop."""

    def __init__(self, config: LgpConfig):
        self.config = config

    def crossover(self, a, b, rng):
        return lgp_crossover(a, b, rng, self.config.max_instructions,
                             self.config.min_instructions)

    def mutate(self, a, rng):
        return lgp_mutate(a, self.config.instr_mutation_prob, rng,
                          self.config.op_set, self.config.const_perturb_prob)

    @staticmethod
    def key(genome) -> bytes:
        return genome.key()

    def random(self, rng):
        return random_program(self.config.layout, self.config.init_length_range,
                              self.config.op_set, rng,
                              max_instructions=self.config.max_instructions)

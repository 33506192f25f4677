"""Hybrid genetic optimization: binary GA and linear genetic programming
for exploration, alternated with a degeneracy-proof downhill simplex for
exploitation, plus benchmark problems, a k-fold statistical harness,
checkpointing and a CLI."""

from .space import (EncodingError, ParameterSpace, chromosome_key, decode,
                    encode, lhs_sample, random_chromosome)
from .individual import ORIGINS, Individual, Population
from .genetic import (BitstringOps, GaConfig, crossover, mutate,
                      next_generation, tournament_select)
from .lgp import (DEFAULT_OP_SET, LgpConfig, LgpProgram, ProgramOps,
                  RegisterLayout, compact_registers, eval_program,
                  lgp_crossover, lgp_mutate, random_program, remove_introns)
from .simplex import (DegeneracyGuardConfig, SimplexProtocolError,
                      SimplexState, combine_programs, corrective_vertex,
                      detect_degeneracy, exploit_lgp, exploit_parametric,
                      seed_vertices)
from .driver import (CheckpointError, Driver, EvalRecord, EvaluationError,
                     RunConfig, RunResult, StageSpec, check_convergence,
                     checkpoint_load, checkpoint_save, read_checkpoint,
                     resume, run, run_stepped, write_checkpoint)
from .harness import (Comparison, FoldRecord, FoldReport, compare,
                      run_kfold, summary_csv, summary_text)
from .config import (ConfigError, apply_override, build_run, load_config,
                     parse_config, serialize_config)

__version__ = "0.1.0"

__all__ = [
    "EncodingError", "ParameterSpace", "chromosome_key", "decode", "encode",
    "lhs_sample", "random_chromosome",
    "ORIGINS", "Individual", "Population",
    "BitstringOps", "GaConfig", "crossover", "mutate", "next_generation",
    "tournament_select",
    "DEFAULT_OP_SET", "LgpConfig", "LgpProgram", "ProgramOps",
    "RegisterLayout", "eval_program", "lgp_crossover", "lgp_mutate",
    "compact_registers", "random_program", "remove_introns",
    "DegeneracyGuardConfig", "SimplexProtocolError", "SimplexState",
    "combine_programs", "corrective_vertex", "detect_degeneracy",
    "exploit_lgp", "exploit_parametric", "seed_vertices",
    "CheckpointError", "Driver", "EvalRecord", "EvaluationError",
    "RunConfig", "RunResult", "StageSpec", "check_convergence",
    "checkpoint_load", "checkpoint_save", "read_checkpoint", "resume",
    "run", "run_stepped", "write_checkpoint",
    "Comparison", "FoldRecord", "FoldReport", "compare", "run_kfold",
    "summary_csv", "summary_text",
    "ConfigError", "apply_override", "build_run", "load_config",
    "parse_config", "serialize_config",
    "__version__",
]

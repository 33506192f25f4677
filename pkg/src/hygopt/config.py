"""TOML run configuration: parsing, validation, overrides, serialization.

The document mirrors the run settings section by section ([problem],
[run], [ga], [lgp], [guard], [harness], plus repeated [[stage]] tables).
Unknown keys are rejected with their dotted path, defaults are filled in
during validation, and a validated document serializes back to TOML that
reparses to the identical effective configuration.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

try:
    import tomllib                      # Python >= 3.11
except ModuleNotFoundError:             # pragma: no cover
    import tomli as tomllib

from .driver import RunConfig, StageSpec
from .genetic import GaConfig
from .lgp import DEFAULT_OP_SET, LgpConfig, RegisterLayout
from .simplex import DegeneracyGuardConfig
from .space import ParameterSpace
from .problems.benchmarks import BENCHMARKS, get_benchmark
from .problems.external import ExternalEvaluator
from .problems.landau import LandauConfig, LandauCostEvaluator


class ConfigError(ValueError):
    """Malformed or inconsistent configuration document."""


# (type tag, default); None default means "required when the section is used"
_SCHEMA = {
    "problem": {
        "name": ("str", None),
        "ndim": ("int", 2),
        "bits": ("int", 12),
        # external-evaluator problems
        "command": ("list", []),
        "run_id": ("str", "run"),
        "timeout": ("float", 30.0),
        "retries": ("int", 1),
        "lows": ("list", []),
        "highs": ("list", []),
        # oscillator problem
        "gamma": ("float", 0.01),
        "t_end_periods": ("float", 20.0),
        "steps_per_period": ("int", 200),
        "b_max": ("float", 25.0),
    },
    "run": {
        "mode": ("str", "ga"),
        "hybrid": ("bool", True),
        "init_size": ("int", 70),
        "init_method": ("str", "mcs"),
        "n_explor": ("int", 70),
        "n_exploit": ("int", 30),
        "n_sub": ("int", 10),
        "max_generations": ("int", 50),
        "max_evaluations": ("int", 5000),   # 0 disables the cap
        "stagnation_window": ("int", 0),    # 0 disables the check
        "stagnation_tol": ("float", 1e-12),
        "seed": ("int", 0),
        "jobs": ("int", 1),
        "penalize_flagged": ("bool", False),
        "weight_bound": ("float", 2.0),
        "weight_bits": ("int", 12),
    },
    "ga": {
        "n_elite": ("int", 1),
        "tournament_size": ("int", 7),
        "p_select": ("float", 1.0),
        "p_crossover": ("float", 0.55),
        "p_mutation": ("float", 0.45),
        "p_replication": ("float", 0.0),
        "crossover_points": ("int", 1),
        "crossover_mix": ("bool", True),
        "mutation_rate": ("float", 0.0),
        "max_regeneration_attempts": ("int", 2),
    },
    "lgp": {
        "n_out": ("int", 1),
        "n_mem": ("int", 1),
        "n_sensor": ("int", 2),
        "n_time": ("int", 0),
        "n_const": ("int", 2),
        "max_instructions": ("int", 50),
        "min_instructions": ("int", 2),
        "init_length_min": ("int", 5),
        "init_length_max": ("int", 35),
        "instr_mutation_prob": ("float", 0.3),
        "const_perturb_prob": ("float", 0.1),
    },
    "guard": {
        "enabled": ("bool", True),
        "n_f": ("int", 0),                  # 0 means N + 1
        "r2_threshold": ("float", 0.99),
        "corrective_multiplier": ("float", 4.0),
    },
    "harness": {
        "k": ("int", 20),
        "label": ("str", "run"),
    },
}

_STAGE_SCHEMA = {
    "frozen": ("table", {}),                # dimension index -> value
    "seeds": ("list", []),
    "generations": ("int", 0),              # 0 inherits the run cap
    "max_evaluations": ("int", 0),          # 0 inherits the run budget
    "init_size": ("int", 0),                # 0 inherits the run size
}


def _check_type(path: str, value, tag: str):
    ok = {
        "str": lambda v: isinstance(v, str),
        "bool": lambda v: isinstance(v, bool),
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "float": lambda v: isinstance(v, (int, float))
        and not isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
        "table": lambda v: isinstance(v, dict),
    }[tag](value)
    if not ok:
        raise ConfigError(f"{path}: expected {tag}, got {value!r}")
    return float(value) if tag == "float" else value


def _validate_section(name: str, table: dict, schema: dict) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    out = {}
    for key, value in table.items():
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key}")
        out[key] = _check_type(f"{name}.{key}", value, schema[key][0])
    for key, (tag, default) in schema.items():
        if key not in out:
            if default is None:
                raise ConfigError(f"missing required key {name}.{key}")
            out[key] = copy.deepcopy(default)
    return out


def validate(doc: dict) -> dict:
    """Check keys and types and fill defaults; returns the effective doc."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a table")
    out = {}
    for section in doc:
        if section not in _SCHEMA and section != "stage":
            raise ConfigError(f"unknown section [{section}]")
    if "problem" not in doc:
        raise ConfigError("missing required key problem.name "
                          "(no [problem] section)")
    for section, schema in _SCHEMA.items():
        out[section] = _validate_section(section, doc.get(section, {}),
                                         schema)
    stages = doc.get("stage", [])
    if not isinstance(stages, list):
        raise ConfigError("[[stage]] must be an array of tables")
    out["stage"] = [_validate_section(f"stage[{i}]", s, _STAGE_SCHEMA)
                    for i, s in enumerate(stages)]
    _cross_validate(out)
    return out


def _cross_validate(doc: dict):
    name = doc["problem"]["name"]
    known = set(BENCHMARKS) | {"landau", "external"}
    if name not in known:
        raise ConfigError(f"problem.name: unknown problem {name!r}")
    mode = doc["run"]["mode"]
    if mode not in ("ga", "lgp"):
        raise ConfigError(f"run.mode: must be 'ga' or 'lgp', got {mode!r}")
    if name == "landau" and mode != "lgp":
        raise ConfigError("the landau problem requires run.mode = 'lgp'")
    if name == "external":
        if not doc["problem"]["command"]:
            raise ConfigError("missing required key problem.command")
        if not doc["problem"]["lows"] or not doc["problem"]["highs"]:
            raise ConfigError("external problems need problem.lows and "
                              "problem.highs")
        if len(doc["problem"]["lows"]) != len(doc["problem"]["highs"]):
            raise ConfigError("problem.lows and problem.highs lengths differ")
    for i, stage in enumerate(doc["stage"]):
        for key in stage["frozen"]:
            try:
                int(key)
            except ValueError:
                raise ConfigError(f"stage[{i}].frozen: dimension keys must "
                                  f"be integers, got {key!r}") from None


def parse_config(text: str) -> dict:
    """TOML text -> validated effective document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return validate(doc)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# -- overrides ----------------------------------------------------------------

def apply_override(doc: dict, spec: str) -> dict:
    """Apply one 'section.key=value' override; value parsed as TOML."""
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} is not of the form key=value")
    path, _, raw = spec.partition("=")
    parts = path.strip().split(".")
    if len(parts) != 2:
        raise ConfigError(f"override path {path!r} must be section.key")
    section, key = parts
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()          # bare strings need no quotes
    doc = copy.deepcopy(doc)
    doc.setdefault(section, {})[key] = value
    return validate(doc)


# -- serialization -------------------------------------------------------------

def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{_toml_key(k)} = {_toml_value(v)}"
                          for k, v in value.items())
        return "{" + inner + "}"
    raise ConfigError(f"cannot serialize value {value!r}")


def _toml_key(key: str) -> str:
    if key.replace("_", "").replace("-", "").isalnum():
        return key
    return _toml_value(str(key))


def serialize_config(doc: dict) -> str:
    """Validated document -> TOML text (reparses to an identical doc)."""
    doc = validate(doc)
    lines = []
    for section, schema in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in schema:
            lines.append(f"{key} = {_toml_value(doc[section][key])}")
        lines.append("")
    for stage in doc["stage"]:
        lines.append("[[stage]]")
        for key in _STAGE_SCHEMA:
            lines.append(f"{key} = {_toml_value(stage[key])}")
        lines.append("")
    return "\n".join(lines)


# -- building runtime objects ---------------------------------------------------

@dataclass
class BuiltRun:
    """Everything the CLI needs to execute a configured run."""

    config: RunConfig
    evaluator: object
    problem: str
    stages: list[StageSpec]
    harness_k: int
    label: str
    doc: dict

    def close(self):
        close = getattr(self.evaluator, "close", None)
        if close is not None:
            close()


def _build_space(doc: dict):
    p = doc["problem"]
    if p["name"] == "external":
        lows = np.asarray(p["lows"], float)
        highs = np.asarray(p["highs"], float)
        bits = np.full(lows.size, p["bits"], np.int64)
        return ParameterSpace(lows, highs, bits), None
    bench = get_benchmark(p["name"])
    space = bench.space(p["ndim"], p["bits"])
    return space, bench


def build_run(doc: dict) -> BuiltRun:
    """Turn a validated document into run config, evaluator and stages."""
    doc = validate(doc)
    p, r, g = doc["problem"], doc["run"], doc["ga"]
    ga = GaConfig(**g)
    mode = r["mode"]

    space = None
    lgp_cfg = None
    known_optima = None
    evaluator_serial = False
    if mode == "ga":
        space, bench = _build_space(doc)
        if p["name"] == "external":
            evaluator = ExternalEvaluator(
                [str(c) for c in p["command"]], run_id=p["run_id"],
                timeout=p["timeout"], retries=p["retries"])
            evaluator_serial = True       # one child process, one pipe
        else:
            evaluator = bench
            known_optima = bench.grid_optima(space)
    else:
        lp = doc["lgp"]
        layout = RegisterLayout(n_out=lp["n_out"], n_mem=lp["n_mem"],
                                n_sensor=lp["n_sensor"], n_time=lp["n_time"],
                                n_const=lp["n_const"])
        lgp_cfg = LgpConfig(
            layout=layout, op_set=DEFAULT_OP_SET,
            max_instructions=lp["max_instructions"],
            min_instructions=lp["min_instructions"],
            init_length_range=(lp["init_length_min"], lp["init_length_max"]),
            instr_mutation_prob=lp["instr_mutation_prob"],
            const_perturb_prob=lp["const_perturb_prob"])
        if p["name"] == "landau":
            if layout.n_sensor != 2:
                raise ConfigError("the landau problem needs lgp.n_sensor = 2 "
                                  "(state feedback on a1, a2)")
            period = 2.0 * np.pi
            landau = LandauConfig(
                gamma=p["gamma"], t_end=p["t_end_periods"] * period,
                dt=period / p["steps_per_period"], b_max=p["b_max"])
            evaluator = LandauCostEvaluator(landau)
        else:
            raise ConfigError(f"problem {p['name']!r} has no program-mode "
                              "evaluator; use run.mode = 'ga'")

    gd = doc["guard"]
    n_f = gd["n_f"]
    if n_f == 0:
        n_f = (space.ndim if space is not None else r["n_sub"]) + 1
    guard = DegeneracyGuardConfig(n_f=n_f, r2_threshold=gd["r2_threshold"],
                                  corrective_multiplier=gd["corrective_multiplier"],
                                  enabled=gd["enabled"])

    config = RunConfig(
        mode=mode, hybrid=r["hybrid"], space=space, lgp=lgp_cfg, ga=ga,
        init_size=r["init_size"], init_method=r["init_method"],
        n_explor=r["n_explor"], n_exploit=r["n_exploit"], n_sub=r["n_sub"],
        max_generations=r["max_generations"],
        max_evaluations=r["max_evaluations"] or None,
        stagnation_window=r["stagnation_window"] or None,
        stagnation_tol=r["stagnation_tol"], seed=r["seed"], guard=guard,
        known_optima=known_optima, jobs=r["jobs"],
        evaluator_serial=evaluator_serial,
        penalize_flagged=r["penalize_flagged"],
        weight_bound=r["weight_bound"], weight_bits=r["weight_bits"])

    stages = []
    for s in doc["stage"]:
        stages.append(StageSpec(
            frozen={int(k): float(v) for k, v in s["frozen"].items()},
            seeds=[np.asarray(seed, float) for seed in s["seeds"]] or None,
            generations=s["generations"] or None,
            max_evaluations=s["max_evaluations"] or None,
            init_size=s["init_size"] or None))

    return BuiltRun(config=config, evaluator=evaluator, problem=p["name"],
                    stages=stages, harness_k=doc["harness"]["k"],
                    label=doc["harness"]["label"], doc=doc)

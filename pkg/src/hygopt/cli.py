"""Command-line front end: run, kfold, resume and report.

Artifacts are CSV files (column layouts are frozen in FORMATS.md) plus an
effective-config echo; every file is written atomically via a temp file
and rename, so an interrupted command never leaves a truncated artifact.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import driver as driver_mod
from .config import (ConfigError, apply_override, build_run, load_config,
                     serialize_config)
from .driver import (CheckpointError, Driver, EvaluationError, RunResult,
                     read_checkpoint, run_stepped)
from .harness import report_rows_csv, run_kfold, summary_csv, summary_text
from .lgp import LgpProgram

RUN_LOG_COLUMNS = ("eval_index", "generation", "stage", "origin", "flagged",
                   "cost")
BEST_SERIES_COLUMNS = ("generation", "best_cost")


def write_text_atomic(path: str, text: str):
    """Write via temp file + rename so readers never see partial content."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_log_csv(result: RunResult) -> str:
    """Evaluation log, one row per cost evaluation."""
    ndim = max((len(r.phenotype) for r in result.records
                if r.phenotype is not None), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(RUN_LOG_COLUMNS) + [f"p{i}" for i in range(ndim)])
    for r in result.records:
        phen = list(r.phenotype) if r.phenotype is not None else []
        phen += [""] * (ndim - len(phen))
        w.writerow([r.eval_index, r.generation, r.stage, r.origin,
                    int(r.flagged), repr(r.cost)] + [
                        repr(v) if v != "" else "" for v in phen])
    return buf.getvalue()


def best_series_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BEST_SERIES_COLUMNS)
    for g, cost in enumerate(result.best_costs, start=1):
        w.writerow([g, repr(cost)])
    return buf.getvalue()


def _write_run_artifacts(result: RunResult, out_dir: str, label: str):
    write_text_atomic(os.path.join(out_dir, f"{label}_log.csv"),
                      run_log_csv(result))
    write_text_atomic(os.path.join(out_dir, f"{label}_best_series.csv"),
                      best_series_csv(result))
    lines = [f"termination: {result.termination}",
             f"converged: {result.converged}",
             f"generations: {result.generations}",
             f"evaluations: {result.evaluations}",
             f"best_cost: {result.best_cost!r}"]
    if result.best.phenotype is not None:
        lines.append("best_phenotype: "
                     + " ".join(repr(float(v))
                                for v in result.best.phenotype))
    if isinstance(result.best.genome, LgpProgram):
        lines.append("best_program: " + result.best.genome.to_expression())
        write_text_atomic(os.path.join(out_dir, f"{label}_best_program.txt"),
                          result.best.genome.to_expression() + "\n")
    write_text_atomic(os.path.join(out_dir, f"{label}_result.txt"),
                      "\n".join(lines) + "\n")


def _load_doc(args) -> dict:
    doc = load_config(args.config)
    for spec in args.override or []:
        doc = apply_override(doc, spec)
    if args.seed is not None:
        doc = apply_override(doc, f"run.seed={args.seed}")
    if args.jobs is not None:
        doc = apply_override(doc, f"run.jobs={args.jobs}")
    return doc


def _default_jobs() -> int | None:
    env = os.environ.get("HYGO_OPT_JOBS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"HYGO_OPT_JOBS must be an integer, got {env!r}") \
            from None


def cmd_run(args) -> int:
    doc = _load_doc(args)
    built = build_run(doc)
    if args.checkpoint_dir:
        os.makedirs(args.checkpoint_dir, exist_ok=True)
        built.config.checkpoint_path = os.path.join(
            args.checkpoint_dir, f"{built.label}.ckpt")
    out_dir = args.out or "."
    write_text_atomic(os.path.join(out_dir,
                                   f"{built.label}_effective_config.toml"),
                      serialize_config(built.doc))
    print(f"effective config: {built.label}_effective_config.toml")
    try:
        if built.stages:
            result = run_stepped(built.stages, built.config, built.evaluator)
        else:
            result = driver_mod.run(built.config, built.evaluator,
                                    metadata={"doc": built.doc})
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.checkpoint_path:
            print(f"resume with: hygopt resume {exc.checkpoint_path}",
                  file=sys.stderr)
        return 1
    finally:
        built.close()
    _write_run_artifacts(result, out_dir, built.label)
    print(f"{built.label}: {result.termination}, "
          f"best cost {result.best_cost!r} after "
          f"{result.evaluations} evaluations")
    return 0


def cmd_kfold(args) -> int:
    doc = _load_doc(args)
    built = build_run(doc)
    k = args.k if args.k is not None else built.harness_k
    if k < 1:
        print("error: k must be >= 1", file=sys.stderr)
        return 2
    jobs = built.config.jobs
    if built.config.evaluator_serial:
        jobs = 1
    out_dir = args.out or "."
    try:
        report = run_kfold(built.config, built.evaluator, k, jobs=jobs,
                           problem=built.problem, label=built.label)
    finally:
        built.close()
    write_text_atomic(os.path.join(out_dir, f"{built.label}_folds.csv"),
                      report_rows_csv(report))
    write_text_atomic(os.path.join(out_dir, f"{built.label}_summary.csv"),
                      summary_csv([report]))
    write_text_atomic(os.path.join(out_dir, f"{built.label}_summary.txt"),
                      summary_text([report]))
    print(summary_text([report]), end="")
    return 0


def cmd_resume(args) -> int:
    try:
        payload = read_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = payload.get("metadata", {}).get("doc")
    if doc is None:
        print("error: checkpoint carries no problem description; "
              "resume it programmatically with driver.resume",
              file=sys.stderr)
        return 1
    built = build_run(doc)
    if payload["state"].get("done"):
        print("already terminated; nothing to resume")
        return 0
    d = Driver.from_payload(payload, built.evaluator)
    d.config.checkpoint_path = args.checkpoint
    try:
        result = d.run()
    finally:
        built.close()
    out_dir = args.out or "."
    _write_run_artifacts(result, out_dir, built.label)
    print(f"{built.label}: {result.termination}, "
          f"best cost {result.best_cost!r} after "
          f"{result.evaluations} evaluations")
    return 0


def _read_log(path: str):
    """Parse a run log CSV into per-row dicts; errors name file and line."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    not set(RUN_LOG_COLUMNS) <= set(reader.fieldnames):
                raise ConfigError(f"{path}:1: not a run log "
                                  f"(columns {reader.fieldnames})")
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append({
                        "eval_index": int(row["eval_index"]),
                        "generation": int(row["generation"]),
                        "origin": row["origin"],
                        "cost": float(row["cost"]),
                    })
                except (TypeError, ValueError, KeyError) as exc:
                    raise ConfigError(f"{path}:{lineno}: bad row "
                                      f"({exc})") from None
    except OSError as exc:
        raise ConfigError(f"cannot read log {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}:1: empty run log")
    return rows


def _best_series(rows) -> list[tuple[int, float]]:
    best = float("inf")
    by_gen: dict[int, float] = {}
    for row in rows:
        best = min(best, row["cost"])
        by_gen[row["generation"]] = best
    return sorted(by_gen.items())


def cmd_report(args) -> int:
    out_dir = args.out or "."
    all_series = []
    used_stems: set[str] = set()
    for path in args.logs:
        rows = _read_log(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        if stem in used_stems:        # same basename from another directory
            suffix = 2
            while f"{stem}-{suffix}" in used_stems:
                suffix += 1
            stem = f"{stem}-{suffix}"
        used_stems.add(stem)
        series = _best_series(rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BEST_SERIES_COLUMNS)
        for gen, cost in series:
            w.writerow([gen, repr(cost)])
        write_text_atomic(os.path.join(out_dir, f"{stem}_series.csv"),
                          buf.getvalue())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("eval_index", "cost", "origin"))
        for row in rows:
            w.writerow([row["eval_index"], repr(row["cost"]), row["origin"]])
        write_text_atomic(os.path.join(out_dir, f"{stem}_scatter.csv"),
                          buf.getvalue())
        all_series.append((stem, dict(series)))
        program_txt = path.replace("_log.csv", "_best_program.txt")
        if program_txt != path and os.path.exists(program_txt):
            with open(program_txt, encoding="utf-8") as fh:
                print(f"{stem} best program: {fh.read().strip()}")
    if len(all_series) > 1:
        gens = sorted({g for _, s in all_series for g in s})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation"] + [stem for stem, _ in all_series])
        for g in gens:
            w.writerow([g] + [repr(s[g]) if g in s else ""
                              for _, s in all_series])
        write_text_atomic(os.path.join(out_dir, "comparison.csv"),
                          buf.getvalue())
        print(f"comparison table: {os.path.join(out_dir, 'comparison.csv')}")
    print(f"report artifacts written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hygopt",
        description="Hybrid genetic optimization runs and statistics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True,
                           help="TOML configuration file")
            p.add_argument("--override", action="append", metavar="KEY=VALUE",
                           help="config override, repeatable "
                                "(e.g. ga.p_mutation=0.45)")
            p.add_argument("--seed", type=int, default=None,
                           help="override run.seed")
            p.add_argument("--jobs", type=int, default=_default_jobs(),
                           help="worker processes "
                                "(default: $HYGO_OPT_JOBS or config)")
        p.add_argument("--out", default=None, help="output directory")

    p_run = sub.add_parser("run", help="execute one optimization run")
    common(p_run)
    p_run.add_argument("--checkpoint-dir", default=None,
                       help="directory for generation-boundary checkpoints")
    p_run.set_defaults(func=cmd_run)

    p_kfold = sub.add_parser("kfold", help="repeated independent runs")
    common(p_kfold)
    p_kfold.add_argument("--k", type=int, default=None,
                         help="fold count (default: harness.k)")
    p_kfold.set_defaults(func=cmd_kfold)

    p_resume = sub.add_parser("resume", help="continue a checkpointed run")
    p_resume.add_argument("checkpoint", help="checkpoint file path")
    common(p_resume, config_required=False)
    p_resume.set_defaults(func=cmd_resume)

    p_report = sub.add_parser("report", help="summaries from run logs")
    p_report.add_argument("logs", nargs="+", help="run log CSV paths")
    common(p_report, config_required=False)
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

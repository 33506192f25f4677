"""Repeated-run statistics: k independent folds, aggregation, comparison.

A fold is one complete optimization run with its own seed.  The report
keeps one record per run; every aggregate is recomputed from the records
on access, so report and records can never disagree.  Folds are
independent and may run in parallel worker processes; the per-fold seeds
fully determine the results, so the jobs count never changes them.
"""

from __future__ import annotations

import dataclasses
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import mean, pstdev

from .driver import RunConfig, run


@dataclass
class FoldRecord:
    """Outcome of a single run within a k-fold experiment."""

    fold: int
    seed: int
    converged: bool = False
    generations: int = 0
    evaluations: int = 0
    best_cost: float = float("nan")
    termination: str = ""
    error: str | None = None

    @property
    def completed(self) -> bool:
        return self.error is None


@dataclass
class FoldReport:
    """Records plus on-demand aggregates for one method on one problem."""

    label: str                       # e.g. "hygo" or "ga"
    problem: str
    budget: int | None
    records: list[FoldRecord] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.records)

    @property
    def completed_records(self) -> list[FoldRecord]:
        return [r for r in self.records if r.completed]

    @property
    def n_failed(self) -> int:
        return self.k - len(self.completed_records)

    @property
    def convergence_pct(self) -> float:
        done = self.completed_records
        if not done:
            return float("nan")
        return 100.0 * sum(r.converged for r in done) / len(done)

    @property
    def mean_generations(self) -> float:
        done = self.completed_records
        return mean(r.generations for r in done) if done else float("nan")

    @property
    def mean_evaluations(self) -> float:
        done = self.completed_records
        return mean(r.evaluations for r in done) if done else float("nan")

    @property
    def mean_best_cost(self) -> float:
        done = self.completed_records
        return mean(r.best_cost for r in done) if done else float("nan")

    @property
    def std_best_cost(self) -> float:
        done = self.completed_records
        return pstdev(r.best_cost for r in done) if done else float("nan")

    def aggregates(self) -> dict:
        return {"label": self.label, "problem": self.problem,
                "k": self.k, "failed": self.n_failed,
                "convergence_pct": self.convergence_pct,
                "mean_generations": self.mean_generations,
                "mean_evaluations": self.mean_evaluations,
                "mean_best_cost": self.mean_best_cost,
                "std_best_cost": self.std_best_cost}


def _run_fold(payload) -> FoldRecord:
    fold, seed, config, evaluator = payload
    config = dataclasses.replace(config, seed=seed, checkpoint_path=None,
                                 jobs=1)
    try:
        result = run(config, evaluator)
    except Exception as exc:
        return FoldRecord(fold=fold, seed=seed, error=repr(exc))
    return FoldRecord(fold=fold, seed=seed, converged=result.converged,
                      generations=result.generations,
                      evaluations=result.evaluations,
                      best_cost=result.best_cost,
                      termination=result.termination)


def run_kfold(config: RunConfig, evaluator, k: int,
              seeds: list[int] | None = None, jobs: int = 1,
              problem: str = "", label: str = "") -> FoldReport:
    """Run k independent folds of one configuration.

    Fold i uses seeds[i] (default: config.seed + i).  A run error is
    recorded on its fold and excluded from the aggregates with a warning;
    it never aborts the experiment.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if seeds is None:
        seeds = [config.seed + i for i in range(k)]
    if len(seeds) != k:
        raise ValueError(f"need exactly {k} seeds, got {len(seeds)}")
    if len(set(seeds)) != k:
        raise ValueError("fold seeds must be distinct")
    payloads = [(i, int(seeds[i]), config, evaluator) for i in range(k)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_fold, payloads))
    else:
        records = [_run_fold(p) for p in payloads]
    report = FoldReport(label=label, problem=problem,
                        budget=config.max_evaluations, records=records)
    if report.n_failed:
        warnings.warn(f"{report.n_failed} of {k} folds failed; aggregates "
                      "cover completed runs only", RuntimeWarning)
    return report


# -- comparison ---------------------------------------------------------------

# (metric, attribute, True when higher is better)
COMPARISON_METRICS = (
    ("convergence_pct", True),
    ("mean_evaluations", False),
    ("mean_best_cost", False),
)


@dataclass
class MetricRow:
    metric: str
    value_a: float
    value_b: float
    winner: str                      # label of the winner, or "tie"


@dataclass
class Comparison:
    """Per-metric winners between two reports on the same problem."""

    label_a: str
    label_b: str
    problem: str
    rows: list[MetricRow]

    def wins(self, label: str) -> int:
        return sum(r.winner == label for r in self.rows)

    @property
    def ties(self) -> int:
        return sum(r.winner == "tie" for r in self.rows)

    def to_text(self) -> str:
        header = ["metric", self.label_a, self.label_b, "winner"]
        body = [[r.metric, f"{r.value_a:.6g}", f"{r.value_b:.6g}", r.winner]
                for r in self.rows]
        body.append(["total wins", str(self.wins(self.label_a)),
                     str(self.wins(self.label_b)), ""])
        return format_aligned([header] + body)


def compare(report_a: FoldReport, report_b: FoldReport) -> Comparison:
    """Metric-by-metric winner table (Comparison) for two reports.

    Both reports must describe the same problem under the same evaluation
    budget; a higher convergence rate wins, fewer mean evaluations win,
    and a lower mean best cost wins.  Exact ties are flagged as such.
    """
    if report_a.problem != report_b.problem:
        raise ValueError(f"cannot compare different problems: "
                         f"{report_a.problem!r} vs {report_b.problem!r}")
    if report_a.budget != report_b.budget:
        raise ValueError("cannot compare runs with different budgets")
    la, lb = report_a.label or "a", report_b.label or "b"
    if la == lb:
        la, lb = la + "-1", lb + "-2"
    rows = []
    for metric, higher_wins in COMPARISON_METRICS:
        va = getattr(report_a, metric)
        vb = getattr(report_b, metric)
        if va == vb or (va != va and vb != vb):     # equal or both NaN
            winner = "tie"
        elif va != va:
            winner = lb
        elif vb != vb:
            winner = la
        elif (va > vb) == higher_wins:
            winner = la
        else:
            winner = lb
        rows.append(MetricRow(metric, va, vb, winner))
    return Comparison(la, lb, report_a.problem, rows)


# -- emission -----------------------------------------------------------------

RUN_CSV_COLUMNS = ("fold", "seed", "converged", "generations",
                   "evaluations", "best_cost", "termination", "error")
SUMMARY_CSV_COLUMNS = ("label", "problem", "k", "failed", "convergence_pct",
                       "mean_generations", "mean_evaluations",
                       "mean_best_cost", "std_best_cost")


def report_rows_csv(report: FoldReport) -> str:
    """One CSV row per run."""
    import csv
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_CSV_COLUMNS)
    for r in report.records:
        w.writerow([r.fold, r.seed, int(r.converged), r.generations,
                    r.evaluations, repr(r.best_cost), r.termination,
                    r.error or ""])
    return buf.getvalue()


def summary_csv(reports: list[FoldReport]) -> str:
    """One CSV row of aggregates per report."""
    import csv
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_CSV_COLUMNS)
    for rep in reports:
        agg = rep.aggregates()
        w.writerow([agg[c] for c in SUMMARY_CSV_COLUMNS])
    return buf.getvalue()


def format_aligned(rows: list[list[str]]) -> str:
    """Space-padded text table."""
    if not rows:
        return ""
    widths = [max(len(str(row[i])) for row in rows)
              for i in range(len(rows[0]))]
    lines = ["  ".join(str(cell).ljust(w) for cell, w in zip(row, widths))
             .rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def summary_text(reports: list[FoldReport]) -> str:
    """Aligned-text aggregate table for human eyes."""
    header = list(SUMMARY_CSV_COLUMNS)
    body = []
    for rep in reports:
        agg = rep.aggregates()
        body.append([agg["label"], agg["problem"], str(agg["k"]),
                     str(agg["failed"]),
                     f"{agg['convergence_pct']:.1f}",
                     f"{agg['mean_generations']:.2f}",
                     f"{agg['mean_evaluations']:.2f}",
                     f"{agg['mean_best_cost']:.6g}",
                     f"{agg['std_best_cost']:.6g}"])
    return format_aligned([header] + body)

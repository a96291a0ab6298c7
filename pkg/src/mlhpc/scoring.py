"""Per-run time to train and the official benchmark score."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

from .errors import InsufficientRuns, MissingRunStop
from .mllog import RunLog
from .submission import SubmissionEntry, SubmissionTree

log = logging.getLogger(__name__)

SCORE_COLUMNS = ("org", "system", "benchmark", "division", "n_units", "batch", "score_minutes", "n_runs_used")


@dataclass(frozen=True)
class RunTime:
    minutes: float
    status: str  # "success" or "aborted"


def run_time(run: RunLog) -> RunTime:
    stop = run.run_stop
    if stop is None:
        raise MissingRunStop(f"{run.source}: run has no run_stop event")
    minutes = (stop.time_ms - run.run_start.time_ms) / 60000.0
    status = "success" if run.status == "success" else "aborted"
    return RunTime(minutes, status)


def official_score(times, required_runs: int) -> float:
    """Drop one fastest and one slowest time, average the rest."""
    times = [float(t) for t in times]
    need = max(required_runs, 3)
    if len(times) < need:
        raise InsufficientRuns(f"{len(times)} successful run time(s), at least {need} required")
    rest = list(times)
    rest.remove(min(rest))
    rest.remove(max(rest))
    return math.fsum(rest) / len(rest)


@dataclass(frozen=True)
class ScoreRow:
    org: str
    system: str
    benchmark: str
    division: str
    n_units: object
    batch: object
    score_minutes: float
    n_runs_used: int


def score_entry(entry: SubmissionEntry, force: bool = False) -> ScoreRow:
    """Score one entry from its successful runs.

    With ``force`` the required-run count is relaxed to the scoring minimum of 3.
    """
    times = [run_time(r).minutes for r in entry.successful_runs()]
    required = entry.benchmark.required_runs
    if force and len(times) < required:
        log.warning("%s: scoring %d successful runs (%d required)", entry.label, len(times), required)
        required = 3
    score = official_score(times, required)
    return ScoreRow(entry.org, entry.system_key or entry.system.system_name, entry.benchmark.name,
                    entry.division, entry.n_compute_units, entry.global_batch_size, score, len(times))


def score_tree(tree: SubmissionTree, force: bool = False) -> list:
    return [score_entry(e, force=force) for e in tree.entries]


def score_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORE_COLUMNS)
    for r in rows:
        w.writerow([r.org, r.system, r.benchmark, r.division,
                    "" if r.n_units is None else r.n_units,
                    "" if r.batch is None else r.batch,
                    repr(r.score_minutes), r.n_runs_used])
    return buf.getvalue()

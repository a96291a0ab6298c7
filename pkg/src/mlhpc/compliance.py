"""Rule checks over runs, entries and whole submission trees.

Finding codes are stable strings; see ``CODES``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import UnbalancedIntervals
from .mllog import EventType, RunLog, pair_intervals
from .submission import BenchmarkSpec, SubmissionEntry, SubmissionTree

ERROR, WARNING, INFO = "error", "warning", "info"

CODES = {
    "QUALITY_NOT_MET": ERROR,
    "STAGING_OUTSIDE_RUN": ERROR,
    "MISSING_KEY": ERROR,
    "INVALID_VALUE": ERROR,
    "UNBALANCED_INTERVALS": ERROR,
    "INSUFFICIENT_RUNS": ERROR,
    "DISALLOWED_HPARAM": ERROR,
    "NO_ENTRIES": ERROR,
    "NON_CONTIGUOUS_EPOCHS": ERROR,
    "NO_STAGING": WARNING,
    "ORPHAN_SYSTEM": WARNING,
    "DIVISION_MISMATCH": WARNING,
    "UNKNOWN_FILE": WARNING,
    "HPARAM_DEVIATION": INFO,
}

REQUIRED_KEYS = ("submission_benchmark", "submission_division", "global_batch_size", "num_compute_units")

# closed-division tunables; keys ending in "*" are prefixes
CLOSED_TUNABLES = {
    "cosmoflow": ("global_batch_size", "learning_rate*"),
    "deepcam": ("optimizer", "global_batch_size", "learning_rate*"),
}
ALLOWED_OPTIMIZERS = {"lamb", "adamw"}

_SEVERITY_ORDER = {ERROR: 0, WARNING: 1, INFO: 2}


@dataclass(frozen=True)
class Finding:
    severity: str
    code: str
    message: str
    file: str = ""
    line: Optional[int] = None

    def __post_init__(self):
        if self.code not in CODES:
            raise ValueError(f"unregistered finding code {self.code!r}")

    def to_dict(self) -> dict:
        return {"severity": self.severity, "code": self.code, "message": self.message,
                "file": self.file, "line": self.line}

    def __str__(self):
        loc = self.file + (f":{self.line}" if self.line is not None else "")
        return f"{self.severity.upper():7s} {self.code}: {self.message}" + (f" [{loc}]" if loc else "")


def finding(code, message, file="", line=None) -> Finding:
    return Finding(CODES[code], code, message, file, line)


def _sort_key(f: Finding):
    return (f.file, f.line if f.line is not None else -1, _SEVERITY_ORDER[f.severity], f.code, f.message)


@dataclass(frozen=True)
class ComplianceReport:
    findings: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not any(f.severity == ERROR for f in self.findings)

    def errors(self) -> list:
        return [f for f in self.findings if f.severity == ERROR]

    def to_dict(self) -> dict:
        return {"schema_version": 1, "passed": self.passed, "findings": [f.to_dict() for f in self.findings]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _loc(run: RunLog, event) -> Optional[int]:
    if not run.lines:
        return None
    for i, e in enumerate(run.events):
        if e is event:
            return run.lines[i]
    return None


def _quality(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    return float(value)


def check_run(run: RunLog, spec: BenchmarkSpec, division: str) -> list:
    out = []
    src = run.source
    start, stop = run.run_start, run.run_stop

    for key in REQUIRED_KEYS:
        ev = run.first(key)
        if ev is None:
            out.append(finding("MISSING_KEY", f"required key {key} not logged", src))
            continue
        if key in ("global_batch_size", "num_compute_units"):
            v = ev.value
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                out.append(finding("INVALID_VALUE", f"{key} must be a positive integer, got {v!r}",
                                   src, _loc(run, ev)))
        elif key == "submission_benchmark" and ev.value != spec.name:
            out.append(finding("INVALID_VALUE", f"run logs benchmark {ev.value!r}, expected {spec.name!r}",
                               src, _loc(run, ev)))
        elif key == "submission_division" and ev.value != division:
            out.append(finding("DIVISION_MISMATCH", f"run logs division {ev.value!r}, entry is {division!r}",
                               src, _loc(run, ev)))

    if stop is not None and run.status == "success":
        vals = []
        for ev in run.find(spec.quality_key):
            q = _quality(ev.value)
            if q is None:
                out.append(finding("INVALID_VALUE", f"non-numeric {spec.quality_key} {ev.value!r}",
                                   src, _loc(run, ev)))
            else:
                vals.append(q)
        if not any(spec.meets_target(q) for q in vals):
            best = (min(vals) if spec.quality_direction == "minimize" else max(vals)) if vals else None
            op = "<" if spec.quality_direction == "minimize" else ">"
            out.append(finding("QUALITY_NOT_MET",
                               f"best {spec.quality_key} {best} does not satisfy {op} {spec.quality_target}",
                               src, _loc(run, stop)))

    try:
        staging = pair_intervals(run, "staging")
    except UnbalancedIntervals as exc:
        out.append(finding("STAGING_OUTSIDE_RUN", f"staging interval not closed: {exc}", src))
        staging = None
    if staging == []:
        out.append(finding("NO_STAGING", "no staging interval logged (staging time counted as 0)", src))
    elif staging:
        hi = stop.time_ms if stop is not None else None
        for iv in staging:
            if iv.start_ms < start.time_ms or (hi is not None and iv.end_ms > hi):
                out.append(finding("STAGING_OUTSIDE_RUN",
                                   f"staging [{iv.start_ms}, {iv.end_ms}] not inside run "
                                   f"[{start.time_ms}, {hi}]", src))
    for name in ("epoch", "eval"):
        try:
            pair_intervals(run, name)
        except UnbalancedIntervals as exc:
            out.append(finding("UNBALANCED_INTERVALS", str(exc), src))

    epoch_starts = [e for e in run.events if e.stem == "epoch" and e.event_type is EventType.INTERVAL_START]
    nums = [e.metadata.get("epoch_num") for e in epoch_starts]
    if nums and nums != list(range(1, len(nums) + 1)):
        bad = next(i for i, n in enumerate(nums) if n != i + 1)
        out.append(finding("NON_CONTIGUOUS_EPOCHS",
                           f"epoch_num sequence breaks at position {bad + 1}: got {nums[bad]!r}, "
                           f"expected {bad + 1}", src, _loc(run, epoch_starts[bad])))
    return out


def _allowed(spec_name: str, key: str, value) -> bool:
    for pat in CLOSED_TUNABLES.get(spec_name, ()):
        hit = key.startswith(pat[:-1]) if pat.endswith("*") else key == pat
        if hit:
            if key == "optimizer":
                return isinstance(value, str) and value.lower() in ALLOWED_OPTIMIZERS
            return True
    return False


def check_entry(entry: SubmissionEntry) -> list:
    spec = entry.benchmark
    src = entry.result_dir or entry.label
    out = []
    n_ok = len(entry.successful_runs())
    if n_ok < spec.required_runs:
        out.append(finding("INSUFFICIENT_RUNS",
                           f"{n_ok} successful run(s), {spec.name} requires {spec.required_runs}", src))

    deviations = {}
    for run in entry.runs:
        for ev in run.events:
            if ev.event_type is not EventType.POINT_IN_TIME or ev.metadata.get("tunable") is not True:
                continue
            if not _allowed(spec.name, ev.key, ev.value) and ev.key not in deviations:
                deviations[ev.key] = (ev.value, run.source, _loc(run, ev))
    if entry.division == "closed":
        for key, (value, file, line) in deviations.items():
            out.append(finding("DISALLOWED_HPARAM",
                               f"{key}={value!r} is not tunable in the closed division of {spec.name}",
                               file, line))
    elif deviations:
        listing = ", ".join(f"{k}={v[0]!r}" for k, v in deviations.items())
        out.append(finding("HPARAM_DEVIATION", f"open-division deviations from closed rules: {listing}", src))
    return out


def check_tree(tree: SubmissionTree) -> ComplianceReport:
    found = []
    if not tree.entries:
        found.append(finding("NO_ENTRIES", "submission tree contains no result entries", tree.root))
    used = {(e.org, e.system_key) for e in tree.entries}
    for (org, key) in sorted(tree.systems):
        if (org, key) not in used:
            found.append(finding("ORPHAN_SYSTEM", f"system {key!r} of {org!r} has no results",
                                 f"{tree.root}/{org}/systems/{key}.json"))
    for code, message, path in tree.notes:
        found.append(finding(code, message, path))
    for entry in tree.entries:
        found.extend(check_entry(entry))
        for run in entry.runs:
            found.extend(check_run(run, entry.benchmark, entry.division))
    return ComplianceReport(tuple(sorted(found, key=_sort_key)))

"""Benchmark constants and the on-disk submission tree.

Layout::

    <root>/<org>/systems/<system>.json
    <root>/<org>/results/<system>/<benchmark>/result_<k>.txt
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import EmptyEntry, InconsistentEntry, MissingSystemFile, SubmissionError
from .mllog import RunLog, read_run_log

log = logging.getLogger(__name__)

DIVISIONS = ("closed", "open")
_RESULT_RE = re.compile(r"^result_(\d+)\.txt$")


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    quality_key: str
    quality_direction: str  # "minimize" or "maximize"
    quality_target: float
    required_runs: int
    n_train_samples: int
    n_eval_samples: int
    dataset_size_gb: float
    train_dataset_size_gb: float

    def __post_init__(self):
        if self.required_runs < 3:
            raise ValueError("required_runs must be >= 3 (scoring drops two runs)")
        if self.n_train_samples <= 0 or self.n_eval_samples <= 0:
            raise ValueError("sample counts must be positive")
        if self.quality_direction not in ("minimize", "maximize"):
            raise ValueError(f"bad quality_direction {self.quality_direction!r}")

    def meets_target(self, value: float) -> bool:
        # strict inequality in both directions
        if self.quality_direction == "minimize":
            return value < self.quality_target
        return value > self.quality_target

    @property
    def n_samples(self) -> int:
        return self.n_train_samples + self.n_eval_samples


COSMOFLOW = BenchmarkSpec(
    name="cosmoflow",
    quality_key="eval_accuracy",
    quality_direction="minimize",
    quality_target=0.124,
    required_runs=10,
    n_train_samples=262144,
    n_eval_samples=65536,
    dataset_size_gb=5100.0,
    # no published train-split size; sample-proportional share of 5.1 TB
    train_dataset_size_gb=5100.0 * 262144 / (262144 + 65536),
)

DEEPCAM = BenchmarkSpec(
    name="deepcam",
    quality_key="eval_accuracy",
    quality_direction="maximize",
    quality_target=0.82,
    required_runs=5,
    n_train_samples=121266,
    n_eval_samples=15158,
    dataset_size_gb=8800.0,
    train_dataset_size_gb=7700.0,
)

_BUILTIN = {b.name: b for b in (COSMOFLOW, DEEPCAM)}


def builtin_benchmarks() -> list:
    return [COSMOFLOW, DEEPCAM]


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return _BUILTIN[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; expected one of {sorted(_BUILTIN)}") from None


@dataclass(frozen=True)
class SystemDescription:
    system_name: str
    n_nodes: int
    processors_per_node: int = 0
    accelerators_per_node: int = 0
    memory_per_node_gb: float = 0.0
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if min(self.processors_per_node, self.accelerators_per_node) < 0 or self.memory_per_node_gb < 0:
            raise ValueError("hardware counts must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "SystemDescription":
        known = {f.name for f in fields(cls)} - {"extra"}
        kwargs = {k: v for k, v in d.items() if k in known}
        extra = {k: v for k, v in d.items() if k not in known}
        return cls(**kwargs, extra=extra)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}
        d.update(self.extra)
        return d


def load_system(path) -> SystemDescription:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise SubmissionError(f"{path}: system description must be a JSON object")
    try:
        return SystemDescription.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise SubmissionError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class SubmissionEntry:
    org: str
    system: SystemDescription
    benchmark: BenchmarkSpec
    division: str
    runs: tuple
    n_compute_units: Optional[int]
    global_batch_size: Optional[int]
    system_key: str = ""
    result_dir: str = ""

    @property
    def label(self) -> str:
        return f"{self.org}/{self.system_key or self.system.system_name}/{self.benchmark.name}"

    def successful_runs(self) -> list:
        return [r for r in self.runs if r.status == "success"]


@dataclass(frozen=True)
class SubmissionTree:
    root: str
    entries: tuple
    # (org, system_key) -> SystemDescription, including systems without results
    systems: dict = field(default_factory=dict)
    # loader notes as (code, message, path) triples, surfaced as warnings by compliance
    notes: tuple = ()


def _common_value(runs, key, path, cast):
    values = set()
    for r in runs:
        v = r.value_of(key)
        if v is not None:
            values.add(v)
    if len(values) > 1:
        raise InconsistentEntry(f"{path}: runs disagree on {key}: {sorted(map(str, values))}")
    if not values:
        return None
    (v,) = values
    try:
        return cast(v)
    except (TypeError, ValueError):
        return None


def _positive_int(v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValueError(v)
    return v


def _org_dirs(root: Path):
    if (root / "results").is_dir() or (root / "systems").is_dir():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir())


def load_submission(root) -> SubmissionTree:
    """Walk a submission tree and parse every result file."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"submission root {root} does not exist")
    entries = []
    systems = {}
    notes = []
    for org_dir in _org_dirs(root):
        org = org_dir.name
        sys_dir = org_dir / "systems"
        if sys_dir.is_dir():
            for p in sorted(sys_dir.glob("*.json")):
                systems[(org, p.stem)] = load_system(p)
        res_dir = org_dir / "results"
        if not res_dir.is_dir():
            continue
        for system_dir in sorted(p for p in res_dir.iterdir() if p.is_dir()):
            system_key = system_dir.name
            for bench_dir in sorted(p for p in system_dir.iterdir() if p.is_dir()):
                try:
                    bench = get_benchmark(bench_dir.name)
                except KeyError:
                    notes.append(("UNKNOWN_FILE", f"unknown benchmark directory {bench_dir.name!r}", str(bench_dir)))
                    log.warning("skipping unknown benchmark directory %s", bench_dir)
                    continue
                if (org, system_key) not in systems:
                    raise MissingSystemFile(
                        f"{bench_dir}: no system description {sys_dir / (system_key + '.json')}"
                    )
                entries.append(
                    _load_entry(org, system_key, systems[(org, system_key)], bench, bench_dir, notes)
                )
    return SubmissionTree(str(root), tuple(entries), systems, tuple(notes))


def _load_entry(org, system_key, system, bench, bench_dir: Path, notes) -> SubmissionEntry:
    indexed = []
    for p in sorted(bench_dir.iterdir()):
        m = _RESULT_RE.match(p.name)
        if m and p.is_file():
            indexed.append((int(m.group(1)), p))
        else:
            notes.append(("UNKNOWN_FILE", f"ignoring unexpected file {p.name!r}", str(p)))
            log.warning("ignoring unexpected file %s", p)
    indexed.sort()
    runs = tuple(read_run_log(p) for _, p in indexed)
    if not runs:
        raise EmptyEntry(f"{bench_dir}: no result_<k>.txt files")

    division = _common_value(runs, "submission_division", bench_dir, str)
    suffix = next((d for d in DIVISIONS if system_key.endswith("_" + d)), None)
    if division is None:
        division = suffix or "closed"
    elif suffix is not None and suffix != division:
        msg = f"directory suffix says {suffix!r} but logs say {division!r}; using logs"
        notes.append(("DIVISION_MISMATCH", msg, str(bench_dir)))
        log.warning("%s: %s", bench_dir, msg)
    units = _common_value(runs, "num_compute_units", bench_dir, _positive_int)
    batch = _common_value(runs, "global_batch_size", bench_dir, _positive_int)
    return SubmissionEntry(
        org=org,
        system=system,
        benchmark=bench,
        division=division,
        runs=runs,
        n_compute_units=units,
        global_batch_size=batch,
        system_key=system_key,
        result_dir=str(bench_dir),
    )

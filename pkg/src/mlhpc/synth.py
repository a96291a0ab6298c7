"""Deterministic synthetic submissions with a ground-truth sidecar.

Randomness comes from numpy's PCG64 bit generator.  Each run draws from its
own stream seeded by ``SeedSequence([seed, run_index])``, so runs are
independent of each other and of the number of runs generated.  Every run
draws, in order: epochs to converge, staging minutes, throughput jitter.

Timestamps are integer milliseconds and the sidecar is computed from the
same integers, so log-derived quantities match it exactly.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .mllog import EventType, LogEvent, RunLog, build_run_log, emit_log_line
from .submission import SubmissionEntry, SubmissionTree, SystemDescription, get_benchmark

GROUND_TRUTH_FILE = "ground_truth.json"
SCHEMA_VERSION = 1

_CADENCE_RE = re.compile(r"^every_k_steps[(:]\s*(\d+)\s*\)?$")

START = EventType.INTERVAL_START
END = EventType.INTERVAL_END
POINT = EventType.POINT_IN_TIME


@dataclass(frozen=True)
class SynthConfig:
    n_units: int
    batch: int
    epoch_time_s: float  # one training pass
    eval_time_s: float  # one evaluation pass
    epochs_to_converge_mean: float
    benchmark: str = "cosmoflow"
    division: str = "closed"
    n_runs: Optional[int] = None
    staging_min_mean: float = 0.0
    staging_min_std: float = 0.0
    eval_cadence: str = "per_epoch"
    epochs_to_converge_cv: float = 0.0
    quality_start: Optional[float] = None
    quality_decay: float = 3.0
    throughput_cv: float = 0.0
    extra_time_s: float = 0.0
    seed: int = 0
    org: str = "synth"
    system: str = "synth_system"
    accelerators_per_node: int = 4
    processors_per_node: int = 2
    start_time_ms: int = 1_600_000_000_000
    learning_rate: float = 0.001
    optimizer: str = "LAMB"

    def __post_init__(self):
        try:
            spec = get_benchmark(self.benchmark)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_runs is None:
            object.__setattr__(self, "n_runs", spec.required_runs)
        if self.quality_start is None:
            start = 1.0 if spec.quality_direction == "minimize" else 0.0
            object.__setattr__(self, "quality_start", start)
        if self.division not in ("closed", "open"):
            raise ConfigError(f"division must be closed or open, got {self.division!r}")
        if self.n_runs < spec.required_runs:
            raise ConfigError(f"n_runs {self.n_runs} < required_runs {spec.required_runs} for {spec.name}")
        if self.n_units < 1 or self.batch < 1:
            raise ConfigError("n_units and batch must be >= 1")
        if not (self.epoch_time_s > 0 and self.eval_time_s > 0 and self.epochs_to_converge_mean > 0):
            raise ConfigError("epoch_time_s, eval_time_s and epochs_to_converge_mean must be > 0")
        for name in ("staging_min_mean", "staging_min_std", "epochs_to_converge_cv", "throughput_cv",
                     "extra_time_s", "quality_decay"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.staging_min_mean == 0 and self.staging_min_std > 0:
            raise ConfigError("staging_min_std needs a positive staging_min_mean")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.accelerators_per_node < 0 or self.processors_per_node < 1:
            raise ConfigError("bad per-node hardware counts")
        wrong_side = (self.quality_start > spec.quality_target if spec.quality_direction == "minimize"
                      else self.quality_start < spec.quality_target)
        if not wrong_side:
            raise ConfigError("quality_start must not already meet the quality target")
        _ = self.cadence_k

    @property
    def spec(self):
        return get_benchmark(self.benchmark)

    @property
    def cadence_k(self) -> Optional[int]:
        if self.eval_cadence == "per_epoch":
            return None
        m = _CADENCE_RE.match(self.eval_cadence.strip())
        if not m or int(m.group(1)) < 1:
            raise ConfigError(f"eval_cadence must be per_epoch or every_k_steps(k), got {self.eval_cadence!r}")
        return int(m.group(1))

    @classmethod
    def from_mapping(cls, d: dict) -> "SynthConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for k, v in d.items():
            if k not in types:
                raise ConfigError(f"unknown config key {k!r}")
            t = str(types[k])
            try:
                if isinstance(v, str):
                    if "int" in t:
                        v = int(v)
                    elif "float" in t:
                        v = float(v)
            except ValueError:
                raise ConfigError(f"{k}: cannot parse {v!r}") from None
            kwargs[k] = v
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "SynthConfig":
        d = {}
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{n}: expected key=value")
                k, v = line.split("=", 1)
                d[k.strip()] = v.strip()
        return cls.from_mapping(d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunTruth:
    staging_ms: int
    train_ms: int
    eval_ms: int
    extra_ms: int
    epochs: float
    train_steps: Optional[int]
    n_eval_passes: int

    @property
    def total_ms(self) -> int:
        return self.staging_ms + self.train_ms + self.eval_ms + self.extra_ms

    def to_dict(self) -> dict:
        m = 60000.0
        return {
            "t_staging_min": self.staging_ms / m,
            "t_train_min": self.train_ms / m,
            "t_eval_min": self.eval_ms / m,
            "t_extra_min": self.extra_ms / m,
            "total_min": self.total_ms / m,
            "epochs": self.epochs,
            "train_steps": self.train_steps,
            "n_eval_passes": self.n_eval_passes,
            "status": "success",
        }


@dataclass
class GroundTruth:
    config: SynthConfig
    runs: list = field(default_factory=list)

    @property
    def official_score(self) -> float:
        # independent of the scoring module: sort, slice, mean
        times = sorted(r.total_ms / 60000.0 for r in self.runs)
        kept = times[1:-1]
        return sum(kept) / len(kept)

    def decomposition_means(self) -> dict:
        n = len(self.runs)
        rows = [r.to_dict() for r in self.runs]
        keys = ("t_staging_min", "t_train_min", "t_eval_min", "t_extra_min", "total_min", "epochs")
        return {k: sum(row[k] for row in rows) / n for k in keys}

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "runs": [r.to_dict() for r in self.runs],
            "official_score_min": self.official_score,
            "decomposition_means": self.decomposition_means(),
        }


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, run_index])))


def _lognormal(z: float, mean: float, cv: float) -> float:
    """Map a standard normal draw to a lognormal with the given mean and CV."""
    if cv == 0:
        return mean
    s2 = math.log1p(cv * cv)
    return math.exp(math.log(mean) - 0.5 * s2 + math.sqrt(s2) * z)


def _quality_values(spec, start: float, decay: float, n: int) -> list:
    """Monotone trajectory that meets the target only at the last evaluation."""
    target = spec.quality_target
    sign = 1.0 if spec.quality_direction == "minimize" else -1.0
    gap = abs(start - target)
    out = []
    for j in range(1, n):
        if decay > 0:
            w = (math.exp(-decay * j / n) - math.exp(-decay)) / (-math.expm1(-decay))
        else:
            w = 1.0 - j / n
        out.append(target + sign * gap * w)
    out.append(target - sign * max(gap * 1e-3, 1e-6))
    return out


def generate_run(cfg: SynthConfig, run_index: int):
    """Return (RunLog, RunTruth) for one run."""
    spec = cfg.spec
    rng = run_rng(cfg.seed, run_index)
    z_epochs, z_staging, z_tp = rng.standard_normal(3)
    epochs_target = _lognormal(z_epochs, cfg.epochs_to_converge_mean, cfg.epochs_to_converge_cv)
    staging_min = 0.0
    if cfg.staging_min_mean > 0:
        staging_min = _lognormal(z_staging, cfg.staging_min_mean, cfg.staging_min_std / cfg.staging_min_mean)
    tp_factor = _lognormal(z_tp, 1.0, cfg.throughput_cv)

    train_epoch_ms = cfg.epoch_time_s * 1000.0 * tp_factor
    eval_ms = max(1, int(round(cfg.eval_time_s * 1000.0 * tp_factor)))
    staging_ms = int(round(staging_min * 60000.0))
    extra_ms = int(round(cfg.extra_time_s * 1000.0))

    t0 = cfg.start_time_ms + run_index * 86_400_000
    ev = []

    def add(key, t, etype=POINT, value=None, **meta):
        ev.append(LogEvent(key, value, t, etype, meta))

    add("run_start", t0, START)
    add("submission_benchmark", t0, value=spec.name)
    add("submission_division", t0, value=cfg.division)
    add("submission_org", t0, value=cfg.org)
    add("submission_platform", t0, value=cfg.system)
    add("num_compute_units", t0, value=cfg.n_units)
    add("global_batch_size", t0, value=cfg.batch, tunable=True)
    add("train_samples", t0, value=spec.n_train_samples)
    add("eval_samples", t0, value=spec.n_eval_samples)
    add("learning_rate", t0, value=cfg.learning_rate, tunable=True)
    if spec.name == "deepcam":
        add("optimizer", t0, value=cfg.optimizer, tunable=True)
    t = t0
    if staging_ms > 0:
        add("staging_start", t, START)
        t += staging_ms
        add("staging_stop", t, END)
    t += extra_ms

    k = cfg.cadence_k
    train_ms = 0
    n_evals = 0
    if k is None:
        n_epochs = max(1, math.ceil(epochs_target - 1e-9))
        seg = int(round(train_epoch_ms))
        quality = _quality_values(spec, cfg.quality_start, cfg.quality_decay, n_epochs)
        for i in range(1, n_epochs + 1):
            add("epoch_start", t, START, epoch_num=i)
            t += seg
            train_ms += seg
            add("eval_start", t, START, epoch_num=i)
            t += eval_ms
            add(spec.quality_key, t, value=quality[i - 1], epoch_num=i)
            add("eval_stop", t, END, epoch_num=i)
            add("epoch_stop", t, END, epoch_num=i)
            n_evals += 1
        epochs_done = float(n_epochs)
        steps_total = None
    else:
        spe = math.ceil(spec.n_train_samples / cfg.batch)
        step_ms = train_epoch_ms / spe
        steps_total = max(k, math.ceil(epochs_target * spec.n_train_samples / cfg.batch / k - 1e-9) * k)
        quality = _quality_values(spec, cfg.quality_start, cfg.quality_decay, steps_total // k)
        step, epoch = 0, 1
        add("epoch_start", t, START, epoch_num=epoch)
        while True:
            nxt = min((step // k + 1) * k, epoch * spe)
            seg = int(round(nxt * step_ms)) - int(round(step * step_ms))
            t += seg
            train_ms += seg
            step = nxt
            if step % k == 0:
                add("eval_start", t, START, epoch_num=epoch, step_num=step)
                t += eval_ms
                add(spec.quality_key, t, value=quality[n_evals], epoch_num=epoch, step_num=step)
                add("eval_stop", t, END, epoch_num=epoch, step_num=step)
                n_evals += 1
            if step == steps_total:
                add("epoch_stop", t, END, epoch_num=epoch)
                break
            if step == epoch * spe:
                add("epoch_stop", t, END, epoch_num=epoch)
                epoch += 1
                add("epoch_start", t, START, epoch_num=epoch)
        epochs_done = steps_total * cfg.batch / spec.n_train_samples
    add("run_stop", t, END, status="success")

    truth = RunTruth(staging_ms, train_ms, n_evals * eval_ms, extra_ms, epochs_done, steps_total, n_evals)
    assert t - t0 == truth.total_ms
    source = f"<synth seed={cfg.seed} run={run_index}>"
    return build_run_log(ev, source), truth


def run_text(run: RunLog) -> str:
    return "".join(emit_log_line(e) + "\n" for e in run.events)


def system_description(cfg: SynthConfig) -> SystemDescription:
    per_node = cfg.accelerators_per_node or cfg.processors_per_node
    return SystemDescription(
        system_name=cfg.system,
        n_nodes=max(1, math.ceil(cfg.n_units / per_node)),
        processors_per_node=cfg.processors_per_node,
        accelerators_per_node=cfg.accelerators_per_node,
        memory_per_node_gb=384.0,
        notes="synthetic",
    )


def generate_submission(cfg: SynthConfig, root):
    """Write one entry into ``root`` and merge its truth into the sidecar.

    The sidecar lives at ``root/ground_truth.json``, beside the org
    directories rather than inside them, so the loader never sees it.
    Returns (SubmissionTree holding the in-memory entry, GroundTruth).
    """
    spec = cfg.spec
    root = Path(root)
    org_dir = root / cfg.org
    sys_dir = org_dir / "systems"
    res_dir = org_dir / "results" / cfg.system / spec.name
    sys_dir.mkdir(parents=True, exist_ok=True)
    res_dir.mkdir(parents=True, exist_ok=True)

    system = system_description(cfg)
    (sys_dir / f"{cfg.system}.json").write_text(json.dumps(system.to_dict(), indent=2) + "\n", encoding="utf-8")

    truth = GroundTruth(cfg)
    runs = []
    for i in range(cfg.n_runs):
        run, rt = generate_run(cfg, i)
        path = res_dir / f"result_{i}.txt"
        path.write_text(run_text(run), encoding="utf-8", newline="\n")
        runs.append(RunLog(run.events, str(path), ()))
        truth.runs.append(rt)

    sidecar = root / GROUND_TRUTH_FILE
    data = {"schema_version": SCHEMA_VERSION, "entries": {}}
    if sidecar.exists():
        data = json.loads(sidecar.read_text(encoding="utf-8"))
    data["entries"][f"{cfg.org}/{cfg.system}/{spec.name}"] = truth.to_dict()
    sidecar.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    entry = SubmissionEntry(
        org=cfg.org,
        system=system,
        benchmark=spec,
        division=cfg.division,
        runs=tuple(runs),
        n_compute_units=cfg.n_units,
        global_batch_size=cfg.batch,
        system_key=cfg.system,
        result_dir=str(res_dir),
    )
    tree = SubmissionTree(str(root), (entry,), {(cfg.org, cfg.system): system})
    return tree, truth


def read_ground_truth(root) -> dict:
    return json.loads((Path(root) / GROUND_TRUTH_FILE).read_text(encoding="utf-8"))

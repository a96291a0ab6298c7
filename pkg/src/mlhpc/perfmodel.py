"""Time-to-solution decomposition, scaling metrics and extrapolation.

Time to solution is split as staging + compute + extra, where compute is the
product of the epoch time and the number of epochs.  The epoch time used
throughout is the full-pass time: one training pass plus one evaluation pass.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import NegativeRemainder, OutOfCurveRange
from .mllog import RunLog, pair_intervals
from .scoring import run_time
from .stats import mean_std
from .submission import BenchmarkSpec, SubmissionEntry

log = logging.getLogger(__name__)

MS_PER_MIN = 60000.0
# clock granularity; remainders down to -1 ms are clamped to zero
CLAMP_MS = 1


@dataclass(frozen=True)
class RunDecomposition:
    t_staging_min: float
    t_train_min: float
    t_eval_min: float
    t_extra_min: float
    t_total_min: float
    epochs_completed: float
    train_steps: Optional[int]
    n_eval_passes: int

    def to_dict(self) -> dict:
        return asdict(self)


def _overlap(a, b) -> int:
    return max(0, min(a.end_ms, b.end_ms) - max(a.start_ms, b.start_ms))


def decompose(run: RunLog, spec: BenchmarkSpec) -> RunDecomposition:
    run_time(run)  # raises MissingRunStop
    total_ms = run.run_stop.time_ms - run.run_start.time_ms
    staging = pair_intervals(run, "staging")
    epochs = pair_intervals(run, "epoch")
    evals = pair_intervals(run, "eval")
    if not staging:
        log.warning("NO_STAGING: %s has no staging interval; staging time taken as 0", run.source)

    staging_ms = sum(iv.duration_ms for iv in staging)
    eval_ms = sum(iv.duration_ms for iv in evals)
    enclosed_ms = sum(_overlap(ep, ev) for ep in epochs for ev in evals)
    train_ms = sum(iv.duration_ms for iv in epochs) - enclosed_ms
    extra_ms = total_ms - staging_ms - train_ms - eval_ms
    if extra_ms < -CLAMP_MS:
        raise NegativeRemainder(
            f"{run.source}: staging+train+eval exceed the run time by {-extra_ms} ms"
        )
    extra_ms = max(extra_ms, 0)

    steps = [e.metadata["step_num"] for e in run.events
             if isinstance(e.metadata.get("step_num"), int) and not isinstance(e.metadata.get("step_num"), bool)]
    batch = run.value_of("global_batch_size")
    if steps and isinstance(batch, int) and batch > 0:
        train_steps = max(steps)
        epochs_done = train_steps * batch / spec.n_train_samples
    else:
        train_steps = None
        epochs_done = float(len(epochs))

    return RunDecomposition(
        t_staging_min=staging_ms / MS_PER_MIN,
        t_train_min=train_ms / MS_PER_MIN,
        t_eval_min=eval_ms / MS_PER_MIN,
        t_extra_min=extra_ms / MS_PER_MIN,
        t_total_min=(staging_ms + train_ms + eval_ms + extra_ms) / MS_PER_MIN,
        epochs_completed=epochs_done,
        train_steps=train_steps,
        n_eval_passes=len(evals),
    )


def relative_breakdown(d: RunDecomposition) -> tuple:
    """Fractions (staging, train, eval, extra) of the total time."""
    if not d.t_total_min > 0:
        raise ValueError("relative_breakdown needs a positive total time")
    parts = (d.t_staging_min, d.t_train_min, d.t_eval_min, d.t_extra_min)
    s = math.fsum(parts)
    return tuple(min(max(p / s, 0.0), 1.0) for p in parts)


def staging_epoch_ratio(t_staging_min: float, t_epoch_min: float) -> float:
    if not t_epoch_min > 0:
        raise ValueError("epoch time must be positive")
    return t_staging_min / t_epoch_min


def staging_share_estimate(r: float, epochs: float) -> float:
    """Approximate staging share of time to solution, with negligible extra time."""
    if r < 0 or not epochs > 0:
        raise ValueError("need r >= 0 and epochs > 0")
    return r / (r + epochs)


def epoch_time(spec: BenchmarkSpec, train_tp_agg: float, eval_tp_agg: float,
               eval_passes_per_epoch: float = 1.0) -> float:
    """Seconds for one training pass plus ``eval_passes_per_epoch`` evaluation passes."""
    if not (train_tp_agg > 0 and eval_tp_agg > 0):
        raise ValueError("throughputs must be positive")
    return spec.n_train_samples / train_tp_agg + eval_passes_per_epoch * spec.n_eval_samples / eval_tp_agg


def combined_epoch_throughput(spec: BenchmarkSpec, train_tp_agg: float, eval_tp_agg: float) -> tuple:
    """(samples/s, epochs/s) over a full train+eval pass."""
    t = epoch_time(spec, train_tp_agg, eval_tp_agg)
    return spec.n_samples / t, 1.0 / t


@dataclass(frozen=True)
class ScalingPoint:
    n_units: int
    batch: int
    epochs_mean: float
    epochs_std: float
    train_tp_per_unit: float
    eval_tp_per_unit: float
    epoch_tp: float
    label: str = ""

    def __post_init__(self):
        if not (self.train_tp_per_unit > 0 and self.eval_tp_per_unit > 0 and self.epoch_tp > 0):
            raise ValueError(f"{self.label}: throughputs must be positive")
        if not self.epochs_mean > 0:
            raise ValueError(f"{self.label}: epochs_mean must be positive")

    @classmethod
    def from_throughputs(cls, spec, n_units, batch, epochs_mean, train_tp_per_unit, eval_tp_per_unit,
                         epochs_std=0.0, label=""):
        t = epoch_time(spec, train_tp_per_unit * n_units, eval_tp_per_unit * n_units)
        return cls(n_units, batch, epochs_mean, epochs_std, train_tp_per_unit, eval_tp_per_unit, 1.0 / t, label)

    def epoch_time_s(self, spec: BenchmarkSpec, eval_passes_per_epoch: float = 1.0) -> float:
        return epoch_time(spec, self.train_tp_per_unit * self.n_units, self.eval_tp_per_unit * self.n_units,
                          eval_passes_per_epoch)

    def to_dict(self) -> dict:
        return asdict(self)


def reconstruct_tts(spec: BenchmarkSpec, point: ScalingPoint, t_staging_min: float,
                    eval_passes_per_epoch: float = 1.0) -> float:
    """Minutes: staging plus epochs times the full-pass epoch time."""
    return t_staging_min + point.epochs_mean * point.epoch_time_s(spec, eval_passes_per_epoch) / 60.0


def weak_scaling_efficiency(base: ScalingPoint, target: ScalingPoint, phase: str = "train") -> float:
    if phase == "train":
        return target.train_tp_per_unit / base.train_tp_per_unit
    if phase == "eval":
        return target.eval_tp_per_unit / base.eval_tp_per_unit
    raise ValueError(f"phase must be 'train' or 'eval', got {phase!r}")


def speedup(a_tts_min: float, b_tts_min: float) -> float:
    if not b_tts_min > 0:
        raise ValueError("reference time must be positive")
    return a_tts_min / b_tts_min


def compute_budget(tts_min: float, n_units: int) -> float:
    """Hours times compute units."""
    if not (tts_min > 0 and n_units > 0):
        raise ValueError("inputs must be positive")
    return tts_min / 60.0 * n_units


def iso_train_steps(epochs: float, batch: int, n_train: int) -> float:
    if not (epochs > 0 and batch > 0 and n_train > 0):
        raise ValueError("inputs must be positive")
    return epochs * n_train / batch


class EpochsCurve:
    """Epochs to converge as a function of global batch size."""

    def __init__(self, points):
        pts = sorted((int(b), float(e)) for b, e in points)
        if not pts:
            raise ValueError("empty epochs curve")
        for (b0, _), (b1, _) in zip(pts, pts[1:]):
            if b1 <= b0:
                raise ValueError(f"duplicate batch size {b1} in epochs curve")
        for b, e in pts:
            if b <= 0 or not e > 0:
                raise ValueError(f"curve point ({b}, {e}) must be positive")
        self.points = tuple(pts)

    @property
    def batches(self):
        return [b for b, _ in self.points]

    def epochs_at(self, batch: int) -> float:
        """Piecewise-linear interpolation in log2(batch); no extrapolation."""
        bs = self.batches
        if not bs[0] <= batch <= bs[-1]:
            raise OutOfCurveRange(f"batch {batch} outside curve range [{bs[0]}, {bs[-1]}]")
        i = bisect.bisect_left(bs, batch)
        if bs[i] == batch:
            return self.points[i][1]
        (b0, e0), (b1, e1) = self.points[i - 1], self.points[i]
        w = (math.log2(batch) - math.log2(b0)) / (math.log2(b1) - math.log2(b0))
        return e0 + w * (e1 - e0)

    @classmethod
    def read_csv(cls, path) -> "EpochsCurve":
        import csv

        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            return cls((int(r["batch"]), float(r["epochs"])) for r in rows)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: curve CSV needs numeric 'batch' and 'epochs' columns ({exc})") from None


@dataclass(frozen=True)
class Prediction:
    factor: float
    minutes: float
    target_batch: int
    target_units: float


def predict_tts(baseline: ScalingPoint, baseline_staging_ratio: float, target_batch: int,
                curve: EpochsCurve, spec: BenchmarkSpec, baseline_tts_min: Optional[float] = None) -> Prediction:
    """Extrapolate time to solution by data-parallel weak scaling.

    Compute units grow with the batch size at fixed local batch, so the epoch
    time shrinks by ``baseline.batch / target_batch`` while staging stays the
    same number of epoch-equivalents.  Epochs come from ``curve``.
    """
    r = baseline_staging_ratio
    e_base = curve.epochs_at(baseline.batch)
    e_target = curve.epochs_at(target_batch)
    factor = (r + e_target) / (r + e_base) * (baseline.batch / target_batch)
    if baseline_tts_min is None:
        t_epoch_min = baseline.epoch_time_s(spec) / 60.0
        baseline_tts_min = t_epoch_min * (r + baseline.epochs_mean)
    units = baseline.n_units * target_batch / baseline.batch
    return Prediction(factor, factor * baseline_tts_min, target_batch, units)


def run_throughputs(d: RunDecomposition, spec: BenchmarkSpec) -> tuple:
    """Aggregate (train, eval) samples/s observed in one run."""
    train = d.epochs_completed * spec.n_train_samples / (d.t_train_min * 60.0) if d.t_train_min > 0 else math.nan
    ev = d.n_eval_passes * spec.n_eval_samples / (d.t_eval_min * 60.0) if d.t_eval_min > 0 else math.nan
    return train, ev


@dataclass
class EntryAnalysis:
    label: str
    entry: SubmissionEntry
    decompositions: list
    score_minutes: float
    scaling_point: ScalingPoint
    staging_ratio: float
    budget: float
    eval_passes_per_epoch: float
    per_run_points: list  # (epochs, epoch throughput) per successful run

    def means(self) -> dict:
        out = {}
        for name in ("t_staging_min", "t_train_min", "t_eval_min", "t_extra_min", "t_total_min",
                     "epochs_completed"):
            out[name] = list(mean_std([getattr(d, name) for d in self.decompositions]))
        return out

    def breakdown(self) -> tuple:
        m = self.means()
        agg = RunDecomposition(m["t_staging_min"][0], m["t_train_min"][0], m["t_eval_min"][0],
                               m["t_extra_min"][0], m["t_total_min"][0], 0.0, None, 0)
        return relative_breakdown(agg)

    def to_dict(self) -> dict:
        e = self.entry
        return {
            "schema_version": 1,
            "label": self.label,
            "org": e.org,
            "system": e.system_key or e.system.system_name,
            "benchmark": e.benchmark.name,
            "division": e.division,
            "score_minutes": self.score_minutes,
            "decomposition": [d.to_dict() for d in self.decompositions],
            "means": self.means(),
            "relative_breakdown": dict(zip(("staging", "train", "eval", "extra"), self.breakdown())),
            "staging_ratio": self.staging_ratio,
            "eval_passes_per_epoch": self.eval_passes_per_epoch,
            "scaling_point": self.scaling_point.to_dict(),
            "budget": self.budget,
        }


def analyze_entry(entry: SubmissionEntry, score_minutes: float) -> EntryAnalysis:
    """Decompose every successful run and condense the entry into a scaling point."""
    spec = entry.benchmark
    runs = entry.successful_runs()
    decs = [decompose(r, spec) for r in runs]
    units = entry.n_compute_units or 1
    batch = entry.global_batch_size or 0
    trains, evals, points = [], [], []
    for d in decs:
        tr, ev = run_throughputs(d, spec)
        if math.isfinite(tr):
            trains.append(tr)
        if math.isfinite(ev):
            evals.append(ev)
        if math.isfinite(tr) and math.isfinite(ev):
            points.append((d.epochs_completed, 1.0 / epoch_time(spec, tr, ev)))
    if not trains or not evals:
        raise ValueError(f"{entry.label}: runs lack training or evaluation intervals")
    train_tp = mean_std(trains)[0]
    eval_tp = mean_std(evals)[0]
    ep_mean, ep_std = mean_std([d.epochs_completed for d in decs])
    point = ScalingPoint.from_throughputs(spec, units, batch, ep_mean, train_tp / units, eval_tp / units,
                                          epochs_std=ep_std, label=entry.label)
    passes = math.fsum(d.n_eval_passes for d in decs) / math.fsum(d.epochs_completed for d in decs)
    staging_mean = mean_std([d.t_staging_min for d in decs])[0]
    ratio = staging_epoch_ratio(staging_mean, 1.0 / point.epoch_tp / 60.0)
    return EntryAnalysis(
        label=entry.label,
        entry=entry,
        decompositions=decs,
        score_minutes=score_minutes,
        scaling_point=point,
        staging_ratio=ratio,
        budget=compute_budget(score_minutes, units),
        eval_passes_per_epoch=passes,
        per_run_points=points,
    )

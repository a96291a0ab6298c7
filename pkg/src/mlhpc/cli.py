"""Command-line front end: validate, score, analyze, predict, characterize, synth.

Exit codes: 0 success, 1 domain failure (non-compliance, out-of-range),
2 environmental failure (missing paths, unreadable or malformed input).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import characterization, plots
from .compliance import check_tree
from .errors import (ConfigError, InsufficientRuns, MalformedEvent, MalformedRow, MlhpcError, OutOfCurveRange)
from .mllog import pair_intervals
from .perfmodel import EpochsCurve, ScalingPoint, analyze_entry, iso_train_steps, predict_tts
from .scoring import score_csv, score_entry
from .stats import log_pca
from .submission import get_benchmark, load_submission
from .synth import SynthConfig, generate_submission

log = logging.getLogger("mlhpc")

SCHEMA_VERSION = 1
LOG_ENV = "MLHPC_LOG_LEVEL"
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

OK, DOMAIN_FAIL, ENV_FAIL = 0, 1, 2


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _load_tree(root):
    """(tree, None) or (None, exit code) for environmental/parse failures."""
    if not Path(root).is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return None, ENV_FAIL
    try:
        return load_submission(root), None
    except (OSError, MlhpcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, ENV_FAIL


def _print_report(report) -> None:
    for f in report.findings:
        print(f)
    print("PASSED" if report.passed else f"FAILED ({len(report.errors())} errors)")


def cmd_validate(args) -> int:
    tree, code = _load_tree(args.root)
    if tree is None:
        return code
    report = check_tree(tree)
    _print_report(report)
    return OK if report.passed else DOMAIN_FAIL


def _scored_entries(tree, force: bool):
    """(entry, ScoreRow) pairs; with force, entries that cannot be scored are skipped."""
    out = []
    for e in tree.entries:
        try:
            out.append((e, score_entry(e, force=force)))
        except InsufficientRuns as exc:
            if not force:
                raise
            log.warning("%s skipped: %s", e.label, exc)
    return out


def _gate(tree, force: bool):
    report = check_tree(tree)
    if report.passed:
        return None
    _print_report(report)
    if not tree.entries:
        return DOMAIN_FAIL
    if not force:
        print("refusing to continue on a non-compliant tree (use --force)", file=sys.stderr)
        return DOMAIN_FAIL
    log.warning("continuing on a non-compliant tree because of --force")
    return None


def cmd_score(args) -> int:
    tree, code = _load_tree(args.root)
    if tree is None:
        return code
    code = _gate(tree, args.force)
    if code is not None:
        return code
    try:
        scored = _scored_entries(tree, args.force)
    except MlhpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_FAIL
    if not scored:
        print("error: no entry could be scored", file=sys.stderr)
        return DOMAIN_FAIL
    atomic_write(args.out, score_csv([row for _, row in scored]))
    for _, row in scored:
        print(f"{row.org}/{row.system}/{row.benchmark}: {row.score_minutes:.4f} min ({row.n_runs_used} runs)")
    return OK


# --- analyze -------------------------------------------------------------


def _panel_tables(spec, analyses):
    pts = [a.scaling_point for a in analyses]
    panels = {
        "a": (("label", "n_units", "batch", "batch_per_unit"),
              [(p.label, p.n_units, p.batch, p.batch / p.n_units) for p in pts]),
        "b": (("label", "batch", "epochs_mean", "epochs_std", "train_steps"),
              [(p.label, p.batch, p.epochs_mean, p.epochs_std,
                iso_train_steps(p.epochs_mean, p.batch, spec.n_train_samples) if p.batch > 0 else None)
               for p in pts]),
        "c": (("label", "n_units", "train_tp", "eval_tp", "train_tp_per_unit", "eval_tp_per_unit"),
              [(p.label, p.n_units, p.train_tp_per_unit * p.n_units, p.eval_tp_per_unit * p.n_units,
                p.train_tp_per_unit, p.eval_tp_per_unit) for p in pts]),
        "d": (("label", "epochs_mean", "epoch_tp", "t_compute_min"),
              [(p.label, p.epochs_mean, p.epoch_tp, p.epochs_mean / p.epoch_tp / 60.0) for p in pts]),
    }
    return panels


def _panel_svgs(spec, analyses):
    pts = [a.scaling_point for a in analyses]
    name = spec.name
    a_pts = [(p.n_units, p.batch, p.label) for p in pts]
    a_lines = plots.iso_lines(a_pts, lambda lv, x: lv * x, plots.decade_levels([p.batch / p.n_units for p in pts]))
    b_pts = [(p.batch, p.epochs_mean, p.label) for p in pts]
    steps = [iso_train_steps(p.epochs_mean, p.batch, spec.n_train_samples) for p in pts if p.batch > 0]
    b_lines = plots.iso_lines(b_pts, lambda lv, x: lv * x / spec.n_train_samples, plots.decade_levels(steps))
    c_pts = []
    for p in pts:
        c_pts.append((p.n_units, p.train_tp_per_unit * p.n_units, f"{p.label} train"))
        c_pts.append((p.n_units, p.eval_tp_per_unit * p.n_units, f"{p.label} eval"))
    per_unit = [p.train_tp_per_unit for p in pts] + [p.eval_tp_per_unit for p in pts]
    c_lines = plots.iso_lines(c_pts, lambda lv, x: lv * x, plots.decade_levels(per_unit))
    d_pts = [(p.epochs_mean, p.epoch_tp, p.label) for p in pts]
    t_comp = [p.epochs_mean / p.epoch_tp / 60.0 for p in pts]
    # constant compute time T (minutes): epoch_tp = epochs / (60 T)
    d_lines = plots.iso_lines(d_pts, lambda lv, x: x / (60.0 * lv), plots.decade_levels(t_comp))
    return {
        "a": plots.loglog_scatter(a_pts, f"{name}: batch vs units", "compute units", "global batch", a_lines),
        "b": plots.loglog_scatter(b_pts, f"{name}: epochs vs batch", "global batch", "epochs", b_lines),
        "c": plots.loglog_scatter(c_pts, f"{name}: throughput", "compute units", "samples/s", c_lines),
        "d": plots.loglog_scatter(d_pts, f"{name}: compute time", "epochs", "epochs/s", d_lines),
    }


def _safe(label: str) -> str:
    return label.replace("/", "__").replace(" ", "_")


def cmd_analyze(args) -> int:
    tree, code = _load_tree(args.root)
    if tree is None:
        return code
    code = _gate(tree, args.force)
    if code is not None:
        return code
    try:
        scored = _scored_entries(tree, args.force)
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            analyses = list(pool.map(lambda es: analyze_entry(es[0], es[1].score_minutes), scored))
    except (MlhpcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_FAIL
    if not analyses:
        print("error: no entry could be analyzed", file=sys.stderr)
        return DOMAIN_FAIL

    out = Path(args.outdir)
    bundle = {"schema_version": SCHEMA_VERSION, "entries": [], "tables_csv": [], "plots_svg": [], "pca": []}

    def put(rel, text, kind):
        atomic_write(out / rel, text)
        bundle[kind].append(rel)

    for a in analyses:
        put(f"entries/{_safe(a.label)}.json", _json(a.to_dict()), "entries")

    by_bench = {}
    for a in analyses:
        by_bench.setdefault(a.entry.benchmark.name, []).append(a)
    for name in sorted(by_bench):
        group = by_bench[name]
        spec = group[0].entry.benchmark
        for panel, (header, rows) in _panel_tables(spec, group).items():
            put(f"panel_{panel}_{name}.csv", _csv(header, rows), "tables_csv")
        for panel, svg in _panel_svgs(spec, group).items():
            put(f"panel_{panel}_{name}.svg", svg, "plots_svg")

        # one ellipse per entry; points are shown relative to the entry's geometric mean
        fits, scatter, ellipses = [], [], []
        for a in group:
            try:
                pca = log_pca(a.per_run_points)
            except MlhpcError as exc:
                log.warning("%s: log-PCA skipped: %s", a.label, exc)
                continue
            fits.append({"label": a.label, "n_points": len(a.per_run_points), **pca.to_dict()})
            ge, gt = 10 ** pca.mean[0], 10 ** pca.mean[1]
            scatter.extend((e / ge, t / gt, a.label) for e, t in a.per_run_points)
            ellipses.append(((0.0, 0.0), pca.components, pca.std_devs))
        if not fits:
            continue
        put(f"pca_{name}.json", _json({"schema_version": SCHEMA_VERSION, "benchmark": name,
                                       "entries": fits}), "pca")
        put(f"pca_{name}.svg", plots.loglog_scatter(
            scatter, f"{name}: log-PCA (relative)", "epochs / mean", "epoch throughput / mean",
            ellipses=ellipses), "plots_svg")

    header = ("label", "staging", "train", "eval", "extra")
    rows = [(a.label, *a.breakdown()) for a in analyses]
    put("breakdown.csv", _csv(header, rows), "tables_csv")
    put("breakdown.svg", plots.stacked_bars(
        [(a.label, dict(zip(header[1:], a.breakdown()))) for a in analyses], "relative time breakdown"),
        "plots_svg")
    atomic_write(out / "report.json", _json(bundle))
    print(f"wrote {sum(len(v) for k, v in bundle.items() if k != 'schema_version') + 1} files to {out}")
    return OK


# --- predict -------------------------------------------------------------


def _load_baseline(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    spec = get_benchmark(d["benchmark"])
    sp = d["scaling_point"]
    point = ScalingPoint(int(sp["n_units"]), int(sp["batch"]), float(sp["epochs_mean"]),
                         float(sp.get("epochs_std", 0.0)), float(sp["train_tp_per_unit"]),
                         float(sp["eval_tp_per_unit"]), float(sp["epoch_tp"]), str(sp.get("label", "")))
    return spec, point, float(d["staging_ratio"]), d.get("score_minutes")


def cmd_predict(args) -> int:
    try:
        spec, point, ratio, tts = _load_baseline(args.baseline)
        curve = EpochsCurve.read_csv(args.curve)
    except (OSError, KeyError, TypeError, ValueError, MlhpcError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV_FAIL
    try:
        pred = predict_tts(point, ratio, args.batch, curve, spec, baseline_tts_min=tts)
    except OutOfCurveRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_FAIL
    print(f"factor {pred.factor:.6f}")
    print(f"minutes {pred.minutes:.4f}")
    print(f"units {pred.target_units:g}")
    return OK


# --- characterize --------------------------------------------------------


def _tree_epoch_times(tree):
    """(benchmark, system key, system name, units, mean epoch seconds) per entry."""
    out = []
    for e in tree.entries:
        durs = [iv.duration_ms for r in e.successful_runs() for iv in pair_intervals(r, "epoch")]
        if durs:
            out.append((e.benchmark.name, e.system_key, e.system.system_name, e.n_compute_units,
                        math.fsum(durs) / len(durs) / 1000.0))
    return out


def _match(rec, epoch_rows):
    sysname = rec.system.lower()
    for bench, key, name, units, secs in epoch_rows:
        if bench == rec.benchmark and (sysname in key.lower() or sysname in name.lower()):
            return units, secs
    return None, None


def cmd_characterize(args) -> int:
    try:
        records = characterization.load_records(args.records)
    except MalformedRow as exc:
        print(f"error: {args.records}: {exc}", file=sys.stderr)
        return ENV_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV_FAIL
    epoch_rows = []
    if args.tree:
        tree, code = _load_tree(args.tree)
        if tree is None:
            return code
        epoch_rows = _tree_epoch_times(tree)

    header = ("benchmark", "system", "io_bw_gbs", "train_dataset_gb", "workers", "io_time_per_epoch_s",
              "epoch_time_s", "io_ratio", "hidden")
    rows = []
    for rec in records:
        units, secs = _match(rec, epoch_rows)
        workers = args.workers or units or rec.network_units
        if args.epoch_time_s:
            secs = args.epoch_time_s
        gb = get_benchmark(rec.benchmark).train_dataset_size_gb
        io_s = ratio = hidden = None
        if rec.io_bw_gbs and workers:
            io_s = characterization.io_time_per_epoch(gb, workers, rec.io_bw_gbs)
            if secs:
                ratio, hidden = characterization.io_hidden(io_s, secs)
        rows.append((rec.benchmark, rec.system, rec.io_bw_gbs, gb, workers, io_s, secs, ratio,
                     "" if hidden is None else str(hidden).lower()))
    atomic_write(args.out, _csv(header, rows))
    print(f"wrote {len(rows)} rows to {args.out}")
    return OK


# --- synth ---------------------------------------------------------------


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig.from_file(args.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV_FAIL
    tree, truth = generate_submission(cfg, args.root)
    print(f"wrote {len(truth.runs)} runs under {args.root}; official score {truth.official_score:.6f} min")
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlhpc", description="HPC training-benchmark submission tooling.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a submission tree for compliance")
    s.add_argument("root")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("score", help="write official scores as CSV")
    s.add_argument("root")
    s.add_argument("--out", required=True)
    s.add_argument("--force", action="store_true", help="score non-compliant trees over available successes")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("analyze", help="decompose, tabulate and plot a submission tree")
    s.add_argument("root")
    s.add_argument("--outdir", required=True)
    s.add_argument("--force", action="store_true")
    s.add_argument("--jobs", type=int, default=4, help="entries analyzed concurrently")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("predict", help="extrapolate time to solution to another batch size")
    s.add_argument("--baseline", required=True, help="entry JSON written by 'analyze'")
    s.add_argument("--curve", required=True, help="CSV with batch,epochs columns")
    s.add_argument("--batch", required=True, type=int)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("characterize", help="per-record I/O time and hiding verdicts")
    s.add_argument("--records", required=True)
    s.add_argument("--tree", help="submission tree supplying measured epoch times")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, help="override the reader count")
    s.add_argument("--epoch-time-s", type=float, help="override the epoch time")
    s.set_defaults(func=cmd_characterize)

    s = sub.add_parser("synth", help="generate a synthetic submission tree")
    s.add_argument("--config", required=True)
    s.add_argument("--root", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "warn").strip().lower()
    logging.basicConfig(level=_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedEvent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENV_FAIL


if __name__ == "__main__":
    sys.exit(main())

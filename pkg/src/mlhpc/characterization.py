"""Bandwidth measurement records and I/O-hiding estimates."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

from .errors import MalformedRow

HEADER = ("benchmark", "system", "memory_bw_gbs", "network_bw_gbs", "network_units",
          "message_size_mb", "io_bw_gbs", "memory_tool", "network_tool", "io_tool")
# optional trailing column for free-text qualifiers (e.g. precision used)
NOTES_COLUMN = "notes"
BENCHMARKS = ("cosmoflow", "deepcam")
_PHASES = ("memory", "network", "io")


@dataclass(frozen=True)
class BandwidthRecord:
    benchmark: str
    system: str
    memory_bw_gbs: Optional[float] = None
    network_bw_gbs: Optional[float] = None
    network_units: Optional[int] = None
    message_size_mb: Optional[float] = None
    io_bw_gbs: Optional[float] = None
    tools: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        for name in ("memory_bw_gbs", "network_bw_gbs", "io_bw_gbs", "message_size_mb"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.network_units is not None and self.network_units < 1:
            raise ValueError("network_units must be >= 1")


def _opt_float(cell: str, name: str, row: int):
    cell = cell.strip()
    if not cell:
        return None
    try:
        return float(cell)
    except ValueError:
        raise MalformedRow(f"{name} is not numeric: {cell!r}", row) from None


def _opt_int(cell: str, name: str, row: int):
    cell = cell.strip()
    if not cell:
        return None
    try:
        return int(cell)
    except ValueError:
        raise MalformedRow(f"{name} is not an integer: {cell!r}", row) from None


def parse_records(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow("empty file (no header)", 1) from None
    header = [h.strip() for h in header]
    has_notes = header == list(HEADER) + [NOTES_COLUMN]
    if header != list(HEADER) and not has_notes:
        raise MalformedRow(f"header must be {','.join(HEADER)}", 1)
    width = len(header)
    out = []
    for row_no, cells in enumerate(reader, 2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != width:
            raise MalformedRow(f"expected {width} cells, got {len(cells)}", row_no)
        d = dict(zip(header, cells))
        try:
            rec = BandwidthRecord(
                benchmark=d["benchmark"].strip(),
                system=d["system"].strip(),
                memory_bw_gbs=_opt_float(d["memory_bw_gbs"], "memory_bw_gbs", row_no),
                network_bw_gbs=_opt_float(d["network_bw_gbs"], "network_bw_gbs", row_no),
                network_units=_opt_int(d["network_units"], "network_units", row_no),
                message_size_mb=_opt_float(d["message_size_mb"], "message_size_mb", row_no),
                io_bw_gbs=_opt_float(d["io_bw_gbs"], "io_bw_gbs", row_no),
                tools={p: d[p + "_tool"].strip() for p in _PHASES if d[p + "_tool"].strip()},
                notes=d.get(NOTES_COLUMN, "").strip(),
            )
        except ValueError as exc:
            raise MalformedRow(str(exc), row_no) from None
        out.append(rec)
    return out


def load_records(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_records(fh.read())


def _cell(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def records_csv(records) -> str:
    records = list(records)
    with_notes = any(r.notes for r in records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(HEADER) + ([NOTES_COLUMN] if with_notes else []))
    for r in records:
        row = [r.benchmark, r.system, _cell(r.memory_bw_gbs), _cell(r.network_bw_gbs), _cell(r.network_units),
               _cell(r.message_size_mb), _cell(r.io_bw_gbs)]
        row += [r.tools.get(p, "") for p in _PHASES]
        if with_notes:
            row.append(r.notes)
        w.writerow(row)
    return buf.getvalue()


def io_time_per_epoch(train_dataset_gb: float, workers: int, io_bw_gbs: float) -> float:
    """Seconds each worker spends reading its share of the training set once."""
    if not (train_dataset_gb > 0 and workers > 0 and io_bw_gbs > 0):
        raise ValueError("inputs must be positive")
    return train_dataset_gb / workers / io_bw_gbs


def io_hidden(io_time_s: float, epoch_time_s: float) -> tuple:
    """(ratio, hidden): I/O can overlap compute only when ratio < 1."""
    if not epoch_time_s > 0:
        raise ValueError("epoch time must be positive")
    ratio = io_time_s / epoch_time_s
    return ratio, ratio < 1.0

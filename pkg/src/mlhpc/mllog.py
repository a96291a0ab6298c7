"""Reading and writing the ``:::MLLOG`` structured log format.

One event per line::

    :::MLLOG {"key": "epoch_start", "value": null, "time_ms": 1000,
              "event_type": "INTERVAL_START", "metadata": {"epoch_num": 1}}

(on a single line).  Lines without the sentinel at column 0 are ignored so that
framework chatter interleaved with the log does not break parsing.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    InvalidRunLog,
    MalformedEvent,
    MissingRunStart,
    NonMonotonicTime,
    UnbalancedIntervals,
)

SENTINEL = ":::MLLOG "

_KEY_RE = re.compile(r"^[a-z0-9_]+$")
_FIELDS = ("key", "value", "time_ms", "event_type", "metadata")


class EventType(str, enum.Enum):
    INTERVAL_START = "INTERVAL_START"
    INTERVAL_END = "INTERVAL_END"
    POINT_IN_TIME = "POINT_IN_TIME"


def _is_scalar(v) -> bool:
    if v is None or isinstance(v, (bool, str, int)):
        return True
    return isinstance(v, float) and math.isfinite(v)


@dataclass(frozen=True)
class LogEvent:
    key: str
    value: object
    time_ms: int
    event_type: EventType
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.key, str) or not _KEY_RE.match(self.key):
            raise ValueError(f"invalid event key {self.key!r}")
        if isinstance(self.time_ms, bool) or not isinstance(self.time_ms, int) or self.time_ms < 0:
            raise ValueError(f"time_ms must be a non-negative integer, got {self.time_ms!r}")
        if not isinstance(self.event_type, EventType):
            object.__setattr__(self, "event_type", EventType(self.event_type))
        if not _is_scalar(self.value):
            raise ValueError(f"value must be a scalar, got {type(self.value).__name__}")
        for k, v in self.metadata.items():
            if not isinstance(k, str) or not _is_scalar(v):
                raise ValueError(f"metadata entry {k!r} is not a scalar")

    @property
    def stem(self) -> str:
        """Interval name: ``epoch`` for ``epoch_start``/``epoch_stop``."""
        for suffix in ("_start", "_stop"):
            if self.key.endswith(suffix) and len(self.key) > len(suffix):
                return self.key[: -len(suffix)]
        return self.key


def _check_payload(obj) -> LogEvent:
    if not isinstance(obj, dict):
        raise MalformedEvent("payload is not a JSON object")
    missing = [f for f in _FIELDS if f not in obj and f != "metadata"]
    if missing:
        raise MalformedEvent(f"missing field(s): {', '.join(missing)}")
    key = obj["key"]
    if not isinstance(key, str) or not _KEY_RE.match(key):
        raise MalformedEvent(f"invalid key {key!r}")
    t = obj["time_ms"]
    if isinstance(t, bool) or not isinstance(t, int):
        raise MalformedEvent(f"time_ms must be an integer, got {t!r}")
    if t < 0:
        raise MalformedEvent(f"time_ms must be non-negative, got {t}")
    try:
        etype = EventType(obj["event_type"])
    except (ValueError, TypeError):
        raise MalformedEvent(f"unrecognized event_type {obj['event_type']!r}") from None
    if not _is_scalar(obj["value"]):
        raise MalformedEvent("value is not a scalar")
    meta = obj.get("metadata", {})
    if not isinstance(meta, dict):
        raise MalformedEvent("metadata is not an object")
    for k, v in meta.items():
        if not _is_scalar(v):
            raise MalformedEvent(f"metadata field {k!r} is not a scalar")
    return LogEvent(key, obj["value"], t, etype, dict(meta))


def _reject_constant(name):
    raise ValueError(f"non-finite number {name}")


def parse_log_line(line: str) -> Optional[LogEvent]:
    """Parse one line. Returns None for lines that are not log lines."""
    if not line.startswith(SENTINEL):
        return None
    payload = line[len(SENTINEL):].rstrip("\r\n")
    try:
        obj = json.loads(payload, parse_constant=_reject_constant)
    except ValueError as exc:
        raise MalformedEvent(f"payload is not valid JSON ({exc})") from None
    return _check_payload(obj)


def emit_log_line(event: LogEvent) -> str:
    payload = {
        "key": event.key,
        "value": event.value,
        "time_ms": event.time_ms,
        "event_type": event.event_type.value,
        "metadata": event.metadata,
    }
    return SENTINEL + json.dumps(payload, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@dataclass(frozen=True)
class RunLog:
    events: tuple
    source: str = "<memory>"
    # 1-based source line of each event; empty for in-memory logs
    lines: tuple = ()

    def line_of(self, index: int) -> Optional[int]:
        return self.lines[index] if self.lines else None

    def find(self, key: str) -> list:
        return [e for e in self.events if e.key == key]

    def first(self, key: str) -> Optional[LogEvent]:
        for e in self.events:
            if e.key == key:
                return e
        return None

    def value_of(self, key: str, default=None):
        e = self.first(key)
        return default if e is None else e.value

    @property
    def run_start(self) -> LogEvent:
        return self.first("run_start")

    @property
    def run_stop(self) -> Optional[LogEvent]:
        return self.first("run_stop")

    @property
    def status(self) -> Optional[str]:
        stop = self.run_stop
        return None if stop is None else stop.metadata.get("status")


def build_run_log(events: Iterable[LogEvent], source: str = "<memory>", lines=()) -> RunLog:
    """Validate ordering and run_start/run_stop invariants, then freeze."""
    events = tuple(events)
    lines = tuple(lines)

    def where(i):
        ln = lines[i] if lines else None
        return f"{source}:{ln}" if ln is not None else f"{source} (event {i})"

    for i in range(1, len(events)):
        if events[i].time_ms < events[i - 1].time_ms:
            raise NonMonotonicTime(
                f"{where(i)}: time_ms {events[i].time_ms} precedes previous {events[i - 1].time_ms}"
            )
    starts = [i for i, e in enumerate(events) if e.key == "run_start"]
    if not starts:
        raise MissingRunStart(f"{source}: no run_start event")
    if len(starts) > 1:
        raise InvalidRunLog(f"{where(starts[1])}: duplicate run_start")
    stops = [i for i, e in enumerate(events) if e.key == "run_stop"]
    if len(stops) > 1:
        raise InvalidRunLog(f"{where(stops[1])}: duplicate run_stop")
    t0 = events[starts[0]].time_ms
    for i, e in enumerate(events):
        if e.time_ms < t0:
            raise InvalidRunLog(f"{where(i)}: event {e.key} at {e.time_ms} precedes run_start at {t0}")
    return RunLog(events, source, lines)


def parse_run_log(lines: Iterable[str], source: str = "<stream>") -> RunLog:
    events = []
    numbers = []
    for n, line in enumerate(lines, 1):
        try:
            ev = parse_log_line(line)
        except MalformedEvent as exc:
            raise exc.at(source, n) from None
        if ev is not None:
            events.append(ev)
            numbers.append(n)
    return build_run_log(events, source, numbers)


def read_run_log(path) -> RunLog:
    with open(path, encoding="utf-8") as fh:
        return parse_run_log(fh, str(path))


def write_run_log(run_or_events, path) -> None:
    events = run_or_events.events if isinstance(run_or_events, RunLog) else run_or_events
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(emit_log_line(e) + "\n")


@dataclass(frozen=True)
class Interval:
    key: str
    start_ms: int
    end_ms: int
    metadata: dict = field(default_factory=dict)

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


def _matches(event: LogEvent, key: str) -> bool:
    return event.key == key or event.stem == key


def pair_intervals(run: RunLog, key: str) -> list:
    """Pair the i-th INTERVAL_START of ``key`` with its i-th INTERVAL_END.

    ``key`` is the interval name; both ``epoch_start``/``epoch_stop`` and a bare
    ``epoch`` key with START/END event types are recognized.
    """
    starts = [e for e in run.events if e.event_type is EventType.INTERVAL_START and _matches(e, key)]
    ends = [e for e in run.events if e.event_type is EventType.INTERVAL_END and _matches(e, key)]
    if len(starts) != len(ends):
        raise UnbalancedIntervals(
            f"{run.source}: {len(starts)} start(s) but {len(ends)} end(s) for interval {key!r}"
        )
    out = []
    for s, e in zip(starts, ends):
        if e.time_ms < s.time_ms:
            raise UnbalancedIntervals(
                f"{run.source}: {key!r} interval ends at {e.time_ms} before it starts at {s.time_ms}"
            )
        out.append(Interval(key, s.time_ms, e.time_ms, {**s.metadata, **e.metadata}))
    out.sort(key=lambda iv: iv.start_ms)
    return out

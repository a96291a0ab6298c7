import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlhpc.errors import InvalidRunLog, MalformedEvent, MissingRunStart, NonMonotonicTime, UnbalancedIntervals
from mlhpc.mllog import (SENTINEL, EventType, LogEvent, build_run_log, emit_log_line, pair_intervals,
                         parse_log_line, parse_run_log, read_run_log, write_run_log)
from mlhpc.synth import generate_run, run_text

S, E, P = EventType.INTERVAL_START, EventType.INTERVAL_END, EventType.POINT_IN_TIME


def ev(key, t, etype=P, value=None, **meta):
    return LogEvent(key, value, t, etype, meta)


def test_parse_minimal_line():
    line = ':::MLLOG {"key":"run_start","value":null,"time_ms":1000,"event_type":"INTERVAL_START","metadata":{}}'
    e = parse_log_line(line)
    assert (e.key, e.event_type, e.time_ms, e.value, e.metadata) == ("run_start", S, 1000, None, {})


@pytest.mark.parametrize("line", [
    "some framework chatter",
    "",
    " :::MLLOG {}",
    "rank0: :::MLLOG {\"key\":\"x\"}",
    ":::MLLOG{}",
])
def test_non_sentinel_lines_skipped(line):
    assert parse_log_line(line) is None


def test_missing_fields_rejected():
    with pytest.raises(MalformedEvent):
        parse_log_line(':::MLLOG {"key":"run_start"}')


def test_metadata_optional_and_extra_fields_ignored():
    e = parse_log_line(':::MLLOG {"key":"a","value":1,"time_ms":0,"event_type":"POINT_IN_TIME","rank":3}')
    assert e.metadata == {}


def test_emit_eval_accuracy_round_trips():
    e = ev("eval_accuracy", 5000, value=0.121, epoch_num=42)
    line = emit_log_line(e)
    assert line.startswith(SENTINEL)
    assert "\n" not in line
    assert parse_log_line(line) == e


def test_emit_empty_metadata():
    assert '"metadata":{}' in emit_log_line(ev("run_start", 0, S))


def test_emit_field_order_is_fixed():
    line = emit_log_line(ev("k", 1, value="v", a=1))
    assert line == ':::MLLOG {"key":"k","value":"v","time_ms":1,"event_type":"POINT_IN_TIME","metadata":{"a":1}}'


def test_unknown_keys_and_metadata_preserved():
    line = ':::MLLOG {"key":"future_key_v2","value":"x","time_ms":3,"event_type":"POINT_IN_TIME",' \
           '"metadata":{"brand_new":true}}'
    e = parse_log_line(line)
    assert e.key == "future_key_v2" and e.metadata == {"brand_new": True}
    assert emit_log_line(e) == line


@pytest.mark.parametrize("kwargs", [
    dict(key="", value=None, time_ms=0, event_type=P),
    dict(key="Bad", value=None, time_ms=0, event_type=P),
    dict(key="x", value=None, time_ms=-1, event_type=P),
    dict(key="x", value=None, time_ms=1.0, event_type=P),
    dict(key="x", value=[1], time_ms=0, event_type=P),
    dict(key="x", value=float("nan"), time_ms=0, event_type=P),
    dict(key="x", value=None, time_ms=0, event_type="NOPE"),
])
def test_event_invariants(kwargs):
    with pytest.raises(ValueError):
        LogEvent(**kwargs)


def test_stem():
    assert ev("epoch_start", 0, S).stem == "epoch"
    assert ev("eval_stop", 0, E).stem == "eval"
    assert ev("_start", 0, S).stem == "_start"
    assert ev("epoch", 0, S).stem == "epoch"


scalars = st.one_of(
    st.none(), st.booleans(), st.integers(-2**70, 2**70),
    st.floats(allow_nan=False, allow_infinity=False), st.text(max_size=20),
)
events = st.builds(
    LogEvent,
    key=st.from_regex(r"[a-z0-9_]{1,20}", fullmatch=True),
    value=scalars,
    time_ms=st.integers(0, 2**62),
    event_type=st.sampled_from(list(EventType)),
    metadata=st.dictionaries(st.text(max_size=8), scalars, max_size=4),
)


@settings(max_examples=500)
@given(events)
def test_round_trip_property(e):
    back = parse_log_line(emit_log_line(e))
    assert back == e
    assert type(back.value) is type(e.value)


def _stream():
    return [
        "chatter",
        emit_log_line(ev("run_start", 0, S)),
        emit_log_line(ev("epoch_start", 0, S, epoch_num=1)),
        emit_log_line(ev("epoch_stop", 10, E, epoch_num=1)),
        "more chatter",
        emit_log_line(ev("epoch_start", 10, S, epoch_num=2)),
        emit_log_line(ev("epoch_stop", 25, E, epoch_num=2)),
        emit_log_line(ev("run_stop", 25, E, status="success")),
    ]


def test_parse_run_log_collects_six_events_with_line_numbers():
    run = parse_run_log(_stream(), "r.txt")
    assert len(run.events) == 6
    assert run.lines == (2, 3, 4, 6, 7, 8)
    assert run.status == "success"
    assert run.run_start.time_ms == 0 and run.run_stop.time_ms == 25


def test_pair_intervals():
    run = parse_run_log(_stream())
    assert [(iv.start_ms, iv.end_ms) for iv in pair_intervals(run, "epoch")] == [(0, 10), (10, 25)]
    assert pair_intervals(run, "staging") == []


def test_pair_intervals_bare_key():
    run = build_run_log([ev("run_start", 0, S), ev("epoch", 1, S), ev("epoch", 4, E)])
    assert [(iv.start_ms, iv.end_ms) for iv in pair_intervals(run, "epoch")] == [(1, 4)]


def test_unbalanced_interval():
    run = build_run_log([ev("run_start", 0, S), ev("epoch_start", 1, S)])
    with pytest.raises(UnbalancedIntervals):
        pair_intervals(run, "epoch")


def test_missing_run_start():
    with pytest.raises(MissingRunStart):
        parse_run_log(_stream()[2:])


def test_non_monotonic_reports_line():
    lines = _stream()
    lines[3], lines[2] = lines[2], lines[3]
    with pytest.raises(NonMonotonicTime, match=r"r\.txt:4"):
        parse_run_log(lines, "r.txt")


def test_equal_timestamps_allowed():
    build_run_log([ev("run_start", 5, S), ev("a", 5), ev("b", 5)])


def test_duplicate_run_start_and_stop():
    with pytest.raises(InvalidRunLog):
        build_run_log([ev("run_start", 0, S), ev("run_start", 1, S)])
    with pytest.raises(InvalidRunLog):
        build_run_log([ev("run_start", 0, S), ev("run_stop", 1, E), ev("run_stop", 2, E)])


def test_event_before_run_start():
    with pytest.raises(InvalidRunLog):
        build_run_log([ev("a", 0), ev("run_start", 1, S)])


def test_malformed_line_number_in_file(tmp_path):
    p = tmp_path / "result_0.txt"
    lines = _stream()
    lines.insert(4, ':::MLLOG {"key":"x","value":null,"time_ms":"soon","event_type":"POINT_IN_TIME"}')
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedEvent) as info:
        read_run_log(p)
    assert info.value.line == 5
    assert str(p) in str(info.value)


def test_synth_stream_reparses_identically(make_config, tmp_path):
    cfg = make_config(seed=7)
    run, _ = generate_run(cfg, 0)
    p = tmp_path / "r.txt"
    p.write_text(run_text(run))
    assert read_run_log(p).events == run.events
    write_run_log(run, tmp_path / "w.txt")
    assert (tmp_path / "w.txt").read_text() == p.read_text()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 20))
def test_epoch_durations_within_run(seed, idx):
    from conftest import small_config
    run, _ = generate_run(small_config(seed=seed), idx)
    epochs = pair_intervals(run, "epoch")
    starts = [e for e in run.events if e.key == "epoch_start"]
    assert len(epochs) == len(starts)
    assert sum(iv.duration_ms for iv in epochs) <= run.run_stop.time_ms - run.run_start.time_ms

from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlhpc.characterization import (HEADER, BandwidthRecord, io_hidden, io_time_per_epoch, load_records,
                                    parse_records, records_csv)
from mlhpc.errors import MalformedRow

FIXTURE = Path(__file__).parent / "fixtures" / "bandwidth.csv"


def test_load_fixture():
    recs = load_records(FIXTURE)
    assert len(recs) == 7
    (abci,) = [r for r in recs if r.benchmark == "deepcam" and r.system == "ABCI"]
    assert (abci.io_bw_gbs, abci.network_bw_gbs, abci.memory_bw_gbs) == (2.36, 3.73, 153.1)
    assert abci.tools == {"memory": "Nvprof", "network": "Timer-based", "io": "Darshan"}
    assert "mixed precision" in recs[0].notes


def test_empty_optional_cells():
    recs = load_records(FIXTURE)
    piz = [r for r in recs if r.system == "Piz Daint"][0]
    assert piz.memory_bw_gbs is None
    summit = [r for r in recs if r.benchmark == "deepcam" and r.system == "Summit"][0]
    assert summit.io_bw_gbs is None and "io" not in summit.tools


def test_non_numeric_cell_row_number():
    text = ",".join(HEADER) + "\ncosmoflow,A,1,1,1,1,1,,,\ndeepcam,B,fast,1,1,1,1,,,\n"
    with pytest.raises(MalformedRow) as info:
        parse_records(text)
    assert info.value.row == 3


@pytest.mark.parametrize("text", [
    "",
    "benchmark,system\n",
    ",".join(HEADER) + "\ncosmoflow,A,1\n",
    ",".join(HEADER) + "\nresnet,A,1,1,1,1,1,,,\n",
    ",".join(HEADER) + "\ncosmoflow,A,-1,1,1,1,1,,,\n",
    ",".join(HEADER) + "\ncosmoflow,A,1,1,1.5,1,1,,,\n",
])
def test_malformed_inputs(text):
    with pytest.raises(MalformedRow):
        parse_records(text)


def test_round_trip_fixture():
    recs = load_records(FIXTURE)
    assert parse_records(records_csv(recs)) == recs


pos = st.one_of(st.none(), st.floats(1e-6, 1e6))
records = st.builds(
    BandwidthRecord,
    benchmark=st.sampled_from(["cosmoflow", "deepcam"]),
    system=st.text("abcdefXYZ -_", min_size=1, max_size=10).map(str.strip).filter(bool),
    memory_bw_gbs=pos, network_bw_gbs=pos, io_bw_gbs=pos, message_size_mb=pos,
    network_units=st.one_of(st.none(), st.integers(1, 10**6)),
    tools=st.fixed_dictionaries({}, optional={"memory": st.sampled_from(["Nvprof", "Perf"]),
                                              "io": st.sampled_from(["Darshan"])}),
    notes=st.sampled_from(["", "mixed precision", "a, b"]),
)


@given(st.lists(records, max_size=8))
def test_round_trip_property(recs):
    assert parse_records(records_csv(recs)) == recs


def test_io_time_examples():
    assert io_time_per_epoch(7700, 256, 2.36) == pytest.approx(12.745, abs=1e-3)
    assert io_time_per_epoch(1, 1, 1) == 1.0
    assert io_time_per_epoch(100, 8, 2) == 2 * io_time_per_epoch(100, 16, 2)
    with pytest.raises(ValueError):
        io_time_per_epoch(1, 0, 1)


@given(st.floats(1e-3, 1e5), st.integers(1, 4096), st.floats(1e-3, 100), st.floats(1e-3, 1e3))
def test_io_time_homogeneous(gb, workers, bw, k):
    assert io_time_per_epoch(k * gb, workers, bw) == pytest.approx(k * io_time_per_epoch(gb, workers, bw))


def test_io_hidden_examples():
    ratio, hidden = io_hidden(12.745, 99.6)
    assert ratio == pytest.approx(0.128, abs=0.001) and hidden
    assert io_hidden(5.0, 5.0) == (1.0, False)
    assert io_hidden(0.0, 3.0) == (0.0, True)
    with pytest.raises(ValueError):
        io_hidden(1.0, 0.0)

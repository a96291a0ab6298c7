import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_config, synth_runs, write_tree
from mlhpc.errors import EmptyEntry, InconsistentEntry, MissingSystemFile
from mlhpc.mllog import RunLog
from mlhpc.submission import (COSMOFLOW, DEEPCAM, BenchmarkSpec, SystemDescription, builtin_benchmarks,
                              get_benchmark, load_submission, load_system)
from mlhpc.synth import generate_submission


def test_builtin_values():
    specs = {b.name: b for b in builtin_benchmarks()}
    assert specs["cosmoflow"].required_runs == 10
    assert specs["deepcam"].required_runs == 5
    assert specs["cosmoflow"].quality_target == 0.124
    assert specs["deepcam"].quality_target == 0.82
    assert specs["deepcam"].train_dataset_size_gb == 7700
    assert specs["cosmoflow"].n_train_samples == 262144
    assert specs["deepcam"].n_train_samples == 121266


def test_meets_target_is_strict():
    assert COSMOFLOW.meets_target(0.1239)
    assert not COSMOFLOW.meets_target(0.124)
    assert DEEPCAM.meets_target(0.8201)
    assert not DEEPCAM.meets_target(0.82)


def test_get_benchmark_unknown():
    with pytest.raises(KeyError):
        get_benchmark("resnet")


def test_spec_invariants():
    with pytest.raises(ValueError):
        BenchmarkSpec("x", "mae", "minimize", 0.1, 2, 10, 10, 1.0, 1.0)


def test_system_description_preserves_unknown_fields(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"system_name": "A", "n_nodes": 3, "interconnect": "IB"}))
    s = load_system(p)
    assert s.extra == {"interconnect": "IB"}
    assert s.to_dict()["interconnect"] == "IB"
    with pytest.raises(ValueError):
        SystemDescription("A", 0)


def test_fixture_tree_one_entry_ten_runs(tmp_path):
    write_tree(tmp_path, synth_runs(small_config()))
    tree = load_submission(tmp_path)
    assert len(tree.entries) == 1
    e = tree.entries[0]
    assert len(e.runs) == 10
    assert (e.org, e.system_key, e.benchmark.name, e.division) == ("org", "sys", "cosmoflow", "closed")
    assert e.runs[3].source.endswith("result_3.txt")


def test_result_ordering_is_numeric(tmp_path):
    runs = synth_runs(small_config(), 10)
    res = write_tree(tmp_path, runs)
    tree = load_submission(tmp_path)
    names = [r.source.rsplit("/", 1)[1] for r in tree.entries[0].runs]
    assert names == [f"result_{i}.txt" for i in range(10)]
    assert res.exists()


def test_missing_system_file(tmp_path):
    write_tree(tmp_path, synth_runs(small_config(), 3), system="x", system_json=False)
    with pytest.raises(MissingSystemFile, match="x.json"):
        load_submission(tmp_path)


def test_empty_entry(tmp_path):
    (tmp_path / "o" / "systems").mkdir(parents=True)
    (tmp_path / "o" / "systems" / "s.json").write_text('{"system_name": "s", "n_nodes": 1}')
    (tmp_path / "o" / "results" / "s" / "cosmoflow").mkdir(parents=True)
    with pytest.raises(EmptyEntry):
        load_submission(tmp_path)


def test_unknown_files_are_noted(tmp_path):
    res = write_tree(tmp_path, synth_runs(small_config()))
    (res / "README.md").write_text("notes")
    tree = load_submission(tmp_path)
    assert [n[0] for n in tree.notes] == ["UNKNOWN_FILE"]
    assert len(tree.entries[0].runs) == 10


def test_single_org_root(tmp_path):
    write_tree(tmp_path, synth_runs(small_config()))
    tree = load_submission(tmp_path / "org")
    assert tree.entries[0].org == "org"


def test_inconsistent_batch_rejected(tmp_path):
    a = synth_runs(small_config(batch=8), 2)
    b = synth_runs(small_config(batch=16), 1)
    write_tree(tmp_path, a + b)
    with pytest.raises(InconsistentEntry, match="global_batch_size"):
        load_submission(tmp_path)


def test_division_from_logs_wins_over_suffix(tmp_path):
    write_tree(tmp_path, synth_runs(small_config(division="closed")), system="sys_open")
    tree = load_submission(tmp_path)
    assert tree.entries[0].division == "closed"
    assert [n[0] for n in tree.notes] == ["DIVISION_MISMATCH"]


def test_division_from_suffix_when_logs_silent(tmp_path):
    runs = []
    for r in synth_runs(small_config(), 10):
        runs.append(RunLog(tuple(e for e in r.events if e.key != "submission_division"), r.source))
    write_tree(tmp_path, runs, system="sys_open")
    assert load_submission(tmp_path).entries[0].division == "open"


def test_synth_tree_matches_config(tmp_path):
    cfg = small_config(seed=11, n_units=96, batch=192, benchmark="deepcam", division="open", org="acme",
                       system="big")
    generate_submission(cfg, tmp_path)
    tree = load_submission(tmp_path)
    (e,) = tree.entries
    assert (e.org, e.system_key, e.benchmark.name, e.division) == ("acme", "big", "deepcam", "open")
    assert (e.n_compute_units, e.global_batch_size, len(e.runs)) == (96, 192, 5)
    assert tree.systems[("acme", "big")].n_nodes * tree.systems[("acme", "big")].accelerators_per_node >= 96


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["cosmoflow", "deepcam"]), st.integers(1, 64)),
                min_size=1, max_size=3, unique_by=lambda t: t[0]))
def test_structure_recovered(entries):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        for bench, units in entries:
            generate_submission(small_config(benchmark=bench, n_units=units, epochs_to_converge_mean=2.0), d)
        tree = load_submission(Path(d))
        got = {(e.benchmark.name, len(e.runs), e.n_compute_units) for e in tree.entries}
        want = {(b, get_benchmark(b).required_runs, u) for b, u in entries}
        assert got == want
        for e in tree.entries:
            for r in e.runs:
                assert r.value_of("num_compute_units") == e.n_compute_units
                assert r.value_of("global_batch_size") == e.global_batch_size


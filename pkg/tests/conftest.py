import json
from collections import OrderedDict

import pytest

from mlhpc.perfmodel import ScalingPoint
from mlhpc.submission import COSMOFLOW, DEEPCAM
from mlhpc.synth import SynthConfig

import published

_CRITERIA = OrderedDict()


def point(spec, row, label=""):
    batch, epochs, epochs_std, units, tr, ev, _, _ = row
    return ScalingPoint.from_throughputs(spec, units, batch, epochs, tr, ev, epochs_std=epochs_std, label=label)


@pytest.fixture
def cosmo_points():
    return {k: point(COSMOFLOW, v, k) for k, v in published.COSMOFLOW.items()}


@pytest.fixture
def deepcam_points():
    return {k: point(DEEPCAM, v, k) for k, v in published.DEEPCAM.items()}


def small_config(**kw):
    base = dict(n_units=8, batch=8, epoch_time_s=3.0, eval_time_s=1.0, epochs_to_converge_mean=4.0,
                epochs_to_converge_cv=0.2, staging_min_mean=0.5, staging_min_std=0.05, throughput_cv=0.05,
                seed=1)
    base.update(kw)
    return SynthConfig(**base)


@pytest.fixture
def make_config():
    return small_config


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None or not (report.when == "call" or report.failed):
        return
    n, failed = _CRITERIA.get(marker, (0, []))
    if report.when == "call":
        n += 1
    if report.failed:
        failed = failed + [report.nodeid.split("::", 1)[-1]]
    _CRITERIA[marker] = (n, failed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (n, failed) in sorted(_CRITERIA.items()):
        status = "FAIL" if failed else "PASS"
        line = f"{status}  criterion {num:>2}: {name} ({n - len(failed)}/{n} checks)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        terminalreporter.write_line(line)


def write_tree(root, runs, org="org", system="sys", bench="cosmoflow", system_json=None):
    """Write ``runs`` (RunLog or event lists) as a one-entry submission tree."""
    from mlhpc.mllog import write_run_log

    sys_dir = root / org / "systems"
    res_dir = root / org / "results" / system / bench
    sys_dir.mkdir(parents=True, exist_ok=True)
    res_dir.mkdir(parents=True, exist_ok=True)
    if system_json is not False:
        data = system_json or {"system_name": system, "n_nodes": 2, "accelerators_per_node": 4}
        (sys_dir / f"{system}.json").write_text(json.dumps(data))
    for i, run in enumerate(runs):
        write_run_log(run, res_dir / f"result_{i}.txt")
    return res_dir


def synth_runs(cfg, n=None):
    from mlhpc.synth import generate_run

    return [generate_run(cfg, i)[0] for i in range(n if n is not None else cfg.n_runs)]

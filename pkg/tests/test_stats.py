import math
import random
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_config
from mlhpc.errors import EmptyInput, NonPositiveValue
from mlhpc.stats import log_pca, mean_std, sym2_eig
from mlhpc.synth import generate_run


def test_mean_std_examples(caplog):
    m, s = mean_std([2, 4])
    assert m == 3 and s == pytest.approx(math.sqrt(2))
    assert mean_std([7.5, 7.5, 7.5]) == (7.5, 0.0)
    assert mean_std([4.0]) == (4.0, 0.0)
    assert "single value" in caplog.text
    with pytest.raises(EmptyInput):
        mean_std([])


def test_mean_std_synth_staging_seed21():
    cfg = small_config(seed=21, staging_min_mean=2.2, staging_min_std=0.3)
    xs = [generate_run(cfg, i)[1].staging_ms / 60000 for i in range(10)]
    m, s = mean_std(xs)
    assert m == pytest.approx(statistics.fmean(xs), rel=1e-12)
    assert s == pytest.approx(statistics.stdev(xs), rel=1e-12)


def test_pca_epochs_only():
    res = log_pca([(e, 0.05) for e in (40, 50, 60, 80)])
    assert res.components[0] == (1.0, 0.0)
    assert res.std_devs[1] == 0.0
    assert res.log_base == 10 and res.cov_divisor == "n-1"


def test_pca_diagonal_line():
    res = log_pca([(10 ** t, 10 ** t) for t in (0.1, 0.5, 1.2, 2.0)])
    x, y = res.components[0]
    assert x == pytest.approx(math.sqrt(2) / 2) and y == pytest.approx(math.sqrt(2) / 2)
    assert res.std_devs[1] == pytest.approx(0.0, abs=1e-12)


def test_pca_synth_cloud_horizontal():
    rng = np.random.Generator(np.random.PCG64(3))
    epochs = rng.lognormal(math.log(100), 0.111, size=200)
    tp = rng.lognormal(math.log(0.05), 0.01, size=200)
    res = log_pca(list(zip(epochs, tp)))
    assert abs(res.components[0][0]) > 0.99


def test_pca_errors():
    with pytest.raises(EmptyInput):
        log_pca([(1, 1)])
    with pytest.raises(NonPositiveValue):
        log_pca([(1, 1), (0, 2)])


def test_pca_to_dict():
    d = log_pca([(1, 2), (3, 5), (4, 4)]).to_dict()
    assert set(d) == {"mean", "components", "std_devs", "log_base", "cov_divisor"}


def test_sym2_eig_degenerate_and_sign():
    assert sym2_eig(2.0, 0.0, 2.0) == ((2.0, 2.0), ((1.0, 0.0), (-0.0, 1.0)))
    (l1, l2), (v1, v2) = sym2_eig(1.0, 0.0, 3.0)
    assert (l1, l2) == (3.0, 1.0) and v1 == (0.0, 1.0)


clouds = st.lists(st.tuples(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6)), min_size=2, max_size=30)


@settings(max_examples=300)
@given(clouds)
def test_pca_invariants(pts):
    res = log_pca(pts)
    (x1, y1), (x2, y2) = res.components
    assert x1 * x1 + y1 * y1 == pytest.approx(1.0, abs=1e-9)
    assert x2 * x2 + y2 * y2 == pytest.approx(1.0, abs=1e-9)
    assert abs(x1 * x2 + y1 * y2) <= 1e-9
    assert res.std_devs[0] >= res.std_devs[1] >= 0
    cov = np.cov(np.log10(np.array(pts)).T, ddof=1)
    trace = cov[0, 0] + cov[1, 1]
    assert res.std_devs[0] ** 2 + res.std_devs[1] ** 2 == pytest.approx(trace, rel=1e-9, abs=1e-15)


@settings(max_examples=200)
@given(clouds, st.randoms(), st.floats(1e-3, 1e3))
def test_pca_permutation_and_scale(pts, rnd, k):
    base = log_pca(pts)
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    other = log_pca(shuffled)
    # compare variances: sqrt inflates rounding noise on a zero eigenvalue
    var = [s * s for s in base.std_devs]
    assert other.mean == pytest.approx(base.mean, abs=1e-9)
    assert [s * s for s in other.std_devs] == pytest.approx(var, abs=1e-9)
    scaled = log_pca([(e * k, t) for e, t in pts])
    assert [s * s for s in scaled.std_devs] == pytest.approx(var, abs=1e-9)
    assert scaled.mean[0] == pytest.approx(base.mean[0] + math.log10(k), abs=1e-9)
    if base.std_devs[0] - base.std_devs[1] > 1e-3:
        for a, b in zip(scaled.components[0], base.components[0]):
            assert a == pytest.approx(b, abs=1e-6)


def test_mean_std_random_oracle():
    rng = random.Random(4)
    for _ in range(200):
        xs = [rng.uniform(-1e3, 1e3) for _ in range(rng.randint(2, 50))]
        m, s = mean_std(xs)
        assert m == pytest.approx(statistics.fmean(xs), rel=1e-12, abs=1e-12)
        assert s == pytest.approx(statistics.stdev(xs), rel=1e-9)

"""Descriptive statistics and a closed-form two-dimensional log-PCA."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import EmptyInput, NonPositiveValue

log = logging.getLogger(__name__)

LOG_BASE = 10
COV_DIVISOR = "n-1"


def mean_std(xs) -> tuple:
    """Arithmetic mean and sample standard deviation (n-1 divisor)."""
    xs = [float(x) for x in xs]
    n = len(xs)
    if n == 0:
        raise EmptyInput("mean_std of an empty sequence")
    mean = math.fsum(xs) / n
    if n == 1:
        log.warning("standard deviation of a single value reported as 0")
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class LogPcaResult:
    mean: tuple
    components: tuple
    std_devs: tuple
    log_base: int = LOG_BASE
    cov_divisor: str = COV_DIVISOR

    def to_dict(self) -> dict:
        return {
            "mean": list(self.mean),
            "components": [list(c) for c in self.components],
            "std_devs": list(self.std_devs),
            "log_base": self.log_base,
            "cov_divisor": self.cov_divisor,
        }


def sym2_eig(a: float, b: float, c: float):
    """Eigen-decomposition of [[a, b], [b, c]], largest eigenvalue first.

    Returns ((l1, l2), (v1, v2)) with v1 sign-normalized to a non-negative
    x-coordinate and v2 = v1 rotated by +90 degrees.
    """
    half_tr = 0.5 * (a + c)
    r = math.hypot(0.5 * (a - c), b)
    l1, l2 = half_tr + r, half_tr - r
    if r == 0.0:
        v1 = (1.0, 0.0)
    else:
        # pick the better conditioned of the two equivalent null-space rows
        p = (l1 - c, b)
        q = (b, l1 - a)
        x, y = p if math.hypot(*p) >= math.hypot(*q) else q
        nrm = math.hypot(x, y)
        x, y = x / nrm, y / nrm
        if x < 0 or (x == 0 and y < 0):
            x, y = -x, -y
        v1 = (x, y)
    v2 = (-v1[1], v1[0])
    return (l1, l2), (v1, v2)


def log_pca(points) -> LogPcaResult:
    """PCA of (epochs, epoch throughput) pairs in log10 space."""
    pts = [(float(e), float(t)) for e, t in points]
    if len(pts) < 2:
        raise EmptyInput("log_pca needs at least two points")
    for e, t in pts:
        if not (e > 0 and t > 0):
            raise NonPositiveValue(f"log_pca needs positive values, got ({e}, {t})")
    xs = [math.log10(e) for e, _ in pts]
    ys = [math.log10(t) for _, t in pts]
    n = len(pts)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx) / (n - 1)
    syy = math.fsum(d * d for d in dy) / (n - 1)
    sxy = math.fsum(u * v for u, v in zip(dx, dy)) / (n - 1)
    (l1, l2), (v1, v2) = sym2_eig(sxx, sxy, syy)
    return LogPcaResult((mx, my), (v1, v2), (math.sqrt(max(l1, 0.0)), math.sqrt(max(l2, 0.0))))

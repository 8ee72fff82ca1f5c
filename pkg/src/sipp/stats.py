"""Aggregate statistics for metric columns: mean, 95% CI, one-sample t-test
against 1.0, and Pearson correlation.

The Student-t tail probabilities come from a local regularized incomplete
beta function (continued fraction, 1e-10 accuracy target) so the package
needs no statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_MAX_ITER = 300


def _betainc_cf(a: float, b: float, x: float) -> float:
    # modified Lentz continued fraction for I_x(a, b)
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DataError("incomplete beta did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise DataError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betainc_cf(a, b, x) / a
    return 1.0 - front * _betainc_cf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """One-sided survival P(T > t) of Student's t with df degrees of freedom."""
    if df <= 0:
        raise DataError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    half_tail = 0.5 * betainc_reg(df / 2.0, 0.5, x)
    return half_tail if t > 0 else 1.0 - half_tail


def t_two_sided_p(t: float, df: float) -> float:
    return min(1.0, 2.0 * t_sf(abs(t), df))


def t_quantile(q: float, df: float) -> float:
    """Inverse CDF by bisection (monotone, bracketing doubles outward)."""
    if not 0.0 < q < 1.0:
        raise DataError("quantile level must be in (0, 1)")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_quantile(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while 1.0 - t_sf(hi, df) < q:
        hi *= 2.0
        if hi > 1e12:
            raise DataError("t quantile bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - t_sf(mid, df) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    ci95_half_width: float
    n: int
    t_stat_vs_one: float | None
    p_value_vs_one: float | None
    zero_variance: bool = False

    def __post_init__(self):
        if self.t_stat_vs_one is not None and self.n < 2:
            raise DataError("a t-test needs at least two samples")


def aggregate(values: list[float]) -> AggregateStats:
    """Mean, CI half-width, and a one-sample two-sided t-test against 1.0.

    Samples with zero variance (or a single value) get the degenerate marker
    instead of a t statistic."""
    n = len(values)
    if n == 0:
        raise DataError("cannot aggregate an empty sample")
    mean = sum(values) / n
    if n == 1:
        return AggregateStats(mean, 0.0, 1, None, None, zero_variance=True)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    if var <= 0.0:
        return AggregateStats(mean, 0.0, n, None, None, zero_variance=True)
    sem = math.sqrt(var / n)
    t = (mean - 1.0) / sem
    p = t_two_sided_p(t, n - 1)
    half = t_quantile(0.975, n - 1) * sem
    return AggregateStats(mean, half, n, t, p)


def pearson(x: list[float], y: list[float]) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value (t transform, n-2 dof)."""
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise DataError("correlation needs at least three points")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((v - mx) ** 2 for v in x)
    syy = sum((v - my) ** 2 for v in y)
    if sxx <= 0.0 or syy <= 0.0:
        raise DataError("zero variance in correlation input")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_two_sided_p(t, n - 2)

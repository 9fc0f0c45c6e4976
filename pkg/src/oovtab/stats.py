"""Two-sample statistics for the repeated-run comparison protocol.

The Welch t statistic uses sample variances and the Welch-Satterthwaite
degrees of freedom; the two-sided p-value is the regularized incomplete beta
I_x(dof/2, 1/2) evaluated at x = dof / (dof + t^2).  The incomplete beta is
computed with the standard continued fraction (modified Lentz), accurate to
well below 1e-10 over the range these tests produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import StatError

REJECTION_ALPHA = 0.05

_MAX_ITER = 300
_EPS = 3e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise StatError("incomplete beta continued fraction did not converge",
                    module="stats", stage="incomplete_beta")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for x in [0, 1], a > 0, b > 0."""
    if not 0.0 <= x <= 1.0:
        raise StatError(f"x must be in [0, 1], got {x}", module="stats",
                        stage="incomplete_beta")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def mean(sample: Sequence[float]) -> float:
    return sum(sample) / len(sample)


def sample_variance(sample: Sequence[float]) -> float:
    m = mean(sample)
    return sum((x - m) ** 2 for x in sample) / (len(sample) - 1)


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    p_value: float
    dof: float
    means: tuple[float, float]
    h0_rejected: bool


def welch_ttest(a: Sequence[float], b: Sequence[float],
                alpha: float = REJECTION_ALPHA) -> TTestResult:
    """Unequal-variance two-sample t-test with a two-sided p-value."""
    if len(a) < 2 or len(b) < 2:
        raise StatError("each sample needs at least 2 observations",
                        module="stats", stage="welch_ttest")
    ma, mb = mean(a), mean(b)
    va, vb = sample_variance(a), sample_variance(b)
    if va <= 0.0 and vb <= 0.0:
        if ma == mb:
            return TTestResult(t_stat=0.0, p_value=1.0, dof=float(len(a) + len(b) - 2),
                               means=(ma, mb), h0_rejected=False)
        raise StatError("both samples are constant with different means",
                        module="stats", stage="welch_ttest")
    sa, sb = va / len(a), vb / len(b)
    t = (ma - mb) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (sa ** 2 / (len(a) - 1) + sb ** 2 / (len(b) - 1))
    if t == 0.0:
        p = 1.0
    else:
        p = regularized_incomplete_beta(dof / (dof + t * t), dof / 2.0, 0.5)
    return TTestResult(t_stat=t, p_value=p, dof=dof, means=(ma, mb),
                       h0_rejected=p < alpha)

"""Exact binomial confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_TOL = 1e-12


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float
    level: float
    x: int
    n: int

    @property
    def mean(self) -> float:
        return self.x / self.n

    def to_json(self) -> dict:
        return {"low": self.low, "high": self.high, "level": self.level, "x": self.x, "n": self.n}


def log_binom_cdf(k: int, n: int, p: float) -> float:
    """log P[X <= k] for X ~ Binomial(n, p), 0 < p < 1."""
    if k >= n:
        return 0.0
    if k < 0:
        return -math.inf
    if n - k < k:
        above = _log_sf(k + 1, n, p)
        return math.log(-math.expm1(above)) if above < 0 else -math.inf
    lp, lq = math.log(p), math.log1p(-p)
    # log pmf(0) then successive ratios pmf(i)/pmf(i-1) = (n-i+1)/i * p/q
    i = np.arange(1, k + 1, dtype=np.float64)
    steps = np.log(n - i + 1) - np.log(i) + (lp - lq)
    terms = np.concatenate(([n * lq], n * lq + np.cumsum(steps)))
    top = terms.max()
    return float(top + math.log(np.exp(terms - top).sum()))


def _log_sf(k: int, n: int, p: float) -> float:
    """log P[X >= k]."""
    if k <= 0:
        return 0.0
    if k < n - k:
        # the lower tail is the shorter sum; near the interval ends neither
        # tail is tiny, so the complement loses no useful precision
        below = log_binom_cdf(k - 1, n, p)
        return math.log(-math.expm1(below)) if below < 0 else -math.inf
    lp, lq = math.log(p), math.log1p(-p)
    i = np.arange(k + 1, n + 1, dtype=np.float64)
    first = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * lp + (n - k) * lq
    )
    steps = np.log(n - i + 1) - np.log(i) + (lp - lq)
    terms = np.concatenate(([first], first + np.cumsum(steps)))
    top = terms.max()
    return float(top + math.log(np.exp(terms - top).sum()))


def _bisect(f, target: float) -> float:
    """Root of increasing f(p) = target on (0, 1)."""
    lo, hi = 0.0, 1.0
    while hi - lo > _TOL:
        mid = (lo + hi) / 2
        if mid <= 0.0 or mid >= 1.0:
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def clopper_pearson(x: int, n: int, level: float = 0.95) -> ConfidenceInterval:
    """Exact (Clopper-Pearson) interval for a binomial proportion.

    The lower end solves P[X >= x | p] = alpha/2 and the upper end solves
    P[X <= x | p] = alpha/2, both by bisection on the log CDF.
    """
    if n < 1:
        raise DomainError(f"need at least one trial, got n={n}")
    if not 0 <= x <= n:
        raise DomainError(f"successes x={x} outside [0, {n}]")
    if not 0 < level < 1:
        raise DomainError(f"confidence level {level} outside (0, 1)")
    log_a = math.log((1 - level) / 2)
    if x == 0:
        low = 0.0
    else:
        # P[X >= x] increases with p
        low = _bisect(lambda p: _log_sf(x, n, p), log_a)
    if x == n:
        high = 1.0
    else:
        # P[X <= x] decreases with p
        high = _bisect(lambda p: -log_binom_cdf(x, n, p), -log_a)
    return ConfidenceInterval(low, high, level, x, n)

"""Clopper-Pearson intervals against an independent beta-quantile route."""

from __future__ import annotations

import math
import random

import pytest
from scipy.stats import beta, binom

from fep.errors import DomainError
from fep.stats import clopper_pearson, log_binom_cdf


def beta_interval(x: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = (1 - level) / 2
    low = 0.0 if x == 0 else beta.ppf(a, x, n - x + 1)
    high = 1.0 if x == n else beta.ppf(1 - a, x + 1, n - x)
    return low, high


class TestClopperPearson:
    @pytest.mark.parametrize(
        "x, n",
        [(0, 1), (1, 1), (0, 10), (3, 10), (10, 10), (1, 1000), (500, 1000), (60, 528), (999, 1000), (0, 258372)],
    )
    def test_matches_beta_quantiles(self, x, n):
        ci = clopper_pearson(x, n)
        lo, hi = beta_interval(x, n)
        assert ci.low == pytest.approx(lo, abs=1e-9)
        assert ci.high == pytest.approx(hi, abs=1e-9)

    def test_closed_form_single_trial(self):
        assert clopper_pearson(0, 1).high == pytest.approx(0.975, abs=1e-9)

    def test_reported_values(self):
        assert clopper_pearson(0, 258372).high == pytest.approx(1.43e-5, abs=0.01e-5)
        ci = clopper_pearson(60, 528)
        assert (ci.low, ci.high) == (pytest.approx(0.0878, abs=5e-4), pytest.approx(0.1438, abs=5e-4))
        assert ci.mean == pytest.approx(0.1136, abs=1e-4)
        ci = clopper_pearson(14376, 889375)
        assert (ci.low, ci.high) == (pytest.approx(0.0159, abs=2e-4), pytest.approx(0.0164, abs=2e-4))

    def test_large_counts_match(self):
        ci = clopper_pearson(14376, 889375)
        lo, hi = beta_interval(14376, 889375)
        assert ci.low == pytest.approx(lo, abs=1e-9)
        assert ci.high == pytest.approx(hi, abs=1e-9)

    def test_interval_shape(self):
        rng = random.Random(0)
        for _ in range(200):
            n = rng.randint(1, 400)
            x = rng.randint(0, n)
            ci = clopper_pearson(x, n)
            assert 0 <= ci.low <= x / n <= ci.high <= 1
            assert (x == 0) == (ci.low == 0)
            assert (x == n) == (ci.high == 1)

    def test_nesting(self):
        for x, n in [(0, 20), (5, 20), (20, 20), (60, 528)]:
            wide, narrow = clopper_pearson(x, n, 0.99), clopper_pearson(x, n, 0.95)
            assert wide.low <= narrow.low and narrow.high <= wide.high

    def test_coverage_monte_carlo(self):
        rng = random.Random(42)
        p, n, hits = 0.1, 100, 0
        for _ in range(1000):
            x = sum(rng.random() < p for _ in range(n))
            ci = clopper_pearson(x, n)
            hits += ci.low <= p <= ci.high
        assert hits >= 930

    @pytest.mark.parametrize("x, n, level", [(1, 0, 0.95), (5, 4, 0.95), (-1, 4, 0.95), (1, 4, 1.0)])
    def test_domain_errors(self, x, n, level):
        with pytest.raises(DomainError):
            clopper_pearson(x, n, level)


class TestLogCdf:
    def test_matches_scipy(self):
        for k, n, p in [(0, 10, 0.3), (4, 10, 0.3), (9, 10, 0.9), (300, 1000, 0.31), (700, 1000, 0.69)]:
            assert math.exp(log_binom_cdf(k, n, p)) == pytest.approx(binom.cdf(k, n, p), rel=1e-9)

    def test_edges(self):
        assert log_binom_cdf(10, 10, 0.5) == 0.0
        assert log_binom_cdf(-1, 10, 0.5) == -math.inf

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percolab.stats import (SampleSet, binomial_estimate, empirical_concentration,
                            empirical_quantile_c, loglog_slope, mean_estimate, rogozin_bound)

ints = st.lists(st.integers(-50, 50), min_size=1, max_size=60)


def test_concentration_examples():
    assert empirical_concentration([7, 7, 7], 0.0) == 1.0
    assert empirical_concentration([7, 7, 7], 3.5) == 1.0
    assert empirical_concentration(SampleSet([0, 1, 2, 3]), 1.0) == 0.5
    two_point = [0] * 30 + [10] * 70
    assert empirical_concentration(two_point, 9.0) == 0.7
    with pytest.raises(ValueError):
        empirical_concentration([], 1.0)


@given(ints, st.floats(0, 40), st.floats(0, 40))
@settings(max_examples=100, deadline=None)
def test_concentration_monotone_and_saturating(xs, l1, l2):
    lo, hi = sorted((l1, l2))
    assert empirical_concentration(xs, lo) <= empirical_concentration(xs, hi)
    assert empirical_concentration(xs, max(xs) - min(xs)) == 1.0
    atoms = np.unique(xs, return_counts=True)[1].max() / len(xs)
    assert empirical_concentration(xs, 0.0) == atoms


@given(ints, st.floats(0, 20))
@settings(max_examples=60, deadline=None)
def test_concentration_equals_brute_force_over_sample_points(xs, lam):
    arr = np.array(xs, float)
    brute = max(((arr >= x) & (arr <= x + lam)).mean() for x in arr)
    assert empirical_concentration(xs, lam) == brute


def test_quantile_examples():
    assert empirical_quantile_c([0, 0, 0, 0], 0.25) == 0
    # P(Z <= 0) = 1/4 is not > 1/4, so the answer is 1
    assert empirical_quantile_c([0, 1, 2, 3], 0.25) == 1
    assert empirical_quantile_c([5, 5, 5, 9], 0.25) == 5
    for bad in (0.0, 0.5, 0.7):
        with pytest.raises(ValueError):
            empirical_quantile_c([1, 2], bad)
    with pytest.raises(ValueError):
        empirical_quantile_c([1.5, 2], 0.25)


@given(st.lists(st.integers(0, 30), min_size=1, max_size=60), st.floats(0.01, 0.49))
@settings(max_examples=100, deadline=None)
def test_quantile_is_smallest_strict_exceedance(xs, a):
    c = empirical_quantile_c(xs, a)
    arr = np.array(xs)
    # exact comparison: count(Z <= z) > a * size, as a float mean can round onto a
    need = Fraction(a) * arr.size
    assert int((arr <= c).sum()) > need
    if c > 0:
        assert not int((arr <= c - 1).sum()) > need


def test_rogozin_examples():
    assert rogozin_bound(1.0, 1.0, 1, 1.0, 1.0) == 1.0
    assert rogozin_bound(2.0, 1.0, 4, 1.0, 1.0) == 1.0
    assert math.isclose(rogozin_bound(3.0, 3.0, 100, 0.25, 1.0), 0.2)
    with pytest.raises(ValueError):
        rogozin_bound(1.0, 2.0, 1, 1.0, 1.0)
    with pytest.raises(ValueError):
        rogozin_bound(1.0, 1.0, 1, 0.0, 1.0)


def test_loglog_slope_examples():
    xs = [1.0, 2.0, 4.0, 8.0, 16.0]
    assert math.isclose(loglog_slope(xs, xs), 1.0)
    assert math.isclose(loglog_slope(xs, [1 / math.sqrt(x) for x in xs]), -0.5)
    assert abs(loglog_slope(xs, [3.0] * 5)) < 1e-12
    with pytest.raises(ValueError):
        loglog_slope([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        loglog_slope([1, 2], [0, 1])


def test_binomial_estimate_normal_and_exact_regimes():
    r = binomial_estimate(500, 1000, seed=5)
    assert r.estimate == 0.5 and r.replicates == 1000 and r.seed == 5
    assert math.isclose(r.stderr, math.sqrt(0.25 / 1000))
    assert r.ci_low < 0.5 < r.ci_high
    z = binomial_estimate(0, 1000, 0)
    assert z.estimate == 0 and z.stderr == 0 and z.ci_low == 0 and 0 < z.ci_high < 0.01
    # Clopper-Pearson upper end for 0/1000 is 1 - 0.025^(1/1000)
    assert math.isclose(z.ci_high, 1 - 0.025 ** (1 / 1000), rel_tol=1e-9)
    full = binomial_estimate(1000, 1000, 0)
    assert full.ci_high == 1 and full.ci_low < 1
    with pytest.raises(ValueError):
        binomial_estimate(1, 0, 0)


def test_mean_estimate():
    r = mean_estimate([2.0, 4.0, 6.0], seed=1, scale=2.0)
    assert r.estimate == 2.0
    assert math.isclose(r.stderr, 1.0 / math.sqrt(3))
    assert mean_estimate([5.0], 0).stderr == 0.0

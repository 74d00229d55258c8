import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclescope import stats


def test_t_cdf_against_quadrature(frozen):
    for t, df, expected in frozen["t_cdf_grid"]:
        assert abs(stats.t_cdf(t, df) - expected) <= 1e-8, (t, df)


def test_one_sample_t_examples(frozen):
    res = stats.one_sample_t([1, 2, 3, 4, 5])
    assert res.statistic == pytest.approx(4.2426, abs=1e-4)
    assert abs(res.p_value - frozen["t_12345"]["p"]) < 1e-10
    assert res.n == (5,) and res.df == 4 and res.sidedness == "two-sided"

    sym = stats.one_sample_t([-1, 1, -1, 1])
    assert sym.statistic == 0 and sym.p_value == pytest.approx(1.0, abs=1e-12)

    with pytest.raises(stats.DegenerateSampleError):
        stats.one_sample_t([3, 3, 3])
    with pytest.raises(ValueError):
        stats.one_sample_t([1.0])


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30), st.floats(-50, 50))
@settings(max_examples=100, deadline=None)
def test_one_sample_t_shift_invariance(xs, c):
    x = np.array(xs)
    if x.std() < 1e-3:
        return
    a = stats.one_sample_t(x, 1.0)
    b = stats.one_sample_t(x + c, 1.0 + c)
    assert a.statistic == pytest.approx(b.statistic, rel=1e-9, abs=1e-9)
    assert a.p_value == pytest.approx(b.p_value, abs=1e-9)


def test_rank_sum_small_example(frozen):
    res = stats.rank_sum([1, 2], [3, 4])
    assert res.p_value == pytest.approx(frozen["rank_sum_1234"], abs=1e-15)
    assert res.method == "rank-sum exact"


def test_rank_sum_exact_matches_enumeration(frozen):
    for case in frozen["rank_sum_cases"]:
        res = stats.rank_sum(case["a"], case["b"])
        assert res.p_value == float(Fraction(case["p_num"], case["p_den"])), case


def test_rank_sum_identical_groups():
    rng = np.random.default_rng(3)
    a = rng.normal(size=40)
    res = stats.rank_sum(a, a.copy())
    assert res.statistic == 0 and res.p_value >= 0.99


def test_rank_sum_swap():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=30), rng.normal(0.3, size=25)
    ab, ba = stats.rank_sum(a, b), stats.rank_sum(b, a)
    assert ab.p_value == ba.p_value and ab.statistic == -ba.statistic
    with pytest.raises(ValueError):
        stats.rank_sum([], [1, 2])


def test_rank_sum_monotone_invariance():
    rng = np.random.default_rng(5)
    for n1, n2 in ((4, 5), (20, 30)):
        a, b = rng.normal(size=n1), rng.normal(size=n2)
        base = stats.rank_sum(a, b).p_value
        assert abs(stats.rank_sum(np.exp(a), np.exp(b)).p_value - base) <= 1e-12
        assert abs(stats.rank_sum(a ** 3, b ** 3).p_value - base) <= 1e-12


def test_rank_sum_exact_and_normal_agree():
    rng = np.random.default_rng(6)
    for _ in range(100):
        a, b = rng.normal(size=6), rng.normal(size=6)
        exact = stats.rank_sum(a, b).p_value
        w = stats.midranks(np.concatenate([a, b]))[:6].sum()
        approx = stats.norm_sf2(max(abs(w - 39) - 0.5, 0) / math.sqrt(6 * 6 * 13 / 12))
        assert abs(exact - approx) <= 0.02


def test_midranks_ties():
    np.testing.assert_array_equal(stats.midranks([3, 1, 3, 2]), [3.5, 1, 3.5, 2])


def test_two_sample_t():
    res = stats.two_sample_t([1, 2, 3], [4, 5, 6])
    # pooled sd 1, se sqrt(2/3), delta 3
    assert res.statistic == pytest.approx(3 / math.sqrt(2 / 3), rel=1e-12)
    assert res.df == 4
    same = stats.two_sample_t([1, 2, 3], [1, 2, 3])
    assert same.statistic == 0 and same.p_value == pytest.approx(1.0)


def test_ols_examples():
    exact = stats.ols_slope([1, 2, 3], [2, 4, 6])
    assert exact.estimate == pytest.approx(2.0) and exact.p_value == 1e-300
    flat = stats.ols_slope([1, 2, 3, 4], [5, 5, 5, 5])
    assert flat.estimate == 0 and flat.p_value == 1.0
    with pytest.raises(ValueError):
        stats.ols_slope([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        stats.ols_slope([1, 2], [1, 2])


def test_ols_against_closed_form():
    rng = np.random.default_rng(7)
    x = rng.normal(size=12)
    y = -0.5 * x + rng.normal(size=12)
    res = stats.ols_slope(x, y)
    X = np.column_stack([np.ones(12), x])
    beta, rss, *_ = np.linalg.lstsq(X, y, rcond=None)
    se = math.sqrt(rss[0] / 10 / ((x - x.mean()) ** 2).sum())
    assert res.estimate == pytest.approx(beta[1], rel=1e-10)
    assert res.statistic == pytest.approx(beta[1] / se, rel=1e-10)


@pytest.mark.parametrize("p, mark", [(0.005, "***"), (0.01, "**"), (0.03, "**"), (0.07, "*"),
                                     (0.15, "·"), (0.2, ""), (1.0, "")])
def test_stars(p, mark):
    assert stats.stars(p) == mark


def test_stars_domain():
    for p in (-0.1, 1.5, float("nan")):
        with pytest.raises(ValueError):
            stats.stars(p)


def test_results_are_plain_floats():
    res = stats.one_sample_t(np.array([1.0, 2.0, 4.0]))
    assert type(res.p_value) is float and type(res.statistic) is float
    assert repr(res.p_value) == repr(float(res.p_value))

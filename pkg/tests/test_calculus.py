import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelab import spaces as S
from nelab.calculus import (SERIES_SWITCH, Named, Poly, Series, apply_calculus, eval_scalar,
                            gtilde_ratio, oracle_truncated, parse_function)
from nelab.rankone import RankOne, random_rankone


def test_eval_scalar_examples():
    assert eval_scalar(Named("exp"), 0) == (1.0, 0.0)
    assert eval_scalar(Poly((1, 2, 3)), 2)[0] == 17
    assert abs(eval_scalar(Named("sin"), math.pi)[0]) <= 1e-12


def test_coefficients():
    for name in ("exp", "sin", "cos", "sinh", "cosh"):
        g = Named(name)
        z = 0.3 + 0.2j
        series = sum(g.coefficient(k) * z**k for k in range(30))
        assert abs(series - g.evaluate(z)[0]) < 1e-15
        assert g.a0 == g.coefficient(0).real
        assert g.a1 == g.coefficient(1).real


def test_gtilde_ratio_examples():
    assert gtilde_ratio(Named("exp"), 0, 0.7) == 0.7
    assert gtilde_ratio(Named("exp"), 2, 1) == pytest.approx((math.e**2 - 1) / 2, rel=1e-14)
    a, lam = 0.37, -1.3
    assert gtilde_ratio(Poly((0, 0, 1)), a, lam) == pytest.approx(a * lam**2, rel=1e-15)


def test_apply_calculus_examples():
    space = S.parse_space("l2(2)")
    T0 = RankOne([0, 1], [1, 0], space)
    assert apply_calculus(Named("exp"), 0.4, T0) == (1.0, 0.4)
    for seed in range(5):
        T = random_rankone(space, seed)
        assert apply_calculus(Poly((3, -2)), 1.5, T) == (3.0, -3.0)
    T2 = RankOne([2, 0], [1, 0], space)
    c0, c1 = apply_calculus(Named("exp"), 1, T2)
    assert c0 == 1 and c1 == pytest.approx((math.e**2 - 1) / 2)


@pytest.mark.parametrize("name", ["exp", "sin", "cos", "sinh", "cosh"])
def test_series_crossover_is_continuous(name):
    g = Named(name)
    for lam in (1.0, 1j, -0.5 + 0.3j):
        below = gtilde_ratio(g, SERIES_SWITCH * (1 - 1e-9) / abs(lam), lam)
        above = gtilde_ratio(g, SERIES_SWITCH * (1 + 1e-9) / abs(lam), lam)
        assert abs(below - above) <= 1e-12 * max(1, abs(above))


@pytest.mark.parametrize("name", ["exp", "sin", "cos", "sinh", "cosh"])
def test_small_alpha_agrees_with_high_precision(name):
    from fractions import Fraction
    g = Named(name)
    for alpha in (1e-3, 1e-7, 3e-10, 1e-15):
        # exact rational partial sum of sum_{k>=1} a_k alpha^(k-1)
        a = Fraction(alpha)
        ref = sum(Fraction(g.coefficient(k).real).limit_denominator(10**30) * a ** (k - 1)
                  for k in range(1, 25))
        assert gtilde_ratio(g, alpha, 1.0) == pytest.approx(float(ref), rel=1e-13, abs=1e-300)


def test_series_variant():
    exp_series = Series(lambda k: 1 / math.factorial(k),
                        lambda K, R: R ** (K + 1) / math.factorial(K + 1) * math.exp(R),
                        label="exp-series")
    for z in (0.0, 0.5, -2.0, 1 + 1j):
        val, err = exp_series.evaluate(z)
        assert abs(val - cmath.exp(z)) <= err + 1e-14
        assert err <= 1e-15
    assert exp_series.dsl() == "exp-series"
    with pytest.raises(ValueError):
        Series(lambda k: 1.0, None).evaluate(0.5)


def test_derivatives():
    assert Poly((1, 2, 3)).derivative(2) == 14
    for name in ("exp", "sin", "cos", "sinh", "cosh"):
        g = Named(name)
        z, h = 0.4 - 0.3j, 1e-6
        fd = (g.evaluate(z + h)[0] - g.evaluate(z - h)[0]) / (2 * h)
        assert abs(fd - g.derivative(z)) < 1e-8


def test_parse_function():
    assert parse_function("poly:1,2,3") == Poly((1, 2, 3))
    assert parse_function("poly:0,1i").coefficient(1) == 1j
    assert parse_function("cosh") == Named("cosh")
    assert Poly((1, 2.5, 1j)).dsl() == "poly:1,2.5,1j"
    assert parse_function(Poly((1, 2.5, 1j)).dsl()) == Poly((1, 2.5, 1j))
    for bad in ("tan", "poly:", "poly:1,x"):
        with pytest.raises(ValueError):
            parse_function(bad)


def test_oracle_examples():
    space = S.parse_space("l2(4)")
    T = random_rankone(space, 4)
    c0, c1 = apply_calculus(Named("exp"), 0.8, T)
    np.testing.assert_allclose(oracle_truncated(Named("exp"), 0.8, T),
                               c0 * np.eye(4) + c1 * T.matrix(), atol=1e-10)
    g = Poly((1, -2, 0.5))
    c0, c1 = apply_calculus(g, 1.3, T)
    np.testing.assert_allclose(oracle_truncated(g, 1.3, T, K=3), c0 * np.eye(4) + c1 * T.matrix(),
                               atol=1e-14)
    np.testing.assert_array_equal(oracle_truncated(Named("cos"), 0, T), np.eye(4))
    with pytest.raises(ValueError):
        oracle_truncated(g, 1, T, K=0)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.integers(0, 2**32),
       st.floats(-2, 2))
def test_polynomial_calculus_matches_oracle(coeffs, seed, lam):
    space = S.parse_space("sum2(l1(2),linf(2))")
    T = random_rankone(space, seed)
    g = Poly(tuple(coeffs))
    c0, c1 = apply_calculus(g, lam, T)
    ref = oracle_truncated(g, lam, T, K=len(coeffs))
    np.testing.assert_allclose(c0 * np.eye(space.dim) + c1 * T.matrix(), ref, atol=1e-9)

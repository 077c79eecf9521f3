import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from subdiffusion import DomainError, ParameterError
from subdiffusion.ml_special import (
    BoundRegime,
    MLParams,
    bound_constant_m1,
    check_m2,
    gamma,
    log_grid,
    ml_eval,
    ml_neg_asymptotic,
    mittag_leffler,
    propagator,
)

from oracles import ml_log_magnitude_positive, ml_reference

# 20-digit values from tests/oracles.py (mpmath series or Talbot inversion)
FROZEN = [
    ((0.5, 0.5, -1.0), 0.13660600739194928254),
    ((0.5, 1.0, -2.0), 0.25539567631050574387),
    ((0.3, 0.3, -100.0), 0.000022841967214289510167),
    ((0.7, 1.7, -3.5), 0.25257401783235493493),
    ((0.9, 0.2, 4.0), 404.98100381327738648),
    ((0.25, 1.25, -1e4), 0.000099991840074771019352),
    ((0.5, 0.5, 2.0), 218.44599836350370111),
    ((0.8, 0.8, -1e6), 1.7426034016146750876e-13),
]


@pytest.mark.parametrize("args,expected", FROZEN)
def test_frozen_oracle_values(args, expected):
    rho, mu, z = args
    assert ml_eval((rho, mu), z) == pytest.approx(expected, rel=1e-12)


def test_elementary_cases():
    assert ml_eval((1.0, 1.0), -1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert ml_eval((1.0, 1.0), 3.0) == pytest.approx(math.exp(3.0), rel=1e-14)
    # E_{1,2}(z) = (e^z - 1)/z
    assert ml_eval((1.0, 2.0), -0.5) == pytest.approx(-math.expm1(-0.5) / 0.5, rel=1e-14)
    # E_{1/2,1}(-x) = exp(x^2) erfc(x)
    for x in (0.1, 1.0, 3.0, 10.0):
        assert ml_eval((0.5, 1.0), -x) == pytest.approx(special.erfcx(x), rel=1e-13)
    for mu in (0.3, 1.0, 1.9):
        assert ml_eval((0.4, mu), 0.0) == pytest.approx(1.0 / math.gamma(mu), rel=1e-15)


def test_recurrence_on_large_negative_axis():
    for rho, mu in [(0.3, 0.5), (0.5, 0.5), (0.7, 1.2)]:
        for z in (-7.0, -80.0, -3e3, -2e5, -1e6):
            lhs = ml_eval((rho, mu), z)
            rhs = 1.0 / math.gamma(mu) + z * ml_eval((rho, mu + rho), z)
            scale = max(abs(lhs), 1.0 / math.gamma(mu), abs(z * ml_eval((rho, mu + rho), z)))
            assert abs(lhs - rhs) <= 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(
    rho=st.floats(0.05, 1.0),
    mu=st.floats(0.05, 2.0),
    z=st.floats(-5.0, 5.0),
)
def test_matches_arbitrary_precision_oracle(rho, mu, z):
    if z > 1.0 and float(ml_log_magnitude_positive(rho, mu, z)) > 720.0:
        with pytest.raises(OverflowError):
            ml_eval((rho, mu), z)
        return
    ref = float(ml_reference(rho, mu, z))
    try:
        got = ml_eval((rho, mu), z)
    except OverflowError:
        assert abs(ref) > 1e300
        return
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_vectorized_matches_scalar():
    z = np.linspace(-20.0, 3.0, 17)
    vals = mittag_leffler(z, 0.6, 0.9)
    assert vals.shape == z.shape
    for zi, vi in zip(z, vals):
        assert vi == ml_eval((0.6, 0.9), zi)


def test_overflow_raises():
    with pytest.raises(OverflowError):
        ml_eval((0.1, 1.0), 50.0)
    with pytest.raises(OverflowError):
        ml_eval((1.0, 1.0), 800.0)


def test_parameter_validation():
    for rho, mu in [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0), (0.5, -1.0), (float("nan"), 1.0)]:
        with pytest.raises(ParameterError):
            MLParams(rho, mu)
    with pytest.raises(ParameterError):
        ml_eval((0.5, 1.0), float("inf"))


def test_gamma_poles():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi))
    assert gamma(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi))
    for x in (0.0, -1.0, -3.0):
        with pytest.raises(ParameterError):
            gamma(x)


def test_neg_asymptotic_leading_term():
    for rho in (0.3, 0.5, 0.7):
        for t in (1e3, 1e5):
            exact = ml_eval((rho, rho), -t)
            lead = ml_neg_asymptotic(rho, t)
            assert abs(exact - lead) <= 1e-2 * abs(lead) * 1e3 / t


def test_propagator():
    # 20-digit oracle value
    assert propagator(0.4, 5.0, 0.3) == pytest.approx(0.043858658760293073999, rel=1e-12)
    t = np.array([0.1, 1.0, 2.0])
    assert np.allclose(propagator(1.0, 2.0, t), np.exp(-2.0 * t), rtol=0, atol=1e-15)
    assert propagator(0.5, 0.0, 4.0) == pytest.approx(4.0**-0.5 / math.gamma(0.5))
    with pytest.raises(DomainError):
        propagator(0.5, 1.0, 0.0)
    with pytest.raises(DomainError):
        propagator(0.5, 1.0, np.array([1.0, -1.0]))


def test_bound_constant_m1():
    b = bound_constant_m1(0.5)
    assert b.regime is BoundRegime.m1_global
    t = log_grid(1e-3, 1e5, 7)
    vals = (1.0 + t**2) * np.abs(mittag_leffler(-t, 0.5, 0.5))
    assert np.all(vals <= b.constant_C)
    # at t = 0 the bound is at least 1/Gamma(rho)
    assert b.constant_C >= 1.0 / math.gamma(0.5)
    with pytest.raises(ParameterError):
        bound_constant_m1(1.0)


def test_check_m2():
    t = log_grid(1e-3, 10.0, 8)
    b = check_m2(0.5, 0.5, 10.0, t)
    assert b.regime is BoundRegime.m2_coarse and b.epsilon == 0.5
    # the ratio equals s^{1-eps} |E(-s)|, s = lam t^rho
    s = 10.0 * t**0.5
    assert b.constant_C == pytest.approx(float(np.max(s**0.5 * np.abs(mittag_leffler(-s, 0.5, 0.5)))), rel=1e-12)
    for eps in (0.0, 1.0):
        with pytest.raises(ParameterError):
            check_m2(0.5, eps, 1.0, t)


def test_no_warnings_on_typical_arguments():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mittag_leffler(np.linspace(-1e4, 5.0, 50), 0.35, 0.35)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-8, 1e-12, 2.0**-53])
def test_order_close_to_one(eps):
    rho = 1.0 - eps
    for mu in (rho, 0.5, 1.0, 1.9):
        for x in (0.5, 4.0, 30.0, 300.0, 1e5):
            ref = float(ml_reference(rho, mu, -x))
            assert ml_eval((rho, mu), -x) == pytest.approx(ref, rel=1e-12)


def test_confluent_case_has_no_cancellation():
    # hyp1f1(1, mu, -x) loses digits for large x; the value itself is algebraic
    for mu in (0.5, 0.999, 1.5):
        for x in (30.0, 1e3):
            ref = float(ml_reference(1.0, mu, -x))
            assert ml_eval((1.0, mu), -x) == pytest.approx(ref, rel=1e-13)

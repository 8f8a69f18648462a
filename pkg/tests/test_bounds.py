import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conservative_bandits.config import Bounds, ProblemConfig
from conservative_bandits.errors import ConfigError, UnsupportedRegimeError
from conservative_bandits.estimation import confidence_radius
from conservative_bandits.harness.bounds import (
    TS_ANTI_CONCENTRATION,
    bound_report,
    ntc_theoretical_bound,
    solve_quadratic_bound,
    term1_bound,
)

CFG = ProblemConfig(d=2, alpha=0.2, bounds=Bounds(r_l=0.4, r_h=0.6, kappa_l=0.0, kappa_h=0.15,
                                                  q_l=0.4, q_h=0.6, nu_l=0.0, nu_h=0.15),
                    matrix_b=np.eye(2), cap_c=0.4)


def oracle_ntc(lead_num, den, rho, h, d, delta):
    s = math.sqrt(1 / d)
    lg = math.log(d / delta)
    return ((lead_num / (rho * s * den)) ** 2 + 2 * h**2 * lg / (rho**4 * s**4)
            + lead_num * h * math.sqrt(8 * lg) / (rho**3 * s**3 * den))


def test_known_reward_bound_matches_hand_formula():
    T = 1000
    beta = confidence_radius(T, CFG, 0.1 / (4 * T))
    rho = 0.2 * 0.4 / 1.6
    h = 2 * rho * (1 - rho) + 2 * rho**2
    want = oracle_ntc(2 * beta, 0.08, rho, h, 2, 0.1)
    assert ntc_theoretical_bound("sclts", CFG, T) == pytest.approx(want, rel=1e-12)
    assert ntc_theoretical_bound("sclucb", CFG, T) == pytest.approx(want, rel=1e-12)


def test_unknown_baseline_first_term_ratio():
    T = 500
    beta = confidence_radius(T, CFG, 0.1 / (4 * T))
    rho3 = 0.2 * 0.4 / 2.0
    h3 = 2 * rho3 * (1 - rho3) + 2 * rho3**2
    want = oracle_ntc(2 * beta * 1.8, 0.08, rho3, h3, 2, 0.1)
    assert ntc_theoretical_bound("sclts2", CFG, T) == pytest.approx(want, rel=1e-12)
    # at identical rho and h the leading terms differ by (2 - alpha)^2
    lead1 = (2 * beta / (rho3 * math.sqrt(0.5) * 0.08)) ** 2
    lead3 = (2 * beta * 1.8 / (rho3 * math.sqrt(0.5) * 0.08)) ** 2
    assert lead3 / lead1 == pytest.approx(1.8**2)


def test_bandit_feedback_bound():
    T = 500
    beta = confidence_radius(T, CFG, 0.1 / (4 * T))
    rho2 = 0.2 * 0.4 / 1.6
    h2 = 2 * rho2 * (1 - rho2) + 2 * rho2**2
    assert ntc_theoretical_bound("sclts-bf", CFG, T) == pytest.approx(oracle_ntc(2 * beta, 0.08, rho2, h2, 2, 0.1))


def test_upper_bound_variant_bound():
    T, gap = 800, 0.05
    beta = confidence_radius(T, CFG, 0.1 / (4 * T))
    s = math.sqrt(0.5)
    lg = math.log(20)
    k = beta / (0.4 * gap)
    want = (2 * k / s) ** 2 + 32 * lg / s**4 + 8 * k * math.sqrt(2 * lg) / s**3
    assert ntc_theoretical_bound("sclucb2", CFG, T, gap=gap) == pytest.approx(want, rel=1e-12)
    with pytest.raises(UnsupportedRegimeError):
        ntc_theoretical_bound("sclucb2", CFG, T, gap=0.0)


def test_unconstrained_variants_have_no_bound():
    for v in ("lts", "lucb"):
        with pytest.raises(UnsupportedRegimeError):
            ntc_theoretical_bound(v, CFG, 100)


@given(st.integers(1, 10**6), st.floats(0.01, 0.9), st.floats(0.01, 0.5))
def test_bounds_positive_and_finite(T, alpha, delta):
    cfg = CFG.with_(alpha=alpha, delta=delta)
    for v in ("sclts", "sclucb", "sclts2", "sclts-bf"):
        b = ntc_theoretical_bound(v, cfg, T)
        assert math.isfinite(b) and b > 0
    for v in ("sclts", "sclucb"):
        b = term1_bound(v, cfg, T)
        assert math.isfinite(b) and b > 0


def test_term1_forms():
    T = 1000
    beta4 = confidence_radius(T, CFG, 0.1 / (4 * T))
    assert term1_bound("sclucb", CFG, T) == pytest.approx(2 * beta4 * math.sqrt(2 * 2 * T * math.log(1 + T / 2)))
    beta6 = confidence_radius(T, CFG, 0.1 / (6 * T))
    gamma = beta6 * 3.0 * math.sqrt(2 * 2 * math.log(4 * 2 / 0.1))
    p = TS_ANTI_CONCENTRATION
    want = ((beta6 + gamma * (1 + 4 / p)) * math.sqrt(2 * T * 2 * math.log(1 + T))
            + 4 * gamma / p * math.sqrt(8 * T * math.log(40)))
    assert term1_bound("sclts", CFG, T) == pytest.approx(want, rel=1e-12)
    assert p == pytest.approx(0.158655, abs=1e-6)


def test_report_contents():
    r = bound_report("sclts", CFG, 1000)
    assert r.rho == pytest.approx(0.05) and r.h == pytest.approx(0.1)
    assert (r.c, r.c_prime, r.c_abeille) == (2.0, 4.0, 1.0)
    assert "ntc_bound" in r.render()


def test_quadratic_bound_examples():
    assert solve_quadratic_bound(1, 0, 4) == 4
    x = solve_quadratic_bound(1, 1, 1)
    assert x == pytest.approx((3 + math.sqrt(5)) / 2)
    assert x - math.sqrt(x) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        solve_quadratic_bound(0, 1, 1)


@given(st.floats(0.01, 10), st.floats(0, 10), st.floats(0.01, 10))
def test_quadratic_bound_is_the_boundary(a, b, c):
    x = solve_quadratic_bound(a, b, c)
    assert a * x - math.sqrt(b * x) == pytest.approx(c, rel=1e-9, abs=1e-9)
    xs = np.linspace(0, 2 * x, 2001)
    inside = a * xs - np.sqrt(b * xs) < c
    away = np.abs(xs - x) > 1e-9 * max(x, 1)
    np.testing.assert_array_equal(inside[away], (xs < x)[away])

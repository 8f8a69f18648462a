import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conservative_bandits.config import ProblemConfig
from conservative_bandits.errors import ConfigError, MissingFeedbackError
from conservative_bandits.estimation import (
    ConfidenceEllipsoid,
    build_ellipsoid,
    confidence_radius,
    ellipsoid_contains,
    rls_center,
    run_delta,
)
from conservative_bandits.linalg import GramState


def test_fresh_center_is_zero():
    np.testing.assert_array_equal(rls_center(GramState(3, 1.0)), np.zeros(3))


def test_center_by_hand():
    g = GramState(2, 1.0)
    g.update(np.array([1.0, 0.0]), 1.0)
    np.testing.assert_allclose(rls_center(g), [0.5, 0.0])


def test_tiny_ridge_recovers_parameter(rng):
    theta = np.array([0.3, -0.2, 0.5])
    g = GramState(3, 1e-6, track_constraint=True)
    mu = np.array([-0.1, 0.4, 0.2])
    xs = rng.normal(size=(50, 3))
    for x in xs:
        g.update(x, float(x @ theta), float(x @ mu))
    lstsq = np.linalg.lstsq(xs, xs @ theta, rcond=None)[0]
    np.testing.assert_allclose(rls_center(g), lstsq, atol=1e-3)
    np.testing.assert_allclose(rls_center(g), theta, atol=1e-3)
    # the constraint channel behaves like the reward channel
    np.testing.assert_allclose(rls_center(g, "constraint"), mu, atol=1e-3)


def test_constraint_channel_requires_feedback():
    g = GramState(2, 1.0)
    with pytest.raises(MissingFeedbackError):
        rls_center(g, "constraint")
    g = GramState(2, 1.0, track_constraint=True)
    g.update(np.ones(2), 1.0)
    with pytest.raises(MissingFeedbackError):
        rls_center(g, "constraint")


def test_radius_noise_free_is_sqrt_lambda_s():
    cfg = ProblemConfig(d=2, R=0.0)
    for t in (0, 5, 1000):
        assert confidence_radius(t, cfg, 0.3) == 1.0


def test_radius_hand_value():
    cfg = ProblemConfig(d=2, R=0.1)
    expected = 1.0 + 0.1 * math.sqrt(2 * math.log(40))
    assert confidence_radius(3, cfg, 0.1) == pytest.approx(expected, abs=1e-12)
    assert confidence_radius(3, cfg, 0.1) == pytest.approx(1.27162, abs=1e-5)


@pytest.mark.parametrize("dp", [0.0, 1.0, -0.1, 2.0])
def test_radius_rejects_bad_risk(dp):
    with pytest.raises(ConfigError):
        confidence_radius(1, ProblemConfig(d=2), dp)


def test_radius_rejects_negative_round():
    with pytest.raises(ConfigError):
        confidence_radius(-1, ProblemConfig(d=2), 0.1)


@given(st.integers(1, 10), st.floats(0.0, 2.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0),
       st.floats(0.1, 3.0), st.floats(1e-6, 0.99), st.integers(0, 10**6))
def test_radius_monotone_in_t(d, R, S, L, lam, dp, t):
    cfg = ProblemConfig(d=d, R=R, S=S, L=L, lam=lam)
    assert confidence_radius(t + 1, cfg, dp) >= confidence_radius(t, cfg, dp)


@given(st.floats(0.01, 1.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(1e-4, 0.5), st.integers(1, 1000))
def test_radius_monotone_in_constants(R, S, L, dp, t):
    cfg = ProblemConfig(d=3, R=R, S=S, L=L)
    base = confidence_radius(t, cfg, dp)
    assert confidence_radius(t, cfg.with_(R=R * 1.1), dp) > base
    assert confidence_radius(t, cfg.with_(S=S * 1.1), dp) > base
    assert confidence_radius(t, cfg.with_(L=L * 1.1), dp) > base
    assert confidence_radius(t, cfg, dp * 0.9) > base


def test_run_delta():
    assert run_delta(ProblemConfig(d=2, delta=0.1), 1000) == pytest.approx(0.1 / 4000)


def test_ellipsoid_membership():
    g = GramState(2, 1.0)
    e = ConfidenceEllipsoid(np.zeros(2), g, 1.0, 0.1)
    assert ellipsoid_contains(e, np.zeros(2))
    assert not ellipsoid_contains(e, np.array([2.0, 0.0]))
    assert e.contains(np.array([1.0, 0.0]))  # boundary counts as inside


def test_build_ellipsoid_radius_floor():
    cfg = ProblemConfig(d=2, lam=2.0, S=0.5)
    e = build_ellipsoid(GramState(2, 2.0), cfg, 0.05)
    assert e.radius >= math.sqrt(2.0) * 0.5
    np.testing.assert_array_equal(e.center, np.zeros(2))

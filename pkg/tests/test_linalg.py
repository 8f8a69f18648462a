import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conservative_bandits.errors import ContractViolation, NumericalDegeneracyError
from conservative_bandits.linalg import (
    REFRESH_EVERY,
    GramState,
    gram_update,
    inv_sqrt,
    jacobi_eigh,
    min_eigenvalue,
    weighted_norm,
)


def random_spd(rng, d, floor=0.1):
    a = rng.normal(size=(d, d))
    return a @ a.T + floor * np.eye(d)


def test_rank_one_update_by_hand():
    g = GramState(2, 1.0)
    gram_update(g, np.array([1.0, 0.0]), 1.0)
    np.testing.assert_allclose(g.v, np.diag([2.0, 1.0]))
    np.testing.assert_allclose(g.b_reward, [1.0, 0.0])
    np.testing.assert_allclose(g.v_inv, np.diag([0.5, 1.0]))
    assert g.count == 1


def test_zero_action_changes_nothing():
    g = GramState(3, 2.0)
    gram_update(g, np.zeros(3), 5.0)
    np.testing.assert_array_equal(g.v, 2.0 * np.eye(3))
    np.testing.assert_array_equal(g.b_reward, np.zeros(3))


def test_constraint_channel_only_fed_with_w():
    g = GramState(2, 1.0, track_constraint=True)
    g.update(np.array([1.0, 0.0]), 0.3)
    assert g.constraint_count == 0
    g.update(np.array([0.0, 1.0]), 0.3, w=2.0)
    np.testing.assert_allclose(g.b_constraint, [0.0, 2.0])
    assert g.constraint_count == 1


def test_thousand_updates_match_direct_inverse(rng):
    g = GramState(4, 1.0)
    for _ in range(1000):
        x = rng.normal(size=4)
        g.update(x / max(1.0, np.linalg.norm(x)), rng.normal())
    assert np.linalg.norm(g.v_inv - np.linalg.inv(g.v)) <= 1e-8
    assert np.linalg.norm(g.v @ g.v_inv - np.eye(4)) <= 1e-8


def test_refresh_happens_on_schedule(rng):
    g = GramState(3, 1.0)
    for _ in range(REFRESH_EVERY):
        g.update(rng.normal(size=3), 0.0)
    np.testing.assert_array_equal(g.v_inv, 0.5 * (np.linalg.inv(g.v) + np.linalg.inv(g.v).T))


def test_corrupted_state_is_detected():
    g = GramState(2, 1.0)
    g.v_inv = -np.eye(2)  # no longer the inverse of an SPD matrix
    with pytest.raises(NumericalDegeneracyError):
        g.update(np.array([1.0, 0.0]), 0.0)


def test_update_rejects_bad_shapes():
    g = GramState(2, 1.0)
    with pytest.raises(ContractViolation):
        g.update(np.array([1.0, 0.0, 0.0]), 0.0)
    with pytest.raises(ContractViolation):
        g.update(np.array([np.nan, 0.0]), 0.0)


def test_copy_is_independent():
    g = GramState(2, 1.0)
    h = g.copy()
    h.update(np.ones(2), 1.0)
    assert g.count == 0 and h.count == 1
    np.testing.assert_array_equal(g.v, np.eye(2))


@pytest.mark.parametrize("m, x, expected", [
    (np.eye(2), [0.6, 0.5], math.sqrt(0.61)),
    (np.eye(2), [0.0, 0.0], 0.0),
    (np.diag([4.0, 1.0]), [1.0, 0.0], 2.0),
])
def test_weighted_norm_examples(m, x, expected):
    assert weighted_norm(m, np.array(x)) == pytest.approx(expected, abs=1e-12)


def test_baseline_action_norm_value():
    assert weighted_norm(np.eye(2), np.array([0.6, 0.5])) == pytest.approx(0.78102, abs=1e-5)


def test_weighted_norm_rejects_indefinite():
    with pytest.raises(ContractViolation):
        weighted_norm(np.diag([1.0, -1.0]), np.array([0.0, 1.0]))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_weighted_norm_bilinearity(d, seed):
    rng = np.random.default_rng(seed)
    m = random_spd(rng, d)
    x, y = rng.normal(size=d), rng.normal(size=d)
    lhs = weighted_norm(m, x) ** 2 + weighted_norm(m, y) ** 2 + 2 * x @ m @ y
    assert lhs == pytest.approx(weighted_norm(m, x + y) ** 2, abs=1e-9 * max(1.0, abs(lhs)))


@pytest.mark.parametrize("m, expected", [
    (np.diag([2.0, 1.0]), 1.0),
    (np.eye(3), 1.0),
    (np.array([[2.0, 1.0], [1.0, 2.0]]), 1.0),
])
def test_min_eigenvalue_examples(m, expected):
    assert min_eigenvalue(m) == pytest.approx(expected, abs=1e-12)


def test_min_eigenvalue_rejects_asymmetric():
    with pytest.raises(ContractViolation):
        min_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.just(8)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_jacobi_matches_lapack(a):
    n = a.shape[0]
    m = a[:, :n] + a[:, :n].T
    evals, evecs = jacobi_eigh(m)
    scale = max(1.0, np.linalg.norm(m))
    np.testing.assert_allclose(evals, np.linalg.eigvalsh(m), atol=1e-9 * scale)
    np.testing.assert_allclose(evecs @ np.diag(evals) @ evecs.T, m, atol=1e-9 * scale)
    np.testing.assert_allclose(evecs.T @ evecs, np.eye(n), atol=1e-10)


def test_inv_sqrt_examples():
    np.testing.assert_allclose(inv_sqrt(np.eye(3)), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(inv_sqrt(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]), atol=1e-14)


@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_inv_sqrt_squares_to_inverse(d, seed):
    m = random_spd(np.random.default_rng(seed), d)
    w = inv_sqrt(m)
    np.testing.assert_allclose(w, w.T, atol=1e-14)
    np.testing.assert_allclose(w @ w @ m, np.eye(d), atol=1e-7)


def test_inv_sqrt_rejects_singular():
    with pytest.raises(NumericalDegeneracyError):
        inv_sqrt(np.diag([1.0, 0.0]))


@given(st.integers(1, 5), st.floats(0.1, 5.0), st.integers(0, 2**32 - 1), st.integers(1, 300))
def test_gram_state_stays_above_regulariser(d, lam, seed, n):
    rng = np.random.default_rng(seed)
    g = GramState(d, lam)
    for _ in range(n):
        x = rng.normal(size=d)
        g.update(x / max(1.0, np.linalg.norm(x)), rng.normal())
    assert min_eigenvalue(g.v) >= lam - 1e-9
    assert np.linalg.norm(g.v_inv - np.linalg.inv(g.v)) <= 1e-8

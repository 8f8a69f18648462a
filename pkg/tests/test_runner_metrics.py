import numpy as np
import pytest

from conservative_bandits.config import Bounds, Instance, ProblemConfig
from conservative_bandits.environment import build_environment
from conservative_bandits.errors import AggregationError, MissingFeedbackError, SafetyContractError
from conservative_bandits.harness.metrics import aggregate, per_round_loss_bound, regret_decomposition
from conservative_bandits.harness.runner import run_experiment, run_many


@pytest.fixture(scope="module")
def sclts_logs(experiment_instance):
    return run_many(experiment_instance, "sclts", 300, range(4))


def test_oracle_has_zero_regret(experiment_instance):
    log = run_experiment(experiment_instance, "oracle", 50, 0)
    np.testing.assert_array_equal(log.cum_regret, np.zeros(50))


def test_counts_add_up(sclts_logs):
    for log in sclts_logs:
        assert log.n_optimistic + log.n_conservative == log.T
        assert log.cum_conservative[-1] == log.n_conservative


def test_cumulative_regret_nondecreasing(sclts_logs):
    for log in sclts_logs:
        assert np.all(np.diff(log.cum_regret) >= -1e-12)


def test_experiment_run_is_safe_and_conservative(sclts_logs):
    for log in sclts_logs:
        assert not log.any_violation
        assert np.all(log.expected_reward[~log.ellipsoid_ok | True] >= 0.4 - 1e-9)
        cons = log.conservative
        expected = (1 - log.rho) * log.baseline_reward[cons] + log.rho * (log.zeta[cons] @ [0.5, 0.4])
        np.testing.assert_allclose(log.expected_reward[cons], expected, atol=1e-12)


def test_determinism(experiment_instance):
    a = run_experiment(experiment_instance, "sclucb", 80, 7)
    b = run_experiment(experiment_instance, "sclucb", 80, 7)
    for field in ("actions", "y", "beta", "lambda_min", "margin", "regret", "zeta"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))
    c = run_experiment(experiment_instance, "sclucb", 80, 8)
    assert not np.array_equal(a.y, c.y)


def test_worker_count_does_not_change_results(experiment_instance):
    serial = run_many(experiment_instance, "sclts", 40, [0, 1, 2])
    parallel = run_many(experiment_instance, "sclts", 40, [0, 1, 2], workers=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.actions, b.actions)


def test_errors_carry_round_index():
    inst = Instance(config=ProblemConfig(d=2, bounds=Bounds(r_l=0.4, r_h=0.6, q_l=0.4, q_h=0.6, kappa_h=0.2)),
                    theta_star=(0.5, 0.4), baseline_actions=((0.6, 0.5),))
    with pytest.raises(MissingFeedbackError, match="round 0"):
        run_experiment(inst, "sclts-bf", 5, 0)


def test_bandit_feedback_run(bf_instance):
    log = run_experiment(bf_instance, "sclts-bf", 100, 0)
    assert log.w is not None and not log.any_violation


def test_aggregate_single_and_identical(sclts_logs):
    one = aggregate(sclts_logs[:1])
    np.testing.assert_array_equal(one.mean_regret, sclts_logs[0].cum_regret)
    np.testing.assert_array_equal(one.std_regret, 0.0)
    twin = aggregate([sclts_logs[0], sclts_logs[0]])
    np.testing.assert_array_equal(twin.std_regret, 0.0)


def test_aggregate_matches_two_pass_oracle(sclts_logs):
    s = aggregate(sclts_logs)
    curves = [log.cum_regret for log in sclts_logs]
    n = len(curves)
    for t in (0, 99, 299):
        mean = sum(c[t] for c in curves) / n
        var = sum((c[t] - mean) ** 2 for c in curves) / n
        assert s.mean_regret[t] == pytest.approx(mean, rel=1e-12)
        assert s.std_regret[t] == pytest.approx(var**0.5, rel=1e-9, abs=1e-12)
    assert np.all(np.diff(s.mean_regret) >= 0) and np.all(np.isfinite(s.std_regret))
    assert s.violation_run_fraction == 0.0


def test_aggregate_errors(experiment_instance, sclts_logs):
    with pytest.raises(AggregationError):
        aggregate([])
    short = run_experiment(experiment_instance, "sclts", 10, 0)
    with pytest.raises(AggregationError):
        aggregate([sclts_logs[0], short])


def test_decomposition_all_conservative(sclts_logs, experiment_instance):
    cfg = experiment_instance.config
    for log in sclts_logs:
        term1, term2 = regret_decomposition(log, cfg)
        assert term1 == 0.0
        assert term2 == pytest.approx(log.T * (0.15 + 0.05 * 1.6))
        assert log.total_regret <= term1 + term2


def test_decomposition_all_optimistic(experiment_instance):
    log = run_experiment(experiment_instance, "lucb", 60, 0)
    term1, term2 = regret_decomposition(log, experiment_instance.config)
    assert term2 == 0.0 and term1 == pytest.approx(log.total_regret)


def test_decomposition_detects_violation(sclts_logs, experiment_instance):
    import copy
    log = copy.deepcopy(sclts_logs[0])
    log.regret[:] = 10.0
    with pytest.raises(SafetyContractError):
        regret_decomposition(log, experiment_instance.config)


def test_loss_bound_for_origin_variant():
    cfg = ProblemConfig(d=2, matrix_b=np.eye(2), cap_c=0.4)
    assert per_round_loss_bound("sclucb2", cfg) == 2.0
    assert per_round_loss_bound("lts", cfg) == 0.0

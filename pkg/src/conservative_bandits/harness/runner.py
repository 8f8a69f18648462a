"""Seeded simulation loop: decide, emit feedback, audit, observe."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..actions import sample_unit_sphere
from ..config import Instance
from ..environment import Environment, audit, audit_variant_for, build_environment, emit_feedback
from ..errors import BanditError
from ..estimation import ConfidenceEllipsoid, ellipsoid_contains, rls_center
from ..policies import CONSERVATIVE, Policy, RoundContext

ORACLE = "oracle"
ORACLE_TAG = "oracle"


@dataclass
class RunLog:
    """Per-round records of one run, stored column-wise."""

    policy: str
    seed: int
    actions: np.ndarray
    y: np.ndarray
    w: Optional[np.ndarray]
    expected_reward: np.ndarray
    tag: np.ndarray
    beta: np.ndarray
    lambda_min: np.ndarray
    gate: np.ndarray
    safe_set_size: np.ndarray
    violation: np.ndarray
    margin: np.ndarray
    regret: np.ndarray
    zeta: np.ndarray
    baseline_reward: np.ndarray
    ellipsoid_ok: np.ndarray
    rho: float = 0.0
    optimal_value: float = 0.0
    config_echo: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.y)

    @property
    def conservative(self) -> np.ndarray:
        return self.tag == CONSERVATIVE

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def cum_conservative(self) -> np.ndarray:
        return np.cumsum(self.conservative)

    @property
    def n_conservative(self) -> int:
        return int(self.conservative.sum())

    @property
    def n_optimistic(self) -> int:
        return self.T - self.n_conservative

    @property
    def total_regret(self) -> float:
        return float(self.regret.sum())

    @property
    def any_violation(self) -> bool:
        return bool(self.violation.any())

    @property
    def ellipsoid_ever_violated(self) -> bool:
        return not bool(self.ellipsoid_ok.all())

    def summary(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "T": self.T,
            "regret": self.total_regret,
            "n_optimistic": self.n_optimistic,
            "n_conservative": self.n_conservative,
            "any_violation": self.any_violation,
            "ellipsoid_ever_violated": self.ellipsoid_ever_violated,
        }


def _contains(center, gram, beta, theta) -> bool:
    return ellipsoid_contains(ConfidenceEllipsoid(center, gram, beta, 0.0), theta)


def run_experiment(instance: Instance | Environment, policy_variant: str, T: int, seed: int,
                   gap: Optional[float] = None) -> RunLog:
    """Simulate ``T`` rounds of one policy on one instance.

    Three independent streams are spawned from ``seed``: the policy's own
    sampling, the observation noise and the conservative-action directions.
    A zeta is drawn every round so the streams stay aligned across variants.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    env = instance if isinstance(instance, Environment) else build_environment(instance)
    cfg, model, stream, aset = env.cfg, env.model, env.stream, env.actions
    variant = policy_variant.lower()
    audit_kind = audit_variant_for(variant)
    policy_rng, noise_rng, zeta_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))

    period = 1 if stream.mode == "fixed" else len(stream.actions)
    opt = [env.optimum(cfg.regret_definition, audit_kind, t) for t in range(period)]

    policy = None
    if variant != ORACLE:
        if variant == "sclucb2" and gap is None and cfg.gap is None:
            gap = env.gap()
        policy = Policy(variant, cfg, aset, T, policy_rng, gap=gap)
    has_constraint = model.mu_star is not None
    theta, mu = model.theta_star, model.mu_star

    d = cfg.d
    actions = np.empty((T, d))
    zetas = np.empty((T, d))
    y = np.empty(T)
    w = np.empty(T) if has_constraint else None
    expected = np.empty(T)
    tags = np.empty(T, dtype=object)
    beta = np.zeros(T)
    lam_min = np.zeros(T)
    gate = np.zeros(T)
    safe_size = np.zeros(T, dtype=np.int64)
    violation = np.zeros(T, dtype=bool)
    margin = np.empty(T)
    regret = np.empty(T)
    base_r = np.empty(T)
    ell_ok = np.ones(T, dtype=bool)

    for t in range(T):
        zeta = sample_unit_sphere(zeta_rng, d)
        zetas[t] = zeta
        x_b = stream.action(t)
        r_b = float(x_b @ theta)
        base_r[t] = r_b
        x_opt, v_opt = opt[t % period]
        try:
            if policy is None:
                x, tags[t] = x_opt, ORACLE_TAG
                safe_size[t] = len(aset)
            else:
                ctx = RoundContext(
                    baseline_action=x_b,
                    zeta=zeta,
                    baseline_reward=None if variant == "sclts2" else r_b,
                    constraint_baseline=float(x_b @ mu) if has_constraint else None,
                )
                dec = policy.decide(ctx)
                x = dec.action
                tags[t] = dec.tag
                beta[t], lam_min[t], gate[t], safe_size[t] = dec.beta, dec.lambda_min, dec.gate, dec.safe_set_size
                ok = _contains(dec.center, policy.gram, dec.beta, theta)
                if ok and variant == "sclts-bf":
                    ok = _contains(rls_center(policy.gram, "constraint"), policy.gram, dec.beta, mu)
                ell_ok[t] = ok
            yt, wt = emit_feedback(model, x, noise_rng)
            violation[t], margin[t] = audit(model, stream, x, t, audit_kind, cfg.alpha)
            if policy is not None:
                policy.observe(x, yt, wt)
        except BanditError as exc:
            raise type(exc)(f"round {t}: {exc}") from exc
        actions[t] = x
        y[t] = yt
        if w is not None:
            w[t] = wt
        expected[t] = float(x @ theta)
        regret[t] = v_opt - expected[t]

    return RunLog(
        policy=variant, seed=seed, actions=actions, y=y, w=w, expected_reward=expected,
        tag=tags.astype(str), beta=beta, lambda_min=lam_min, gate=gate, safe_set_size=safe_size,
        violation=violation, margin=margin, regret=regret, zeta=zetas, baseline_reward=base_r,
        ellipsoid_ok=ell_ok, rho=policy.rho if policy is not None else 0.0,
        optimal_value=opt[0][1], config_echo=cfg.echo(),
    )


def _run_job(args):
    return run_experiment(*args)


def run_many(instance: Instance, policy_variant: str, T: int, seeds: Sequence[int],
             workers: int = 1, gap: Optional[float] = None) -> list[RunLog]:
    """One run per seed, returned in seed order whatever the worker count."""
    env = build_environment(instance)
    jobs = [(env, policy_variant, T, int(s), gap) for s in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))

"""Self-contained property suites for the estimation and safety machinery.

Each check returns a :class:`CheckResult`; :func:`run_lemma_suite` runs all
of them.  Monte Carlo checks compare an empirical failure rate with its
nominal level plus three binomial standard deviations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..actions import (
    ActionSet,
    SafeSetSpec,
    conservative_action,
    max_rho,
    safe_argmax_linear,
    safe_argmax_ucb,
    sample_unit_sphere,
)
from ..config import Bounds, Instance, ProblemConfig
from ..estimation import ConfidenceEllipsoid
from ..linalg import GramState, jacobi_eigh
from .bounds import mixing_h, sigma_zeta_sq, solve_quadratic_bound
from .metrics import regret_decomposition
from .runner import run_many

EXPERIMENT_INSTANCE = Instance(
    config=ProblemConfig(d=2, bounds=Bounds(r_l=0.4, r_h=0.6, kappa_l=0.0, kappa_h=0.15)),
    theta_star=(0.5, 0.4),
    baseline_actions=((0.6, 0.5),),
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def binomial_slack(p: float, n: int, k: float = 3.0) -> float:
    return k * math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------- argmax oracle

def _random_gram(rng: np.random.Generator, d: int) -> GramState:
    g = GramState(d, float(rng.uniform(0.2, 2.0)))
    for _ in range(int(rng.integers(0, 30))):
        g.update(rng.uniform(-1, 1, d) / math.sqrt(d), float(rng.normal()))
    return g


def _brute_force_safe(variant: str, x: np.ndarray, v: np.ndarray, center: np.ndarray, beta: float,
                      xb, value, alpha, matrix_b, cap_c) -> bool:
    def width(z):
        return math.sqrt(max(float(z @ np.linalg.solve(v, z)), 0.0))

    if variant == "upper-bound":
        bx = matrix_b.T @ x
        return float(bx @ center) + beta * width(bx) <= cap_c + 1e-12
    lower = float(x @ center) - beta * width(x)
    if variant == "unknown-baseline":
        thr = (1 - alpha) * (float(xb @ center) + beta * width(xb))
    else:
        thr = (1 - alpha) * value
    return lower >= thr - 1e-12


def check_argmax_brute_force(n_instances: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    variants = ("known-reward", "bandit-feedback", "unknown-baseline", "upper-bound")
    mismatches = 0
    empty = 0
    for _ in range(n_instances):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(1, 30))
        acts = rng.normal(size=(n, d))
        acts *= (rng.uniform(0, 1, n) / np.linalg.norm(acts, axis=1))[:, None]
        aset = ActionSet.finite(acts, L=1.0)
        gram = _random_gram(rng, d)
        center = rng.normal(size=d) * 0.5
        beta = float(rng.uniform(0.0, 1.5))
        e = ConfidenceEllipsoid(center, gram, beta, 0.01)
        variant = variants[int(rng.integers(len(variants)))]
        alpha = float(rng.uniform(0, 0.9))
        xb = acts[int(rng.integers(n))]
        value = float(rng.uniform(-0.5, 0.5))
        matrix_b = rng.normal(size=(d, d))
        cap_c = float(rng.uniform(0.05, 1.0))
        spec = SafeSetSpec(variant, e, baseline_action=xb, baseline_value=value, alpha=alpha,
                           matrix_b=matrix_b, cap_c=cap_c)
        objective = rng.normal(size=d)

        safe = [_brute_force_safe(variant, x, gram.v, center, beta, xb, value, alpha, matrix_b, cap_c)
                for x in acts]
        lin_vals = [float(x @ objective) for x in acts]
        ucb_vals = [float(x @ center) + beta * math.sqrt(float(x @ np.linalg.solve(gram.v, x))) for x in acts]

        def brute(vals):
            best, best_i = -math.inf, None
            for i, (ok, val) in enumerate(zip(safe, vals)):
                if ok and val > best:
                    best, best_i = val, i
            return best_i

        got_lin = safe_argmax_linear(aset, spec, objective)
        got_ucb = safe_argmax_ucb(aset, spec, e)
        want_lin, want_ucb = brute(lin_vals), brute(ucb_vals)
        empty += want_lin is None
        if (None if got_lin is None else got_lin.index) != want_lin:
            mismatches += 1
        if (None if got_ucb is None else got_ucb.index) != want_ucb:
            mismatches += 1
    return CheckResult("safe argmax equals brute force", mismatches == 0,
                       f"{mismatches} mismatches over {n_instances} instances ({empty} with empty safe set)")


# ---------------------------------------------------------------- Sherman-Morrison

def check_sherman_morrison(n_sequences: int = 50, length: int = 300, seed: int = 1, tol: float = 1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_sequences):
        d = int(rng.integers(1, 9))
        g = GramState(d, float(rng.uniform(0.1, 5.0)))
        for _ in range(length):
            x = rng.normal(size=d)
            x *= rng.uniform(0, 2) / np.linalg.norm(x)
            g.update(x, 0.0)
            worst = max(worst, float(np.max(np.abs(g.v_inv - np.linalg.inv(g.v)))))
    return CheckResult("rank-one inverse matches direct inverse", worst <= tol, f"max abs error {worst:.2e} (tol {tol:g})")


# ---------------------------------------------------------------- conservative-action safety

def check_conservative_safety(n_draws: int = 10_000, seed: int = 2, margin_tol: float = 1e-12) -> CheckResult:
    """Mixed baseline/random actions stay safe for every draw, in all four variants."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    checked = 0
    i = -1
    while checked < n_draws:
        i += 1
        d = int(rng.integers(1, 6))
        S = float(rng.uniform(0.3, 2.0))
        alpha = float(rng.uniform(0.01, 0.99))
        kind = i % 4
        tight = i % 8 >= 4  # worst case: ||theta|| = S, zeta against theta, r_l = r_h = r_b
        theta = sample_unit_sphere(rng, d) * S * (1.0 if tight else rng.uniform(0, 1))
        zeta = -theta / np.linalg.norm(theta) if tight else sample_unit_sphere(rng, d)
        if kind == 3:
            matrix_b = rng.normal(size=(d, d))
            cap_c = float(rng.uniform(0.01, 1.0))
            cfg = ProblemConfig(d=d, S=S, alpha=alpha, matrix_b=matrix_b, cap_c=cap_c)
            rho = max_rho("origin", cfg)
            if tight:
                # push B^T zeta onto theta's top singular direction
                u, _, vt = np.linalg.svd(matrix_b)
                theta = vt[0] * S
                zeta = u[:, 0]
            x = conservative_action(np.zeros(d), rho, zeta)
            margin = cap_c - float(x @ matrix_b @ theta)
        else:
            # baseline action with a positive reward against theta
            xb = theta / max(np.linalg.norm(theta), 1e-12) * rng.uniform(0.05, 1.0) + rng.normal(size=d) * 0.1
            rb = float(xb @ theta)
            if rb <= 1e-6 or (kind == 2 and rb > 1.0):
                continue
            r_l = rb if tight else rb * rng.uniform(0.05, 1.0)
            r_h = rb if tight else rb + rng.uniform(0, 1.0)
            if kind == 1:
                bounds = Bounds(r_l=r_l, r_h=r_h, q_l=r_l, q_h=r_h)
                variant = "bf"
            else:
                bounds = Bounds(r_l=r_l, r_h=r_h)
                variant = "lemma1" if kind == 0 else "unknown-baseline"
            cfg = ProblemConfig(d=d, S=S, alpha=alpha, bounds=bounds)
            rho = max_rho(variant, cfg)
            x = conservative_action(xb, rho, zeta)
            margin = float(x @ theta) - (1 - alpha) * rb
        worst = min(worst, margin)
        checked += 1
    return CheckResult("conservative action is always safe", worst >= -margin_tol,
                       f"worst margin {worst:.3e} over {checked} draws")


# ---------------------------------------------------------------- quadratic bound

def check_quadratic_bound(n_triples: int = 100, grid: int = 20_001, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_triples):
        a, b, c = rng.uniform(0.01, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.01, 10.0)
        bound = solve_quadratic_bound(a, b, c)
        xs = np.linspace(0.0, 2.0 * bound, grid)
        holds = a * xs - np.sqrt(b * xs) < c
        below = xs < bound
        near = np.abs(xs - bound) <= 1e-9 * max(bound, 1.0)
        bad += int(np.sum((holds != below) & ~near))
    return CheckResult("quadratic bound matches grid search", bad == 0,
                       f"{bad} disagreeing grid points over {n_triples} triples")


# ---------------------------------------------------------------- simulation-backed checks

def check_simulation_suite(n_runs: int = 200, T: int = 200, instance: Optional[Instance] = None,
                           variant: str = "sclts") -> list[CheckResult]:
    """Coverage of the ellipsoid, the minimum-eigenvalue tail and the decomposition, on shared runs."""
    inst = instance or EXPERIMENT_INSTANCE
    cfg = inst.config
    logs = run_many(inst, variant, T, range(n_runs))
    delta = cfg.delta
    slack = binomial_slack(delta, n_runs)

    cover_fail = float(np.mean([log.ellipsoid_ever_violated for log in logs]))
    out = [CheckResult("ellipsoid coverage", cover_fail <= delta + slack,
                       f"failure fraction {cover_fail:.3f} <= {delta} + {slack:.3f}")]

    rho = logs[0].rho
    h = mixing_h(rho, cfg.L)
    s2 = sigma_zeta_sq(cfg.d)
    tail = 0
    for log in logs:
        n_c = log.n_conservative
        v = _final_gram(log, cfg)
        lam_min = float(jacobi_eigh(v)[0][0])
        floor = rho**2 * s2 * n_c - math.sqrt(8.0 * n_c * h * h * math.log(cfg.d / delta))
        tail += lam_min < floor
    frac = tail / n_runs
    out.append(CheckResult("minimum-eigenvalue growth tail", frac <= delta + slack,
                           f"tail fraction {frac:.3f} <= {delta} + {slack:.3f}"))

    worst = math.inf
    for log in logs:
        t1, t2 = regret_decomposition(log, cfg, check=False)
        worst = min(worst, t1 + t2 - log.total_regret)
    out.append(CheckResult("regret decomposition", worst >= -1e-9, f"worst slack {worst:.3e}"))
    return out


def _final_gram(log, cfg) -> np.ndarray:
    a = log.actions
    return cfg.lam * np.eye(cfg.d) + a.T @ a


def check_matrix_azuma(n_rounds: int = 100, n_rep: int = 2000, d: int = 2, seed: int = 4,
                       rho: float = 0.05, xb=(0.6, 0.5), L: float = 1.0) -> CheckResult:
    """Tail of lambda_max of summed zero-mean conservative-round matrices vs d exp(-tau^2/(8 N h^2))."""
    rng = np.random.default_rng(seed)
    xb = np.asarray(xb, dtype=float)[:d]
    h = mixing_h(rho, L)
    g = rng.normal(size=(n_rep, n_rounds, d))
    zeta = g / np.linalg.norm(g, axis=2, keepdims=True)
    zsum = zeta.sum(axis=1)
    zz = np.einsum("rni,rnj->rij", zeta, zeta)
    cross = np.einsum("i,rj->rij", xb, zsum)
    total = rho * (1 - rho) * (cross + cross.transpose(0, 2, 1)) + rho**2 * (zz - n_rounds * np.eye(d) / d)
    lam_max = np.array([jacobi_eigh(m)[0][-1] for m in total])
    taus = np.linspace(0.0, 4.0 * h * math.sqrt(n_rounds), 41)[1:]
    worst = -math.inf
    for tau in taus:
        emp = float(np.mean(lam_max >= tau))
        bound = min(1.0, d * math.exp(-tau * tau / (8.0 * n_rounds * h * h)))
        worst = max(worst, emp - bound - binomial_slack(max(bound, 1.0 / n_rep), n_rep))
    return CheckResult("matrix Azuma tail", worst <= 0.0, f"max excess over bound {worst:.3e}")


def _timed(fn: Callable, *args, **kwargs):
    t0 = time.perf_counter()
    res = fn(*args, **kwargs)
    dt = time.perf_counter() - t0
    for r in res if isinstance(res, list) else [res]:
        r.seconds = dt
    return res


def run_lemma_suite(n_runs: int = 200, seed: int = 0, instance: Optional[Instance] = None) -> list[CheckResult]:
    results = [
        _timed(check_argmax_brute_force, 1000, seed),
        _timed(check_sherman_morrison, seed=seed + 1),
        _timed(check_conservative_safety, seed=seed + 2),
        _timed(check_quadratic_bound, seed=seed + 3),
    ]
    results += _timed(check_simulation_suite, n_runs, instance=instance)
    results.append(_timed(check_matrix_azuma, seed=seed + 4))
    return results

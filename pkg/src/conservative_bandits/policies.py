"""The stage-wise conservative policies behind one decide/observe loop.

Variants::

    sclts     TS objective, known-reward safe set, gate k1, rho_1
    sclucb    UCB objective, known-reward safe set, gate k1, rho_1
    sclts-bf  TS objective, safe set from the constraint ellipsoid, gate k2, rho_2
    sclts2    TS objective, unknown-baseline safe set, gate k3, rho_3
    sclucb2   UCB objective, upper-bound safe set, gap gate, rho * zeta
    lts/lucb  unconstrained baselines (every action admissible, no gate)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .actions import (
    ActionSet,
    SafeSetSpec,
    pick_safe,
    conservative_action,
    max_rho,
    safe_mask,
    spectral_norm,
    ucb_index,
)
from .config import ProblemConfig
from .errors import ConfigError, MissingFeedbackError, UnsupportedRegimeError
from .estimation import ConfidenceEllipsoid, confidence_radius, rls_center, run_delta
from .linalg import GramState, inv_sqrt_from_eigh, jacobi_eigh

SAFE_OPTIMISTIC = "safe-optimistic"
CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class VariantSpec:
    sampler: str  # "ts" or "ucb"
    safe_set: Optional[str]
    rho: Optional[str]
    gate: Optional[str]


VARIANTS = {
    "sclts": VariantSpec("ts", "known-reward", "lemma1", "k1"),
    "sclucb": VariantSpec("ucb", "known-reward", "lemma1", "k1"),
    "sclts-bf": VariantSpec("ts", "bandit-feedback", "bf", "k2"),
    "sclts2": VariantSpec("ts", "unknown-baseline", "unknown-baseline", "k3"),
    "sclucb2": VariantSpec("ucb", "upper-bound", "origin", "gap"),
    "lts": VariantSpec("ts", None, None, None),
    "lucb": VariantSpec("ucb", None, None, None),
}


def variant_spec(variant: str) -> VariantSpec:
    try:
        return VARIANTS[variant.lower()]
    except KeyError:
        raise ConfigError(f"unknown policy variant {variant!r}; choose from {sorted(VARIANTS)}") from None


def ts_sample(rng: np.random.Generator, d: int) -> np.ndarray:
    """Thompson-sampling perturbation: a standard normal vector in R^d."""
    return rng.standard_normal(d)


def gate_threshold(variant: str, beta_t: float, cfg: ProblemConfig, gap: Optional[float] = None) -> float:
    """Minimum-eigenvalue level V_t must reach before optimistic play is allowed."""
    spec = variant_spec(variant)
    b = cfg.bounds
    if spec.gate is None:
        return 0.0
    if spec.gate == "k1":
        den = b.kappa_l + cfg.alpha * b.r_l
        num = 2.0 * cfg.L * beta_t
    elif spec.gate == "k2":
        if b.q_l is None:
            raise ConfigError("SCLTS-BF gate needs q_l")
        den = (b.nu_l or 0.0) + cfg.alpha * b.q_l
        num = 2.0 * cfg.L * beta_t
    elif spec.gate == "k3":
        den = b.kappa_l + cfg.alpha * b.r_l
        num = 2.0 * cfg.L * beta_t * (2.0 - cfg.alpha)
    else:
        if gap is None or not gap > 0:
            raise UnsupportedRegimeError(f"SCLUCB2 needs a strictly positive gap, got {gap}")
        if cfg.matrix_b is None:
            raise ConfigError("SCLUCB2 needs B")
        den = gap
        num = 2.0 * cfg.L * beta_t * spectral_norm(cfg.matrix_b)
    if not den > 0:
        raise ConfigError(f"gate denominator must be > 0 for {variant}, got {den}")
    return (num / den) ** 2


@dataclass
class RoundContext:
    """What the environment reveals before a round: baseline and the round's zeta."""

    baseline_action: np.ndarray
    zeta: np.ndarray
    baseline_reward: Optional[float] = None      # r_b, withheld from sclts2
    constraint_baseline: Optional[float] = None  # q_b, for sclts-bf


@dataclass
class Decision:
    action: np.ndarray
    tag: str
    beta: float
    lambda_min: float
    gate: float
    safe_set_size: int
    feasible: bool
    index: int = -1  # position in the action set, -1 for conservative actions
    theta_tilde: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None

    @property
    def conservative(self) -> bool:
        return self.tag == CONSERVATIVE


class Policy:
    """Mutable per-run state of one policy variant.

    ``decide`` and ``observe`` must alternate; ``t`` counts observations.
    """

    def __init__(self, variant: str, cfg: ProblemConfig, action_set: ActionSet, horizon: int,
                 rng: np.random.Generator | int | None = None, gap: Optional[float] = None):
        if horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if action_set.d != cfg.d:
            raise ConfigError(f"action set dimension {action_set.d} != d={cfg.d}")
        self.variant = variant.lower()
        self.spec = variant_spec(self.variant)
        self.cfg = cfg
        self.actions = action_set
        self.horizon = horizon
        self.delta_prime = run_delta(cfg, horizon)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.gram = GramState(cfg.d, cfg.lam, track_constraint=self.variant == "sclts-bf")
        self.t = 0
        self.gap = cfg.gap if cfg.gap is not None else gap
        self.rho = max_rho(self.spec.rho, cfg) if self.spec.rho else 0.0
        if self.variant == "sclucb2":
            if cfg.matrix_b is None or cfg.cap_c is None:
                raise ConfigError("SCLUCB2 needs B and C")
            if self.gap is None or not self.gap > 0:
                raise UnsupportedRegimeError(f"SCLUCB2 is defined only for a positive gap, got {self.gap}")
        # fail fast on bad gate constants
        gate_threshold(self.variant, 1.0, cfg, self.gap)

    def reward_ellipsoid(self, beta: float) -> ConfidenceEllipsoid:
        return ConfidenceEllipsoid(rls_center(self.gram), self.gram, beta, self.delta_prime)

    def decide(self, ctx: RoundContext) -> Decision:
        cfg, spec = self.cfg, self.spec
        beta = confidence_radius(self.t, cfg, self.delta_prime)
        evals, evecs = jacobi_eigh(self.gram.v)
        lam_min = float(evals[0])
        reward_e = self.reward_ellipsoid(beta)

        theta_tilde = None
        if spec.sampler == "ts":
            eta = ts_sample(self.rng, cfg.d)
            theta_tilde = reward_e.center + beta * (inv_sqrt_from_eigh(evals, evecs) @ eta)
            values = self.actions.actions @ theta_tilde
        else:
            values = ucb_index(self.actions, reward_e)

        if spec.safe_set is None:
            mask = np.ones(len(self.actions), dtype=bool)
        else:
            mask = safe_mask(self.actions, self._safe_set_spec(ctx, reward_e, beta))
        choice = pick_safe(self.actions, values, mask)

        k = gate_threshold(self.variant, beta, cfg, self.gap) * cfg.gate_scale
        common = dict(beta=beta, lambda_min=lam_min, gate=k, safe_set_size=int(mask.sum()),
                      feasible=choice is not None, theta_tilde=theta_tilde, center=reward_e.center)
        if choice is not None and lam_min >= k:
            return Decision(action=np.array(choice.action), tag=SAFE_OPTIMISTIC, index=choice.index, **common)
        x_b = np.zeros(cfg.d) if spec.rho == "origin" else ctx.baseline_action
        action = conservative_action(x_b, self.rho, ctx.zeta, rho_max=self.rho)
        return Decision(action=action, tag=CONSERVATIVE, **common)

    def _safe_set_spec(self, ctx: RoundContext, reward_e: ConfidenceEllipsoid, beta: float) -> SafeSetSpec:
        cfg = self.cfg
        variant = self.spec.safe_set
        if variant == "known-reward":
            if ctx.baseline_reward is None:
                raise MissingFeedbackError(f"{self.variant} needs the baseline reward r_b")
            return SafeSetSpec(variant, reward_e, ctx.baseline_action, ctx.baseline_reward, cfg.alpha)
        if variant == "bandit-feedback":
            if ctx.constraint_baseline is None:
                raise MissingFeedbackError("sclts-bf needs the constraint baseline value q_b")
            constraint_e = ConfidenceEllipsoid(rls_center(self.gram, "constraint"), self.gram, beta,
                                               self.delta_prime)
            return SafeSetSpec(variant, constraint_e, ctx.baseline_action, ctx.constraint_baseline, cfg.alpha)
        if variant == "unknown-baseline":
            return SafeSetSpec(variant, reward_e, ctx.baseline_action, None, cfg.alpha)
        return SafeSetSpec(variant, reward_e, matrix_b=cfg.matrix_b, cap_c=cfg.cap_c, alpha=cfg.alpha)

    def observe(self, action: np.ndarray, y: float, w: Optional[float] = None) -> "Policy":
        if self.variant == "sclts-bf":
            if w is None:
                raise MissingFeedbackError("sclts-bf needs constraint feedback w every round")
            self.gram.update(action, y, w)
        else:
            self.gram.update(action, y)
        self.t += 1
        return self

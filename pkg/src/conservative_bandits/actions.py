"""Action sets, estimated safe sets, constrained argmax and conservative actions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import norm, qmc

from .config import ProblemConfig
from .errors import ConfigError, ContractViolation, SafetyContractError
from .estimation import ConfidenceEllipsoid

PREDICATE_SLACK = 1e-12
SAFE_SET_VARIANTS = ("known-reward", "bandit-feedback", "unknown-baseline", "upper-bound")
RHO_VARIANTS = ("lemma1", "bf", "unknown-baseline", "origin")


@dataclass(frozen=True, eq=False)
class ActionSet:
    """A finite list of actions; continuous bodies are discretised up front.

    ``outer`` holds the flattened outer products x x^T, so quadratic forms
    over the whole set reduce to one matrix-vector product.
    """

    kind: str
    actions: np.ndarray
    L: float
    outer: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        acts = np.array(self.actions, dtype=float)
        if acts.ndim != 2 or len(acts) == 0:
            raise ConfigError("action set must be a non-empty (n, d) array")
        if not np.all(np.isfinite(acts)):
            raise ConfigError("actions must be finite")
        norms = np.linalg.norm(acts, axis=1)
        if norms.max() > self.L * (1.0 + 1e-12):
            raise ConfigError(f"action norm {norms.max():.6g} exceeds L={self.L}")
        acts.setflags(write=False)
        object.__setattr__(self, "actions", acts)
        outer = np.einsum("ni,nj->nij", acts, acts).reshape(len(acts), -1)
        object.__setattr__(self, "outer", outer)

    @property
    def d(self) -> int:
        return self.actions.shape[1]

    def __len__(self) -> int:
        return len(self.actions)

    def quad_forms(self, m: np.ndarray) -> np.ndarray:
        """x^T m x for every action."""
        return self.outer @ np.asarray(m).ravel()

    @classmethod
    def finite(cls, actions, L: Optional[float] = None) -> "ActionSet":
        acts = np.asarray(actions, dtype=float)
        if L is None:
            L = float(np.linalg.norm(acts, axis=1).max()) or 1.0
        return cls("finite", acts, float(L))

    @classmethod
    def ball_grid(cls, d: int, L: float = 1.0, n_grid: int = 256, n_shell: int = 8,
                  grid_seed: int = 0) -> "ActionSet":
        """Deterministic discretisation of the radius-L ball.

        Index 0 is the origin, followed by ``n_shell`` shells of ``n_grid``
        directions each (equally spaced angles for d=2, scrambled-Sobol
        directions otherwise).
        """
        if n_grid < 1 or n_shell < 1:
            raise ConfigError("n_grid and n_shell must be >= 1")
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif d == 2:
            phi = 2.0 * np.pi * np.arange(n_grid) / n_grid
            dirs = np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            sampler = qmc.Sobol(d, scramble=True, seed=grid_seed)
            u = sampler.random(n_grid)
            g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        radii = L * np.arange(1, n_shell + 1) / n_shell
        shells = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        return cls("ball-grid", np.vstack([np.zeros((1, d)), shells]), float(L))


@dataclass
class SafeSetSpec:
    variant: str
    ellipsoid: ConfidenceEllipsoid
    baseline_action: Optional[np.ndarray] = None
    baseline_value: Optional[float] = None
    alpha: float = 0.0
    matrix_b: Optional[np.ndarray] = None
    cap_c: Optional[float] = None

    def __post_init__(self) -> None:
        if self.variant not in SAFE_SET_VARIANTS:
            raise ContractViolation(f"unknown safe-set variant {self.variant!r}")
        if self.variant == "upper-bound":
            if self.matrix_b is None or self.cap_c is None:
                raise ContractViolation("upper-bound safe set needs matrix_b and cap_c")
            if not self.cap_c > 0:
                raise ContractViolation("cap_c must be > 0")
            return
        if not 0.0 <= self.alpha < 1.0:
            raise ContractViolation(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.variant == "unknown-baseline":
            if self.baseline_action is None:
                raise ContractViolation("unknown-baseline safe set needs the baseline action")
        elif self.baseline_value is None:
            raise ContractViolation(f"{self.variant} safe set needs a baseline value")


def _safety_margins(spec: SafeSetSpec, acts: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Signed slack of the variant predicate (>= 0 means safe)."""
    e = spec.ellipsoid
    beta = e.radius
    if spec.variant == "upper-bound":
        bx = acts @ spec.matrix_b  # rows are (B^T x)^T
        width = np.sqrt(np.maximum(np.einsum("ni,ij,nj->n", bx, e.gram.v_inv, bx), 0.0))
        return spec.cap_c - (bx @ e.center + beta * width)
    lower = acts @ e.center - beta * np.sqrt(np.maximum(quad, 0.0))
    if spec.variant == "unknown-baseline":
        xb = np.asarray(spec.baseline_action, dtype=float)
        xb_width = math.sqrt(max(float(xb @ e.gram.v_inv @ xb), 0.0))
        threshold = (1.0 - spec.alpha) * (float(xb @ e.center) + beta * xb_width)
    else:
        threshold = (1.0 - spec.alpha) * spec.baseline_value
    return lower - threshold


def safe_mask(action_set: ActionSet, spec: SafeSetSpec) -> np.ndarray:
    quad = action_set.quad_forms(spec.ellipsoid.gram.v_inv)
    return _safety_margins(spec, action_set.actions, quad) >= -PREDICATE_SLACK


def is_safe(spec: SafeSetSpec, x: np.ndarray) -> bool:
    """Closed-form membership test for the variant's estimated safe set."""
    x = np.asarray(x, dtype=float)
    quad = np.array([x @ spec.ellipsoid.gram.v_inv @ x])
    return bool(_safety_margins(spec, x[None, :], quad)[0] >= -PREDICATE_SLACK)


class SafeChoice(NamedTuple):
    action: np.ndarray
    value: float
    index: int


def pick_safe(action_set: ActionSet, values: np.ndarray, mask: np.ndarray) -> Optional[SafeChoice]:
    if not mask.any():
        return None
    masked = np.where(mask, values, -np.inf)
    idx = int(np.argmax(masked))  # first maximiser, i.e. lowest index
    return SafeChoice(action_set.actions[idx], float(values[idx]), idx)


def safe_argmax_linear(action_set: ActionSet, spec: SafeSetSpec, objective: np.ndarray,
                       mask: Optional[np.ndarray] = None) -> Optional[SafeChoice]:
    """Safe action maximising <x, objective>; ``None`` when the safe set is empty."""
    if mask is None:
        mask = safe_mask(action_set, spec)
    return pick_safe(action_set, action_set.actions @ np.asarray(objective, dtype=float), mask)


def ucb_index(action_set: ActionSet, e: ConfidenceEllipsoid) -> np.ndarray:
    """max over the ellipsoid of <x, v>, in closed form, for every action."""
    width = np.sqrt(np.maximum(action_set.quad_forms(e.gram.v_inv), 0.0))
    return action_set.actions @ e.center + e.radius * width


def safe_argmax_ucb(action_set: ActionSet, spec: SafeSetSpec, reward_ellipsoid: ConfidenceEllipsoid,
                    mask: Optional[np.ndarray] = None) -> Optional[SafeChoice]:
    if mask is None:
        mask = safe_mask(action_set, spec)
    return pick_safe(action_set, ucb_index(action_set, reward_ellipsoid), mask)


def max_rho(variant: str, cfg: ProblemConfig) -> float:
    """Largest conservative mixing coefficient that is safe almost surely."""
    b = cfg.bounds
    if variant == "lemma1":
        num, den = cfg.alpha * b.r_l, cfg.S + b.r_h
    elif variant == "bf":
        if b.q_l is None or b.q_h is None:
            raise ConfigError("bandit-feedback rho needs q_l and q_h")
        num, den = cfg.alpha * b.q_l, cfg.S + b.q_h
    elif variant == "unknown-baseline":
        num, den = cfg.alpha * b.r_l, cfg.S + 1.0
    elif variant == "origin":
        if cfg.matrix_b is None or cfg.cap_c is None:
            raise ConfigError("origin rho needs B and C")
        num, den = cfg.cap_c, spectral_norm(cfg.matrix_b) * cfg.S
    else:
        raise ConfigError(f"unknown rho variant {variant!r}")
    if not den > 0:
        raise ConfigError(f"non-positive denominator {den} in rho ({variant})")
    return num / den


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=float), 2))


def conservative_action(x_b: np.ndarray, rho: float, zeta: np.ndarray,
                        rho_max: Optional[float] = None) -> np.ndarray:
    """(1 - rho) x_b + rho zeta, with zeta a unit vector."""
    zeta = np.asarray(zeta, dtype=float)
    if abs(float(np.linalg.norm(zeta)) - 1.0) > 1e-12:
        raise ContractViolation("zeta must be a unit vector")
    if rho < 0:
        raise SafetyContractError(f"rho must be >= 0, got {rho}")
    if rho_max is not None and rho > rho_max * (1.0 + 1e-15):
        raise SafetyContractError(f"rho={rho} exceeds the safe limit {rho_max}")
    return (1.0 - rho) * np.asarray(x_b, dtype=float) + rho * zeta


def sample_unit_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal(d)
    n = float(np.linalg.norm(g))
    while n == 0.0:
        g = rng.standard_normal(d)
        n = float(np.linalg.norm(g))
    return g / n

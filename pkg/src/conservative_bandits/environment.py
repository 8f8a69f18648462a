"""Ground-truth world: parameters, noisy feedback, baseline stream, safety audit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .actions import ActionSet
from .config import Bounds, Instance, ProblemConfig
from .errors import ConfigError, InfeasibleInstanceError

VIOLATION_TOL = 1e-9
AUDIT_VARIANTS = ("known-reward", "bandit-feedback", "upper-bound")


@dataclass(frozen=True, eq=False)
class TrueModel:
    theta_star: np.ndarray
    noise_scale: float
    mu_star: Optional[np.ndarray] = None
    matrix_b: Optional[np.ndarray] = None
    cap_c: Optional[float] = None

    def expected_reward(self, x: np.ndarray) -> float:
        return float(np.asarray(x) @ self.theta_star)

    def validate(self, cfg: ProblemConfig, action_set: ActionSet) -> None:
        if np.linalg.norm(self.theta_star) > cfg.S * (1 + 1e-12):
            raise ConfigError(f"||theta*||={np.linalg.norm(self.theta_star):.6g} exceeds S={cfg.S}")
        if self.mu_star is not None and np.linalg.norm(self.mu_star) > cfg.S * (1 + 1e-12):
            raise ConfigError(f"||mu*|| exceeds S={cfg.S}")
        top = float(np.max(action_set.actions @ self.theta_star))
        if top > 1.0 + 1e-12:
            raise ConfigError(f"max <x, theta*> = {top:.6g} > 1 over the action set")


@dataclass(frozen=True, eq=False)
class BaselineStream:
    """Baseline actions indexed by round; list mode cycles through the list."""

    actions: np.ndarray
    mode: str = "fixed"

    def action(self, t: int) -> np.ndarray:
        if self.mode == "fixed":
            return self.actions[0]
        return self.actions[t % len(self.actions)]

    def reward(self, model: TrueModel, t: int) -> float:
        return float(self.action(t) @ model.theta_star)

    def constraint_value(self, model: TrueModel, t: int) -> float:
        if model.mu_star is None:
            raise ConfigError("no constraint parameter mu* in this model")
        return float(self.action(t) @ model.mu_star)

    def validate(self, model: TrueModel, bounds: Bounds, opt_reward: float,
                 opt_constraint: Optional[float] = None) -> None:
        tol = 1e-12
        for i, xb in enumerate(self.actions):
            rb = float(xb @ model.theta_star)
            kb = opt_reward - rb
            if not bounds.r_l - tol <= rb <= bounds.r_h + tol:
                raise ConfigError(f"baseline {i}: r_b={rb:.6g} outside [r_l, r_h]=[{bounds.r_l}, {bounds.r_h}]")
            if not bounds.kappa_l - tol <= kb <= bounds.kappa_h + tol:
                raise ConfigError(f"baseline {i}: kappa_b={kb:.6g} outside [{bounds.kappa_l}, {bounds.kappa_h}]")
            if model.mu_star is not None and bounds.q_l is not None:
                qb = float(xb @ model.mu_star)
                if not bounds.q_l - tol <= qb <= bounds.q_h + tol:
                    raise ConfigError(f"baseline {i}: q_b={qb:.6g} outside [{bounds.q_l}, {bounds.q_h}]")
                if opt_constraint is not None and bounds.nu_l is not None and bounds.nu_h is not None:
                    nb = opt_constraint - qb
                    if not bounds.nu_l - tol <= nb <= bounds.nu_h + tol:
                        raise ConfigError(f"baseline {i}: nu_b={nb:.6g} outside [{bounds.nu_l}, {bounds.nu_h}]")


def emit_feedback(model: TrueModel, x: np.ndarray, rng: np.random.Generator):
    """Noisy reward y and, when mu* exists, noisy constraint feedback w."""
    x = np.asarray(x, dtype=float)
    y = float(x @ model.theta_star) + model.noise_scale * rng.standard_normal()
    w = None
    if model.mu_star is not None:
        w = float(x @ model.mu_star) + model.noise_scale * rng.standard_normal()
    return y, w


def audit(model: TrueModel, stream: BaselineStream, x: np.ndarray, t: int, variant: str,
          alpha: float):
    """True-constraint margin of action x at round t; violated iff margin < -1e-9."""
    x = np.asarray(x, dtype=float)
    if variant == "known-reward":
        margin = float(x @ model.theta_star) - (1.0 - alpha) * stream.reward(model, t)
    elif variant == "bandit-feedback":
        margin = float(x @ model.mu_star) - (1.0 - alpha) * stream.constraint_value(model, t)
    elif variant == "upper-bound":
        margin = model.cap_c - float(x @ model.matrix_b @ model.theta_star)
    else:
        raise ConfigError(f"unknown audit variant {variant!r}")
    return margin < -VIOLATION_TOL, margin


def optimal_value(model: TrueModel, action_set: ActionSet, definition: str = "unconstrained",
                  stream: Optional[BaselineStream] = None, t: int = 0, alpha: float = 0.0,
                  variant: str = "known-reward"):
    """Enumerated best action and its expected reward.

    ``true-safe`` restricts the search to actions passing :func:`audit`.
    """
    values = action_set.actions @ model.theta_star
    if definition == "unconstrained":
        idx = int(np.argmax(values))
        return action_set.actions[idx], float(values[idx])
    if definition != "true-safe":
        raise ConfigError(f"unknown optimum definition {definition!r}")
    acts = action_set.actions
    if variant == "known-reward":
        margins = values - (1.0 - alpha) * stream.reward(model, t)
    elif variant == "bandit-feedback":
        margins = acts @ model.mu_star - (1.0 - alpha) * stream.constraint_value(model, t)
    elif variant == "upper-bound":
        margins = model.cap_c - acts @ model.matrix_b @ model.theta_star
    else:
        raise ConfigError(f"unknown audit variant {variant!r}")
    ok = margins >= -VIOLATION_TOL
    if not ok.any():
        raise InfeasibleInstanceError("no action satisfies the true constraint")
    idx = int(np.argmax(np.where(ok, values, -np.inf)))
    return acts[idx], float(values[idx])


def audit_variant_for(policy_variant: str) -> str:
    v = policy_variant.lower()
    if v == "sclts-bf":
        return "bandit-feedback"
    if v == "sclucb2":
        return "upper-bound"
    return "known-reward"


class Environment:
    """An instance made concrete: action set, true model, baseline stream."""

    def __init__(self, cfg: ProblemConfig, model: TrueModel, stream: BaselineStream, action_set: ActionSet):
        self.cfg = cfg
        self.model = model
        self.stream = stream
        self.actions = action_set
        model.validate(cfg, action_set)
        _, opt = optimal_value(model, action_set)
        opt_mu = float(np.max(action_set.actions @ model.mu_star)) if model.mu_star is not None else None
        stream.validate(model, cfg.bounds, opt, opt_mu)

    def optimum(self, definition: str, variant: str = "known-reward", t: int = 0):
        return optimal_value(self.model, self.actions, definition, self.stream, t, self.cfg.alpha, variant)

    def gap(self) -> float:
        """C - x*^T B theta* with x* the best action satisfying the upper-bound constraint."""
        if self.model.matrix_b is None or self.model.cap_c is None:
            raise ConfigError("gap is defined only for upper-bound instances")
        x_opt, _ = self.optimum("true-safe", "upper-bound")
        return self.model.cap_c - float(x_opt @ self.model.matrix_b @ self.model.theta_star)


def random_theta(rng: np.random.Generator, d: int, S: float, L: float) -> np.ndarray:
    """Standard-normal draw rescaled so that ||theta|| <= S and max over the L-ball <= 1."""
    theta = rng.standard_normal(d)
    cap = min(S, 1.0 / L)
    n = float(np.linalg.norm(theta))
    if n > cap:
        theta *= cap / n
    return theta


def build_action_set(instance: Instance) -> ActionSet:
    spec, cfg = instance.action_set, instance.config
    if spec.kind == "finite":
        return ActionSet.finite(np.asarray(spec.actions, dtype=float), L=cfg.L)
    return ActionSet.ball_grid(cfg.d, cfg.L, spec.n_grid, spec.n_shell, spec.grid_seed)


def build_environment(instance: Instance) -> Environment:
    cfg = instance.config
    action_set = build_action_set(instance)
    if instance.theta_star is None:
        theta = random_theta(np.random.default_rng(instance.instance_seed), cfg.d, cfg.S, cfg.L)
    else:
        theta = np.asarray(instance.theta_star, dtype=float)
    mu = None if instance.mu_star is None else np.asarray(instance.mu_star, dtype=float)
    model = TrueModel(theta, cfg.R, mu, cfg.matrix_b, cfg.cap_c)
    stream = BaselineStream(np.asarray(instance.baseline_actions, dtype=float), instance.baseline_mode)
    return Environment(cfg, model, stream, action_set)

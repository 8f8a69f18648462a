"""Ridge (RLS) estimates and the confidence ellipsoids around them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ProblemConfig
from .errors import ConfigError, MissingFeedbackError
from .linalg import GramState, weighted_norm

CONTAINS_SLACK = 1e-12


def rls_center(state: GramState, which: str = "reward") -> np.ndarray:
    """V^{-1} times the response-weighted action sum for one channel."""
    if which == "reward":
        b = state.b_reward
    elif which == "constraint":
        if state.b_constraint is None or (state.constraint_count == 0 and state.count > 0):
            raise MissingFeedbackError("constraint channel has never been fed")
        b = state.b_constraint
    else:
        raise ValueError(f"unknown channel {which!r}")
    return state.v_inv @ b


def confidence_radius(t: int, cfg: ProblemConfig, delta_prime: float) -> float:
    """Radius beta_t(delta') = R sqrt(d log((1 + t L^2/lam)/delta')) + sqrt(lam) S."""
    if not 0.0 < delta_prime < 1.0:
        raise ConfigError(f"delta' must lie in (0, 1), got {delta_prime}")
    if t < 0:
        raise ConfigError(f"round index must be >= 0, got {t}")
    log_term = math.log((1.0 + t * cfg.L**2 / cfg.lam) / delta_prime)
    return cfg.R * math.sqrt(cfg.d * log_term) + math.sqrt(cfg.lam) * cfg.S


def run_delta(cfg: ProblemConfig, horizon: int) -> float:
    """Per-round risk used by every policy: delta / (4T)."""
    return cfg.delta / (4.0 * horizon)


@dataclass
class ConfidenceEllipsoid:
    """{theta : ||theta - center||_V <= radius}, V taken from ``gram``."""

    center: np.ndarray
    gram: GramState
    radius: float
    risk: float

    def contains(self, theta: np.ndarray) -> bool:
        return ellipsoid_contains(self, theta)


def build_ellipsoid(state: GramState, cfg: ProblemConfig, delta_prime: float,
                    which: str = "reward") -> ConfidenceEllipsoid:
    return ConfidenceEllipsoid(
        center=rls_center(state, which),
        gram=state,
        radius=confidence_radius(state.count, cfg, delta_prime),
        risk=delta_prime,
    )


def ellipsoid_contains(e: ConfidenceEllipsoid, theta: np.ndarray) -> bool:
    diff = np.asarray(theta, dtype=float) - e.center
    return weighted_norm(e.gram.v, diff) <= e.radius + CONTAINS_SLACK

"""Aggregation over runs and the per-run regret decomposition check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..actions import max_rho
from ..config import ProblemConfig
from ..errors import AggregationError, SafetyContractError
from ..policies import VARIANTS, variant_spec
from .runner import RunLog

DECOMPOSITION_SLACK = 1e-9


@dataclass
class Summary:
    n_runs: int
    T: int
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_ntc: np.ndarray
    std_ntc: np.ndarray
    violation_run_fraction: float
    ellipsoid_failure_fraction: float
    config_echo: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "config_echo": self.config_echo,
            "n_runs": self.n_runs,
            "T": self.T,
            "mean_regret": self.mean_regret.tolist(),
            "std_regret": self.std_regret.tolist(),
            "mean_ntc": self.mean_ntc.tolist(),
            "violation_run_fraction": self.violation_run_fraction,
            "ellipsoid_failure_fraction": self.ellipsoid_failure_fraction,
            "bounds": self.bounds,
        }


def aggregate(logs: Sequence[RunLog], bounds: dict | None = None) -> Summary:
    """Pointwise mean and (population) std of the cumulative curves."""
    if not logs:
        raise AggregationError("nothing to aggregate")
    horizons = {log.T for log in logs}
    if len(horizons) != 1:
        raise AggregationError(f"runs have different horizons: {sorted(horizons)}")
    regret = np.stack([log.cum_regret for log in logs])
    ntc = np.stack([log.cum_conservative for log in logs]).astype(float)
    return Summary(
        n_runs=len(logs),
        T=horizons.pop(),
        mean_regret=regret.mean(axis=0),
        std_regret=regret.std(axis=0),
        mean_ntc=ntc.mean(axis=0),
        std_ntc=ntc.std(axis=0),
        violation_run_fraction=float(np.mean([log.any_violation for log in logs])),
        ellipsoid_failure_fraction=float(np.mean([log.ellipsoid_ever_violated for log in logs])),
        config_echo=logs[0].config_echo,
        bounds=dict(bounds or {}),
    )


def per_round_loss_bound(variant: str, cfg: ProblemConfig) -> float:
    """Worst-case regret of one conservative round."""
    spec = variant_spec(variant)
    if spec.rho is None:
        return 0.0
    if spec.rho == "origin":
        # rewards lie in [-1, 1], so any round loses at most 2
        return 2.0
    b = cfg.bounds
    return b.kappa_h + max_rho(spec.rho, cfg) * (b.r_h + cfg.S)


def regret_decomposition(log: RunLog, cfg: ProblemConfig, check: bool = True):
    """Split the realised regret into optimistic-round regret and a bound on the rest.

    Returns ``(term1, term2_bound)``.  With ``check`` the inequality
    ``total <= term1 + term2_bound`` is enforced.
    """
    cons = log.conservative
    term1 = float(log.regret[~cons].sum())
    term2 = 0.0
    if log.policy in VARIANTS:  # the oracle never plays conservatively
        term2 = float(cons.sum()) * per_round_loss_bound(log.policy, cfg)
    if check and log.total_regret > term1 + term2 + DECOMPOSITION_SLACK:
        raise SafetyContractError(
            f"regret {log.total_regret:.6g} exceeds decomposition {term1:.6g} + {term2:.6g}")
    return term1, term2


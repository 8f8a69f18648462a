"""Closed-form bound overlays: conservative-round counts and optimistic-round regret.

These are reported next to simulation output and never feed back into the
algorithms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.stats import norm

from ..actions import max_rho, spectral_norm
from ..config import ProblemConfig
from ..errors import ConfigError, UnsupportedRegimeError
from ..estimation import confidence_radius, run_delta
from ..policies import variant_spec

# P(standard normal <= -1): anti-concentration level of the Gaussian TS sampler
TS_ANTI_CONCENTRATION = float(norm.cdf(-1.0))


def sigma_zeta_sq(d: int) -> float:
    """Second moment of one coordinate of a uniform unit vector."""
    return 1.0 / d


def mixing_h(rho: float, L: float) -> float:
    return 2.0 * rho * (1.0 - rho) * L + 2.0 * rho * rho


def _mixed_bound(lead: float, rho: float, h: float, sigma: float, log_dd: float) -> float:
    """(lead/(rho sigma))^2 + 2h^2 log(d/delta)/(rho sigma)^4 + lead h sqrt(8 log(d/delta))/(rho sigma)^3."""
    rs = rho * sigma
    return (lead / rs) ** 2 + 2.0 * h * h * log_dd / rs**4 + lead * h * math.sqrt(8.0 * log_dd) / rs**3


def ntc_theoretical_bound(variant: str, cfg: ProblemConfig, T: int, delta: float | None = None,
                          gap: float | None = None) -> float:
    """Upper bound on the number of conservative rounds up to ``T``."""
    spec = variant_spec(variant)
    if spec.rho is None:
        raise UnsupportedRegimeError(f"no conservative-round bound for unconstrained variant {variant!r}")
    delta = cfg.delta if delta is None else delta
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    beta_T = confidence_radius(T, cfg, run_delta(cfg, T))
    sigma = math.sqrt(sigma_zeta_sq(cfg.d))
    log_dd = math.log(cfg.d / delta)
    b = cfg.bounds
    rho = max_rho(spec.rho, cfg)
    if spec.rho == "origin":
        g = cfg.gap if cfg.gap is not None else gap
        if g is None or not g > 0:
            raise UnsupportedRegimeError(f"the upper-bound variant needs a positive gap, got {g}")
        k = cfg.L * cfg.S * spectral_norm(cfg.matrix_b) ** 2 * beta_T / (cfg.cap_c * g)
        return ((2.0 * k / sigma) ** 2 + 32.0 * log_dd / sigma**4
                + 8.0 * k * math.sqrt(2.0 * log_dd) / sigma**3)
    h = mixing_h(rho, cfg.L)
    if spec.gate == "k2":
        den = cfg.alpha * b.q_l + (b.nu_l or 0.0)
        lead = 2.0 * cfg.L * beta_T / den
    elif spec.gate == "k3":
        lead = 2.0 * cfg.L * beta_T * (2.0 - cfg.alpha) / (b.kappa_l + cfg.alpha * b.r_l)
    else:
        lead = 2.0 * cfg.L * beta_T / (b.kappa_l + cfg.alpha * b.r_l)
    return _mixed_bound(lead, rho, h, sigma, log_dd)


def gamma(cfg: ProblemConfig, T: int, delta: float | None = None) -> float:
    """Scale of the TS perturbation in the optimistic-regret bound."""
    delta = cfg.delta if delta is None else delta
    beta = confidence_radius(T, cfg, delta / (6.0 * T))
    return beta * (1.0 + 2.0 / cfg.c_abeille) * math.sqrt(cfg.ts_c * cfg.d * math.log(cfg.ts_c_prime * cfg.d / delta))


def term1_bound(variant: str, cfg: ProblemConfig, T: int, delta: float | None = None) -> float:
    """Bound on regret accumulated over optimistic rounds (TS or UCB form)."""
    spec = variant_spec(variant)
    delta = cfg.delta if delta is None else delta
    L2 = cfg.L**2
    if spec.sampler == "ucb":
        beta = confidence_radius(T, cfg, run_delta(cfg, T))
        return 2.0 * beta * math.sqrt(2.0 * cfg.d * T * math.log(1.0 + T * L2 / (cfg.lam * cfg.d)))
    p = TS_ANTI_CONCENTRATION
    beta = confidence_radius(T, cfg, delta / (6.0 * T))
    g = gamma(cfg, T, delta)
    return ((beta + g * (1.0 + 4.0 / p)) * math.sqrt(2.0 * T * cfg.d * math.log(1.0 + T * L2 / cfg.lam))
            + 4.0 * g / p * math.sqrt(8.0 * T * L2 / cfg.lam * math.log(4.0 / delta)))


@dataclass
class BoundReport:
    variant: str
    T: int
    ntc_bound: float
    term1_bound: float
    gamma_T: float
    h: float
    rho: float
    sigma_zeta: float
    p: float
    c: float
    c_prime: float
    c_abeille: float

    def to_dict(self) -> dict:
        return asdict(self)

    def render(self) -> str:
        width = max(len(k) for k in self.to_dict())
        return "\n".join(f"{k:<{width}}  {v}" for k, v in self.to_dict().items())


def bound_report(variant: str, cfg: ProblemConfig, T: int, gap: float | None = None) -> BoundReport:
    spec = variant_spec(variant)
    rho = max_rho(spec.rho, cfg) if spec.rho else 0.0
    return BoundReport(
        variant=variant.lower(),
        T=T,
        ntc_bound=ntc_theoretical_bound(variant, cfg, T, gap=gap),
        term1_bound=term1_bound(variant, cfg, T),
        gamma_T=gamma(cfg, T),
        h=mixing_h(rho, cfg.L) if spec.rho != "origin" else 0.0,
        rho=rho,
        sigma_zeta=math.sqrt(sigma_zeta_sq(cfg.d)),
        p=TS_ANTI_CONCENTRATION,
        c=cfg.ts_c,
        c_prime=cfg.ts_c_prime,
        c_abeille=cfg.c_abeille,
    )


def solve_quadratic_bound(a: float, b: float, c: float) -> float:
    """Largest x with a x - sqrt(b x) < c, i.e. (2ac + b + sqrt(b^2 + 4abc)) / (2a^2)."""
    if not a > 0 or not c > 0 or b < 0:
        raise ConfigError(f"need a > 0, b >= 0, c > 0; got a={a}, b={b}, c={c}")
    return (2.0 * a * c + b + math.sqrt(b * b + 4.0 * a * b * c)) / (2.0 * a * a)

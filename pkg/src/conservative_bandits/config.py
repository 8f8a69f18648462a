"""Problem constants and instance files.

:class:`ProblemConfig` carries the constants every policy and bound needs
(dimension, noise scale, norm bounds, regulariser, risk level, conservatism
and the baseline bounds).  :class:`Instance` adds the ground truth and the
action-set description that a simulation needs.  Instance files are YAML
(JSON is accepted too, since it is a YAML subset).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError

REGRET_DEFINITIONS = ("unconstrained", "true-safe")


@dataclass(frozen=True)
class Bounds:
    """Known bounds on the baseline policy's rewards and gaps."""

    r_l: float = 0.0
    r_h: float = 1.0
    kappa_l: float = 0.0
    kappa_h: float = 1.0
    q_l: Optional[float] = None
    q_h: Optional[float] = None
    nu_l: Optional[float] = None
    nu_h: Optional[float] = None


@dataclass(frozen=True)
class ProblemConfig:
    d: int
    R: float = 0.1
    S: float = 1.0
    L: float = 1.0
    lam: float = 1.0
    delta: float = 0.1
    alpha: float = 0.2
    bounds: Bounds = field(default_factory=Bounds)
    matrix_b: Optional[np.ndarray] = None
    cap_c: Optional[float] = None
    # SCLUCB2 gap override; when absent the environment oracle supplies it.
    gap: Optional[float] = None
    # bound-overlay constants only; never used by the algorithms
    c_abeille: float = 1.0
    ts_c: float = 2.0
    ts_c_prime: float = 4.0
    # multiplier on the eigenvalue gate; 1.0 is the algorithm as published
    gate_scale: float = 1.0
    regret_definition: str = "unconstrained"

    def __post_init__(self) -> None:
        if self.matrix_b is not None:
            b = np.array(self.matrix_b, dtype=float)
            b.setflags(write=False)
            object.__setattr__(self, "matrix_b", b)
        self.validate()

    def validate(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d must be a positive integer, got {self.d!r}")
        for name in ("R", "S", "L", "lam", "delta", "alpha", "gate_scale"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v!r}")
        if self.R < 0:
            raise ConfigError("R must be >= 0")
        if self.S <= 0 or self.L <= 0:
            raise ConfigError("S and L must be > 0")
        if self.lam <= 0:
            raise ConfigError("lambda must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.gate_scale < 0:
            raise ConfigError("gate_scale must be >= 0")
        if self.regret_definition not in REGRET_DEFINITIONS:
            raise ConfigError(f"regret_definition must be one of {REGRET_DEFINITIONS}")
        b = self.bounds
        if not 0.0 <= b.r_l <= b.r_h:
            raise ConfigError(f"need 0 <= r_l <= r_h, got r_l={b.r_l}, r_h={b.r_h}")
        if not 0.0 <= b.kappa_l <= b.kappa_h:
            raise ConfigError(f"need 0 <= kappa_l <= kappa_h, got {b.kappa_l}, {b.kappa_h}")
        if (b.q_l is None) != (b.q_h is None):
            raise ConfigError("q_l and q_h must be given together")
        if b.q_l is not None and not 0.0 < b.q_l <= b.q_h:
            raise ConfigError(f"need 0 < q_l <= q_h, got q_l={b.q_l}, q_h={b.q_h}")
        if b.nu_l is not None and b.nu_h is not None and not 0.0 <= b.nu_l <= b.nu_h:
            raise ConfigError(f"need 0 <= nu_l <= nu_h, got {b.nu_l}, {b.nu_h}")
        if self.matrix_b is not None and self.matrix_b.shape != (self.d, self.d):
            raise ConfigError(f"B must be {self.d}x{self.d}, got {self.matrix_b.shape}")
        if self.cap_c is not None and not self.cap_c > 0:
            raise ConfigError("C must be > 0")
        if self.c_abeille <= 0 or self.ts_c <= 0 or self.ts_c_prime <= 0:
            raise ConfigError("bound constants must be > 0")

    def with_(self, **changes: Any) -> "ProblemConfig":
        return replace(self, **changes)

    def echo(self) -> dict:
        """JSON-friendly view of the configuration."""
        out = asdict(self)
        if self.matrix_b is not None:
            out["matrix_b"] = self.matrix_b.tolist()
        return out


@dataclass(frozen=True)
class ActionSetSpec:
    kind: str = "ball-grid"
    n_grid: int = 256
    n_shell: int = 8
    grid_seed: int = 0
    actions: Optional[tuple] = None  # explicit list for kind == "finite"


@dataclass(frozen=True)
class Instance:
    """A full simulation instance: constants, ground truth, baseline, actions.

    ``theta_star`` may be ``None``; :func:`conservative_bandits.environment.build_environment`
    then draws a random instance from ``instance_seed``.
    """

    config: ProblemConfig
    theta_star: Optional[tuple]
    baseline_actions: tuple
    action_set: ActionSetSpec = field(default_factory=ActionSetSpec)
    mu_star: Optional[tuple] = None
    baseline_mode: str = "fixed"
    instance_seed: int = 0

    def with_config(self, **changes: Any) -> "Instance":
        return replace(self, config=self.config.with_(**changes))

    def echo(self) -> dict:
        return {
            "config": self.config.echo(),
            "theta_star": None if self.theta_star is None else list(self.theta_star),
            "mu_star": None if self.mu_star is None else list(self.mu_star),
            "baseline": {"mode": self.baseline_mode, "actions": [list(a) for a in self.baseline_actions]},
            "action_set": asdict(self.action_set),
            "instance_seed": self.instance_seed,
        }


def _vec(value: Any, d: int, name: str) -> Optional[tuple]:
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.shape != (d,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be a finite vector of length {d}, got {value!r}")
    return tuple(float(v) for v in arr)


def instance_from_dict(raw: dict) -> Instance:
    """Build an :class:`Instance` from the parsed instance-file mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("instance file must contain a mapping")
    try:
        d = int(raw["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("instance file needs an integer 'd'") from exc

    bounds_raw = raw.get("bounds") or {}
    known = {"r_l", "r_h", "kappa_l", "kappa_h", "q_l", "q_h", "nu_l", "nu_h"}
    unknown = set(bounds_raw) - known
    if unknown:
        raise ConfigError(f"unknown bounds keys: {sorted(unknown)}")
    bounds = Bounds(**{k: (None if v is None else float(v)) for k, v in bounds_raw.items()})

    scalar_keys = {
        "R": "R", "S": "S", "L": "L", "lambda": "lam", "delta": "delta", "alpha": "alpha",
        "C": "cap_c", "gap": "gap", "c_abeille": "c_abeille", "ts_c": "ts_c",
        "ts_c_prime": "ts_c_prime", "gate_scale": "gate_scale",
    }
    kwargs: dict[str, Any] = {"d": d, "bounds": bounds}
    for key, attr in scalar_keys.items():
        if raw.get(key) is not None:
            kwargs[attr] = float(raw[key])
    if raw.get("B") is not None:
        kwargs["matrix_b"] = np.asarray(raw["B"], dtype=float)
    if raw.get("regret_definition") is not None:
        kwargs["regret_definition"] = str(raw["regret_definition"])
    config = ProblemConfig(**kwargs)

    baseline = raw.get("baseline") or {}
    actions = baseline.get("actions")
    if not actions:
        raise ConfigError("instance file needs baseline.actions (at least one action)")
    baseline_actions = tuple(_vec(a, d, "baseline action") for a in actions)
    mode = baseline.get("mode", "fixed" if len(baseline_actions) == 1 else "list")
    if mode not in ("fixed", "list"):
        raise ConfigError(f"baseline.mode must be 'fixed' or 'list', got {mode!r}")

    aset_raw = dict(raw.get("action_set") or {})
    if aset_raw.get("actions") is not None:
        aset_raw["actions"] = tuple(_vec(a, d, "action") for a in aset_raw["actions"])
    try:
        aset = ActionSetSpec(**aset_raw)
    except TypeError as exc:
        raise ConfigError(f"bad action_set section: {exc}") from exc
    if aset.kind not in ("ball-grid", "finite"):
        raise ConfigError(f"action_set.kind must be 'ball-grid' or 'finite', got {aset.kind!r}")
    if aset.kind == "finite" and not aset.actions:
        raise ConfigError("finite action sets need action_set.actions")

    return Instance(
        config=config,
        theta_star=_vec(raw.get("theta_star"), d, "theta_star"),
        mu_star=_vec(raw.get("mu_star"), d, "mu_star"),
        baseline_actions=baseline_actions,
        baseline_mode=mode,
        action_set=aset,
        instance_seed=int(raw.get("instance_seed", 0)),
    )


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read instance file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from exc
    try:
        return instance_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

"""Stage-wise conservative linear bandits: policies, environment and experiment harness."""

from .actions import ActionSet, SafeSetSpec, conservative_action, max_rho, safe_argmax_linear, safe_argmax_ucb
from .config import Bounds, Instance, ProblemConfig, instance_from_dict, load_instance
from .environment import Environment, TrueModel, audit, build_environment, emit_feedback, optimal_value
from .errors import (
    BanditError,
    ConfigError,
    ContractViolation,
    InfeasibleInstanceError,
    MissingFeedbackError,
    NumericalDegeneracyError,
    SafetyContractError,
    UnsupportedRegimeError,
)
from .estimation import ConfidenceEllipsoid, confidence_radius, rls_center
from .linalg import GramState, gram_update, min_eigenvalue, weighted_norm
from .policies import Policy, RoundContext, gate_threshold

__version__ = "0.1.0"

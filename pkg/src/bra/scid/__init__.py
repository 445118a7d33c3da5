"""Structure-constrained decomposition of a top-level function into candidate HCDs."""

from .engine import (
    DEFAULT_MAX_LEAVES,
    MaterializeError,
    RoiTooLargeError,
    ScidError,
    Verdict,
    apply_rejection_rules,
    check_io_feasibility,
    check_predicate,
    enumerate_candidates,
    evaluate_predicate,
    materialize_hcd,
    rank_candidates,
    role_admits,
)
from .model import (
    CandidateHcd,
    CandidateSet,
    ExternalBinding,
    FunctionTemplate,
    Predicate,
    RejectionRule,
    Role,
    RoleEdge,
    RuleError,
    SoftConstraint,
    TemplateError,
)

__all__ = [
    "DEFAULT_MAX_LEAVES",
    "CandidateHcd",
    "CandidateSet",
    "ExternalBinding",
    "FunctionTemplate",
    "MaterializeError",
    "Predicate",
    "RejectionRule",
    "RoiTooLargeError",
    "Role",
    "RoleEdge",
    "RuleError",
    "ScidError",
    "SoftConstraint",
    "TemplateError",
    "Verdict",
    "apply_rejection_rules",
    "check_io_feasibility",
    "check_predicate",
    "enumerate_candidates",
    "evaluate_predicate",
    "materialize_hcd",
    "rank_candidates",
    "role_admits",
]

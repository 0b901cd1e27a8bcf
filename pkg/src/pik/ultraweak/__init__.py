"""Ultraweak matrix majorization: certificates, constructions and decisions."""
from .certificates import (
    CanonicalForm,
    Certificate,
    build_collapse_cert,
    build_diagonal_cert,
    build_t_reduction,
    canonical_form,
    check_certificate,
    compose,
    equiv_transforms,
    identity_cert,
    universal_bounds,
)
from .decide import Budget, MajorizationDecision, NoReason, Verdict, copt_chain, copt_edges, copt_shape, majorizes

__all__ = [
    "Budget",
    "CanonicalForm",
    "Certificate",
    "MajorizationDecision",
    "NoReason",
    "Verdict",
    "build_collapse_cert",
    "build_diagonal_cert",
    "build_t_reduction",
    "canonical_form",
    "check_certificate",
    "compose",
    "copt_chain",
    "copt_edges",
    "copt_shape",
    "equiv_transforms",
    "identity_cert",
    "majorizes",
    "universal_bounds",
]

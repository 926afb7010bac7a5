"""Idempotent states on finite-dimensional quantum semigroups."""

from .fdalg import BlockStructure, Element, Functional, Projection, DEFAULT_TOL
from .qsg import QuantumSemigroup, convolve, cancellation_check, verify_quantum_semigroup
from .idem import SolverConfig, find_idempotents, idempotency_residual, mult_domain_verify

__version__ = "0.1.0"

__all__ = [
    "BlockStructure",
    "Element",
    "Functional",
    "Projection",
    "DEFAULT_TOL",
    "QuantumSemigroup",
    "convolve",
    "cancellation_check",
    "verify_quantum_semigroup",
    "SolverConfig",
    "find_idempotents",
    "idempotency_residual",
    "mult_domain_verify",
]

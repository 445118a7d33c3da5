"""Brain Reference Architecture toolkit.

Anatomy (BIF), hypothetical component diagrams (HCD), the mappings between
them, candidate generation from anatomical constraints, a certification
registry, a stub harness, fidelity measures and merge planning.
"""

from .bif import Bif, Circuit, Citation, Connection, UniformCircuit, validate_bif
from .binding import BraMapping, evaluate_adequacy
from .hcd import Component, DependencyLink, Hcd, validate_hcd

__version__ = "0.1.0"

__all__ = [
    "Bif",
    "BraMapping",
    "Circuit",
    "Citation",
    "Component",
    "Connection",
    "DependencyLink",
    "Hcd",
    "UniformCircuit",
    "evaluate_adequacy",
    "validate_bif",
    "validate_hcd",
]

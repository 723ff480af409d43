"""Semiclassical quantization lattices for families of commuting Hamiltonians.

The package computes, from k commuting classical Hamiltonians on T*R^n, the
lattice that localizes the joint spectrum of the corresponding commuting
quantum operators: periods of the joint flow, cycle actions, Maslov indices,
subprincipal corrections, and the Liouville density governing cluster
multiplicities.  A quantum side discretizes the library models and checks
the prediction numerically.
"""

__version__ = "0.1.0"

from .errors import SemilatError
from .models import PhasePoint, ClassicalSystem, make_system
from .lattice import LatticeSpec

__all__ = ["SemilatError", "PhasePoint", "ClassicalSystem", "make_system",
           "LatticeSpec", "__version__"]

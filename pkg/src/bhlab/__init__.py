"""Exact-diagonalization checks for the truncated Bose-Hubbard model with a
symmetry-breaking source term."""

__version__ = "0.1.0"

from .errors import (BHLabError, DimensionCapError, DomainError, InvalidSiteError,
                     OutOfTruncationError, ValidationError)
from .lattice import LatticeSpec, Momentum, brillouin_momenta, zero_momentum
from .fock import TruncatedBasis, basis_for, enumerate_basis
from .model import HoppingSpec, ModelSpec

__all__ = [
    "BHLabError", "DimensionCapError", "DomainError", "InvalidSiteError",
    "OutOfTruncationError", "ValidationError", "LatticeSpec", "Momentum",
    "brillouin_momenta", "zero_momentum", "TruncatedBasis", "basis_for",
    "enumerate_basis", "HoppingSpec", "ModelSpec", "__version__",
]

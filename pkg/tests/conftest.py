import pytest

from bhlab.fock import basis_for
from bhlab.lattice import LatticeSpec
from bhlab.model import HoppingSpec, ModelSpec


def make_model(d=1, N=2, t=-0.5, U=1.0, mu=0.0, lam=0.0, beta=1.0, onsite=0.0):
    lat = LatticeSpec(d, N)
    return ModelSpec(lat, HoppingSpec.nearest_neighbor(lat, t, onsite), U, mu, lam, beta)


@pytest.fixture
def ref_model():
    """d=1, N=2 reference point used throughout the convergence checks."""
    return make_model(lam=0.5)


@pytest.fixture
def basis():
    return lambda model, M: basis_for(model.lattice.size, M)

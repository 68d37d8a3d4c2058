import numpy as np
import pytest
from hypothesis import settings

from grid_dvr import build_periodic_grid, build_sinc_dvr
from operators import HarmonicPotential, build_hamiltonian
from vn_lattice import build_frame_matrix, build_lattice

# dense eigensolves make single examples slow on small machines
settings.register_profile("numerics", deadline=None, max_examples=50)
settings.load_profile("numerics")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def harmonic_63():
    """Harmonic oscillator on (-10, 10) with N = 63 periodic sinc nodes and a 7 x 9 lattice."""
    dvr = build_sinc_dvr(build_periodic_grid(-10.0, 20.0, 63))
    h = build_hamiltonian(dvr, HarmonicPotential(omega=1.0), 1.0)
    lat = build_lattice(dvr, 7, 9)
    return h, lat, build_frame_matrix(dvr, lat)

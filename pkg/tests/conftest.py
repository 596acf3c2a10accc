from __future__ import annotations

import numpy as np
import pytest

from qla_plasma.lattice import LatticeSpec, PlasmaProfile


@pytest.fixture
def lat2():
    """2x2 lattice: 8 qubits with the coin register."""
    return LatticeSpec(1, 1, 0.5)


@pytest.fixture
def lat4():
    return LatticeSpec(2, 2, 0.25)


@pytest.fixture
def random_profile():
    def make(lattice, seed=0, nu=0.0, wci=0.5, wce=-1.5):
        rng = np.random.default_rng(seed)
        n = lattice.n_sites
        return PlasmaProfile(rng.uniform(0.2, 2.0, n), rng.uniform(0.5, 3.0, n), wci, wce, nu)
    return make

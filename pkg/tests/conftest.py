"""Shared fixtures: reference systems and expensive multipath solutions.

The multipath solutions are session-scoped because several test modules
check different aspects (root locations, classification, weights, path
integrity) of the same boundary-value solves.
"""

import numpy as np
import pytest

from opq import manifold, phase, systems

# canonical parameter sets used throughout the golden tests
THETA_I = np.pi - 0.5


@pytest.fixture(scope="session")
def xz():
    return systems.TwoObservable(tau_x=1.0, tau_z=2.0)


@pytest.fixture(scope="session")
def eq():
    return systems.TwoObservable(tau_x=1.0, tau_z=1.0)


@pytest.fixture(scope="session")
def dz():
    return systems.DrivenZ(tau=1.0, delta=1.0)


@pytest.fixture(scope="session")
def island_range(xz):
    """Full island momentum range at THETA_I, shrunk off the separatrix."""
    isl = phase.island_spec(xz)
    p_a, p_b = phase.p_branches(xz, THETA_I, isl.E_c)
    return min(p_a, p_b) + 1e-9, max(p_a, p_b) - 1e-9


@pytest.fixture(scope="session")
def sol9(xz, island_range):
    return manifold.find_multipaths(xz, THETA_I, 3.5, 9.0, island_range)


@pytest.fixture(scope="session")
def sol18(xz, island_range):
    return manifold.find_multipaths(xz, THETA_I, 3.5, 18.0, island_range)


@pytest.fixture(scope="session")
def sol27(xz, island_range):
    return manifold.find_multipaths(xz, THETA_I, 3.5, 27.0, island_range)


@pytest.fixture(scope="session")
def winding_solution(dz):
    """Three driven-system branches differing by winding number."""
    return manifold.find_multipaths(dz, np.pi / 2, 5.75, 8.0, (1e-4, 3.0))

import numpy as np
import pytest

from bearing_formation.graph import GraphTopology
from bearing_formation.scenario import load_bundled

OMEGA = np.pi / 2
S4 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, OMEGA], [0.0, -OMEGA, 0.0]])
F4 = np.array([[0.6, 0.0, 0.0], [0.3, 0.3, 0.0]])
EDGES4 = [(3, 1), (3, 2), (3, 4), (3, 5), (3, 6), (4, 1), (4, 2), (4, 5), (4, 6), (5, 2), (5, 6), (6, 1)]


@pytest.fixture(scope="session")
def graph4():
    return GraphTopology(6, 2, EDGES4)


@pytest.fixture(scope="session")
def scenario():
    return load_bundled("rectangle")


@pytest.fixture(scope="session")
def system(scenario):
    return scenario.build_system()


@pytest.fixture(scope="session")
def init(scenario, system):
    return scenario.initial_state(system)

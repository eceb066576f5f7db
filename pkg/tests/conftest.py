import numpy as np
import pytest

from menf import (
    NeighborLink,
    NodeModel,
    PlantModel,
    build_network,
    chua_network,
    laplacian_P,
    make_chua_scenario,
    simulate,
    tune_scalar,
)


@pytest.fixture(scope="session")
def chua_net():
    return chua_network()


@pytest.fixture(scope="session")
def chua_P(chua_net):
    return laplacian_P(chua_net, np.eye(3), ridge=0.01)


@pytest.fixture(scope="session")
def chua_tuning(chua_net, chua_P):
    return tune_scalar(chua_net, chua_P)


@pytest.fixture(scope="session")
def chua_run(chua_tuning):
    """Seed-0 pulse run of the built-in scenario, shared across modules."""
    scenario = make_chua_scenario(0, tuning=chua_tuning)
    return scenario, simulate(scenario)


def make_single_node_network(a=-1.0, b=1.0, c=1.0, d=1.0, xcal=1.0):
    """One-node, no-edge network with scalar state."""
    plant = PlantModel(A=np.array([[a]]), B=np.array([[b]]))
    node = NodeModel(
        C=np.array([[c]]),
        D=np.array([[d]]),
        xi=np.zeros(1),
        Xcal=np.array([[xcal]]),
        links={},
    )
    return build_network(plant, [node], [])


def make_two_node_network(n=2, seed=0):
    """Two nodes, single edge (1, 2), random well-conditioned matrices."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) * 0.3 - np.eye(n)
    B = rng.standard_normal((n, n)) * 0.5
    plant = PlantModel(A=A, B=B)
    link = NeighborLink(
        W=np.eye(n) + 0.1 * rng.standard_normal((n, n)),
        F=np.eye(n) * 0.5,
        Z=np.eye(n) * 0.2,
    )
    nodes = [
        NodeModel(
            C=rng.standard_normal((1, n)),
            D=np.array([[0.5]]),
            xi=rng.standard_normal(n),
            Xcal=np.eye(n) * 2.0,
            links={2: link},
        ),
        NodeModel(
            C=rng.standard_normal((2, n)),
            D=np.eye(2) * 0.4,
            xi=rng.standard_normal(n),
            Xcal=np.eye(n),
            links={},
        ),
    ]
    return build_network(plant, nodes, [(1, 2)])

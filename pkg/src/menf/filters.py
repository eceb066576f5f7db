"""Node filter vector field and the matching error dynamics.

filter_rhs drives the estimate from local measurements and neighbor
signals; error_rhs is the algebraically equivalent recursion for
e_i = xhat_i - x and exists as an independent cross-check path. Both apply
K^-1 through an SPD solve and never materialize the inverse.
"""

from __future__ import annotations

import numpy as np

from .errors import MissingNeighborSignal
from .linalg import as_vector, spd_solve
from .model import NodeModel, PlantModel


def _check_neighbor_keys(node_id: int, expected, given) -> None:
    expected = set(expected)
    given = set(given)
    for j in sorted(expected - given):
        raise MissingNeighborSignal(node_id, j)
    extra = given - expected
    if extra:
        raise ValueError(f"node {node_id} got signals from non-neighbors {sorted(extra)}")


def plant_rhs(plant: PlantModel, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return plant.A @ x + plant.B @ w


def filter_rhs(
    plant: PlantModel,
    node: NodeModel,
    node_id: int,
    neighbors,
    K: np.ndarray,
    xhat: np.ndarray,
    y: np.ndarray,
    c: dict[int, np.ndarray],
) -> np.ndarray:
    """dxhat/dt = A xhat + K^-1 (C^T R^-1 (y - C xhat)
                               + sum_j W^T U^-1 (c_ij - W xhat)).

    c must carry exactly the keys in `neighbors`; raises
    MissingNeighborSignal or SingularGain.
    """
    _check_neighbor_keys(node_id, neighbors, c.keys())
    xhat = as_vector(xhat, "xhat")
    innovation = node.CtRinv @ (as_vector(y, "y") - node.C @ xhat)
    for j in neighbors:
        link = node.links[j]
        innovation = innovation + link.WtUinv @ (
            as_vector(c[j], f"c[{j}]") - link.W @ xhat
        )
    return plant.A @ xhat + spd_solve(K, innovation)


def error_rhs(
    plant: PlantModel,
    node: NodeModel,
    node_id: int,
    neighbors,
    K: np.ndarray,
    e: np.ndarray,
    e_neighbors: dict[int, np.ndarray],
    w: np.ndarray,
    v: np.ndarray,
    eps: dict[int, np.ndarray],
) -> np.ndarray:
    """de/dt = A e - B w - K^-1 ((C^T R^-1 C + sum_j W^T U^-1 W) e
                                 - C^T R^-1 D v
                                 - sum_j W^T U^-1 (W e_j + F eps_ij)).

    Used only for cross-validation against filter_rhs minus plant_rhs.
    """
    _check_neighbor_keys(node_id, neighbors, e_neighbors.keys())
    _check_neighbor_keys(node_id, neighbors, eps.keys())
    e = as_vector(e, "e")
    inner = node.CtRinvC @ e - node.CtRinv @ (node.D @ as_vector(v, "v"))
    for j in neighbors:
        link = node.links[j]
        inner = inner + link.WtUinvW @ e
        inner = inner - link.WtUinv @ (
            link.W @ as_vector(e_neighbors[j], f"e[{j}]")
            + link.F @ as_vector(eps[j], f"eps[{j}]")
        )
    return plant.A @ e - plant.B @ as_vector(w, "w") - spd_solve(K, inner)

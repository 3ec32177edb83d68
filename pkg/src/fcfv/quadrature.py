"""Symmetric quadrature rules on simplices.

Points are given in barycentric coordinates (one row per point, ``dim + 1``
columns) and weights are normalised to sum to one, so that

    integral over T of f  ~=  |T| * sum_k w_k f(x_k).
"""

from typing import NamedTuple

import numpy as np


class Rule(NamedTuple):
    bary: np.ndarray
    weights: np.ndarray
    degree: int

    def points(self, vertices):
        """Physical points for one simplex (``vertices`` is ``(dim+1, dim)``)
        or a batch of simplices (``(n, dim+1, dim)``)."""
        return np.einsum("qa,...ad->...qd", self.bary, vertices)


def _orbit(*coords):
    """All distinct permutations of a barycentric tuple, in sorted order."""
    from itertools import permutations

    return sorted(set(permutations(coords)))


def _build(orbits, degree):
    bary, weights = [], []
    for coords, w in orbits:
        pts = _orbit(*coords)
        bary.extend(pts)
        weights.extend([w] * len(pts))
    return Rule(np.array(bary, dtype=float), np.array(weights, dtype=float), degree)


# Gauss-Legendre on an edge, exact to degree 5.
_g = np.sqrt(0.6)
EDGE_GAUSS3 = Rule(
    np.array([[0.5 * (1 + _g), 0.5 * (1 - _g)], [0.5, 0.5], [0.5 * (1 - _g), 0.5 * (1 + _g)]]),
    np.array([5.0, 8.0, 5.0]) / 18.0,
    5,
)

# Triangles.
TRI_EDGE_MIDPOINTS = _build([((0.5, 0.5, 0.0), 1.0 / 3.0)], 2)
TRI_STRANG_FIX4 = Rule(
    np.array([[1 / 3, 1 / 3, 1 / 3]] + _orbit(0.6, 0.2, 0.2), dtype=float),
    np.array([-27.0 / 48.0] + [25.0 / 48.0] * 3),
    3,
)
TRI_DUNAVANT6 = _build(
    [
        ((0.44594849091596488632, 0.44594849091596488632, 0.10810301816807022736),
         0.22338158967801146570),
        ((0.09157621350977074346, 0.09157621350977074346, 0.81684757298045851308),
         0.10995174365532186764),
    ],
    4,
)

# Tetrahedra.
_a = 0.58541019662496845446
_b = 0.13819660112501051518
TET_4POINT = _build([((_a, _b, _b, _b), 0.25)], 2)
TET_KEAST11 = _build(
    [
        ((0.25, 0.25, 0.25, 0.25), -0.0789333333333333333333),
        ((0.785714285714285714286, 0.0714285714285714285714,
          0.0714285714285714285714, 0.0714285714285714285714), 0.0457333333333333333333),
        ((0.399403576166799219, 0.399403576166799219,
          0.100596423833200785, 0.100596423833200785), 0.149333333333333333333),
    ],
    4,
)


def face_rule(dim):
    """Rule used for boundary-data averages on a face of a ``dim``-simplex."""
    return EDGE_GAUSS3 if dim == 2 else TRI_STRANG_FIX4


def cell_rule(dim, degree):
    """Cheapest rule in the table that is exact to ``degree`` on a cell."""
    table = {2: [TRI_EDGE_MIDPOINTS, TRI_DUNAVANT6], 3: [TET_4POINT, TET_KEAST11]}
    for rule in table[dim]:
        if rule.degree >= degree:
            return rule
    raise ValueError(f"no {dim}D rule of degree {degree}")

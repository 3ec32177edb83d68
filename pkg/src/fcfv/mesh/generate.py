"""Structured, distorted and stretched mesh generators."""

from itertools import permutations

import numpy as np
from scipy.optimize import brentq

from .core import MeshError, SimplicialMesh, signed_volumes, stretching_factor


def _box(dim, domain_box):
    if domain_box is None:
        return np.array([[0.0, 1.0]] * dim)
    box = np.asarray(domain_box, dtype=float)
    if box.shape != (dim, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise MeshError(f"domain_box must be {dim} (lo, hi) pairs with lo < hi")
    return box


def _grid_cells_2d(n):
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.ravel(order="F"), j.ravel(order="F")
    v = lambda a, b: a + b * (n + 1)  # noqa: E731
    v00, v10, v01, v11 = v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def _grid_cells_3d(n):
    m = n + 1
    i, j, k = (a.ravel(order="F") for a in np.meshgrid(*(np.arange(n),) * 3, indexing="ij"))
    base = np.stack([i, j, k], axis=1)
    tets = []
    # Kuhn subdivision: one tetrahedron per monotone path from corner 000 to 111
    for perm in permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] += 1
            path.append(corner.copy())
        idx = [(base + p) @ np.array([1, m, m * m]) for p in path]
        tets.append(np.stack(idx, axis=1))
    return np.stack(tets, axis=1).reshape(-1, 4)


def structured_from_coords(coords):
    """Tensor-product simplicial mesh from per-axis node coordinates.

    All axes must carry the same number of intervals.
    """
    coords = [np.asarray(c, dtype=float) for c in coords]
    dim = len(coords)
    n = len(coords[0]) - 1
    if any(len(c) != n + 1 for c in coords):
        raise MeshError("every axis needs the same number of intervals")
    grids = np.meshgrid(*coords, indexing="ij")
    vertices = np.stack([g.ravel(order="F") for g in grids], axis=1)
    cells = _grid_cells_2d(n) if dim == 2 else _grid_cells_3d(n)
    return SimplicialMesh.from_cells(vertices, cells)


def generate_structured(dim, n_per_side, domain_box=None):
    """Split an ``n^dim`` grid of boxes into simplices.

    2D squares are cut along the (lo, lo)-(hi, hi) diagonal; 3D cubes are cut
    into the six Kuhn tetrahedra. All boundary faces are tagged Dirichlet.
    """
    if dim not in (2, 3):
        raise MeshError("dim must be 2 or 3")
    if int(n_per_side) != n_per_side or n_per_side < 1:
        raise MeshError(f"n_per_side must be a positive integer, got {n_per_side}")
    box = _box(dim, domain_box)
    coords = [np.linspace(lo, hi, int(n_per_side) + 1) for lo, hi in box]
    return structured_from_coords(coords)


def distort(mesh, magnitude_fraction=0.3, seed=0, retries=5):
    """Randomly move interior vertices.

    Each interior vertex moves by a vector drawn uniformly from the ball of
    radius ``magnitude_fraction`` times its shortest incident edge. Boundary
    vertices stay put. If a cell inverts, the same displacements are halved
    and retried.
    """
    if not 0 <= magnitude_fraction < 0.5:
        raise MeshError("magnitude_fraction must lie in [0, 0.5)")
    if magnitude_fraction == 0:
        return mesh
    rng = np.random.default_rng(seed)
    dim = mesh.dim
    edges = mesh.edges()
    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    lmin = np.full(mesh.n_vertices, np.inf)
    np.minimum.at(lmin, edges[:, 0], lengths)
    np.minimum.at(lmin, edges[:, 1], lengths)

    direction = rng.normal(size=(mesh.n_vertices, dim))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    radius = rng.random(mesh.n_vertices) ** (1.0 / dim)
    step = direction * (radius * lmin)[:, None]
    step[mesh.boundary_vertices()] = 0.0

    fraction = magnitude_fraction
    for _ in range(retries + 1):
        moved = mesh.vertices + fraction * step
        if np.all(signed_volumes(moved, mesh.cells) > 0):
            return mesh.with_vertices(moved)
        fraction *= 0.5
    raise MeshError(f"distortion inverted cells after {retries} halvings")


def _graded(n, first, length):
    """``n`` geometrically growing intervals, the first of size ``first``,
    summing to ``length``."""
    if first * n >= length or n < 2:
        return np.linspace(0.0, length, n + 1)
    # the last width alone cannot exceed the length, which bounds the ratio
    top = (length / first) ** (1.0 / (n - 1))
    ratio = brentq(lambda r: first * np.expm1(n * np.log(r)) / (r - 1) - length, 1 + 1e-12, top)
    widths = first * ratio ** np.arange(n)
    nodes = np.concatenate([[0.0], np.cumsum(widths)])
    nodes[-1] = length
    return nodes


def stretch(n_per_side, s, dim=2, domain_box=None):
    """Structured mesh with layers graded toward the lower boundary of the
    last axis, tuned so that :func:`stretching_factor` equals ``s``.

    When ``s`` is at or below the ratio of the uniform mesh, the uniform mesh
    is returned.
    """
    if s < 1:
        raise MeshError(f"stretching factor must be >= 1, got {s}")
    box = _box(dim, domain_box)
    uniform = generate_structured(dim, n_per_side, box)
    if s <= stretching_factor(uniform):
        return uniform
    n = int(n_per_side)
    lo, hi = box[-1]
    length = hi - lo
    base = [np.linspace(a, b, n + 1) for a, b in box[:-1]]

    def build(first):
        return structured_from_coords(base + [lo + _graded(n, first, length)])

    def excess(log_first):
        return np.log(stretching_factor(build(np.exp(log_first)))) - np.log(s)

    upper = np.log(length / n)
    lower = upper - np.log(s) - 5.0
    first = np.exp(brentq(excess, lower, upper, xtol=1e-12))
    return build(first)

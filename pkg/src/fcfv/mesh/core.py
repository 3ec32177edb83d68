"""Simplicial mesh with face-based connectivity.

Local face ``j`` of a cell is the face opposite local vertex ``j``; its nodes
are every local vertex except ``j``. Faces are numbered globally in
lexicographic order of their sorted vertex tuples, which makes assembled
sparsity patterns reproducible.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np

INTERIOR = 0
DIRICHLET = 1
NEUMANN = 2

TAG_NAMES = {DIRICHLET: "dirichlet", NEUMANN: "neumann"}
TAG_CODES = {name: code for code, name in TAG_NAMES.items()}


class MeshError(ValueError):
    pass


class NonManifoldError(MeshError):
    pass


class DegenerateCellError(MeshError):
    def __init__(self, cells):
        self.cells = np.atleast_1d(cells)
        super().__init__(f"degenerate (zero-volume) cell(s): {self.cells[:10].tolist()}")


def local_faces(dim):
    """``(dim+1, dim)`` table of local node indices for each local face."""
    n = dim + 1
    return np.array([[k for k in range(n) if k != j] for j in range(n)], dtype=np.intp)


def build_connectivity(cells):
    """Deduplicate faces of ``cells`` and link faces with cells.

    Returns
    -------
    faces : (n_faces, dim) int array, each row sorted, rows in lexicographic order.
    cell_faces : (n_cells, dim+1) global face of each local face.
    face_cells : (n_faces, 2) adjacent cells; ``-1`` in column 1 for boundary faces.
        Column 0 holds the lower cell index.
    """
    cells = np.asarray(cells, dtype=np.intp)
    n_cells, n_loc = cells.shape
    dim = n_loc - 1
    all_faces = np.sort(cells[:, local_faces(dim)], axis=2).reshape(-1, dim)
    faces, inverse, counts = np.unique(all_faces, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        bad = faces[counts > 2][0]
        raise NonManifoldError(f"face {bad.tolist()} is shared by more than two cells")
    cell_faces = inverse.reshape(n_cells, n_loc)

    face_cells = np.full((len(faces), 2), -1, dtype=np.intp)
    owner = np.repeat(np.arange(n_cells), n_loc)
    # stable sort keeps the lower cell index first for each face
    order = np.argsort(inverse, kind="stable")
    sorted_faces = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_faces[1:] != sorted_faces[:-1]
    face_cells[sorted_faces[first], 0] = owner[order[first]]
    face_cells[sorted_faces[~first], 1] = owner[order[~first]]
    return faces, cell_faces, face_cells


def signed_volumes(vertices, cells):
    vertices = np.asarray(vertices, dtype=float)
    x = vertices[np.asarray(cells)]
    jac = (x[:, 1:] - x[:, :1]).transpose(0, 2, 1)
    dim = jac.shape[-1]
    return np.linalg.det(jac) / factorial(dim)


def orient(vertices, cells):
    """Swap the last two vertices of negatively oriented cells."""
    cells = np.array(cells, dtype=np.intp, copy=True)
    neg = signed_volumes(vertices, cells) < 0
    cells[neg, -2], cells[neg, -1] = cells[neg, -1].copy(), cells[neg, -2].copy()
    return cells


@dataclass(frozen=True)
class CellGeometry:
    """Measures and outward normals of one cell."""

    volume: float
    face_areas: np.ndarray
    normals: np.ndarray
    h: float


@dataclass(frozen=True)
class GeometryArrays:
    """Batched :class:`CellGeometry` for every cell of a mesh."""

    volume: np.ndarray  # (n_cells,)
    face_areas: np.ndarray  # (n_cells, n_fa)
    normals: np.ndarray  # (n_cells, n_fa, dim)
    h: np.ndarray  # (n_cells,)
    grad_bary: np.ndarray  # (n_cells, n_fa, dim), gradients of barycentric coordinates

    def cell(self, e):
        return CellGeometry(
            float(self.volume[e]), self.face_areas[e].copy(), self.normals[e].copy(), float(self.h[e])
        )


def compute_geometry(vertices, cells, check=True):
    x = np.asarray(vertices, dtype=float)[np.asarray(cells)]
    n_cells, n_loc, dim = x.shape
    jac = (x[:, 1:] - x[:, :1]).transpose(0, 2, 1)
    det = np.linalg.det(jac)
    volume = det / factorial(dim)
    scale = np.max(np.abs(jac), axis=(1, 2)) ** dim if n_cells else np.zeros(0)
    if check:
        bad = np.flatnonzero(~(volume > 1e-14 * scale))
        if bad.size:
            raise DegenerateCellError(bad)
    inv = np.linalg.inv(jac)
    grad = np.empty((n_cells, n_loc, dim))
    grad[:, 1:] = inv
    grad[:, 0] = -inv.sum(axis=1)
    # |Gamma_j| n_j = -dim |Omega| grad(lambda_j)
    area_normal = -dim * volume[:, None, None] * grad
    areas = np.linalg.norm(area_normal, axis=2)
    normals = area_normal / areas[:, :, None]
    i, j = np.triu_indices(n_loc, 1)
    edge_len = np.linalg.norm(x[:, i] - x[:, j], axis=2)
    return GeometryArrays(volume, areas, normals, edge_len.max(axis=1), grad)


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Triangular (2D) or tetrahedral (3D) mesh.

    Build with :meth:`from_cells`; the constructor expects consistent arrays.
    ``face_tags`` holds ``INTERIOR``, ``DIRICHLET`` or ``NEUMANN`` per face.
    """

    vertices: np.ndarray
    cells: np.ndarray
    faces: np.ndarray
    cell_faces: np.ndarray
    face_cells: np.ndarray
    face_tags: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("vertices", "cells", "faces", "cell_faces", "face_cells", "face_tags"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_cells(cls, vertices, cells, face_tags=None, check=True):
        """Orient cells, build connectivity and tag boundary faces.

        ``face_tags`` may be a mapping ``{sorted vertex tuple: tag}`` for
        boundary faces; untagged boundary faces default to Dirichlet.
        """
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshError("vertices must be an (n, 2) or (n, 3) array")
        cells = np.array(cells, dtype=np.intp)
        dim = vertices.shape[1]
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise MeshError(f"cells must have {dim + 1} vertices in {dim}D")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            raise MeshError("cell references a vertex out of range")
        cells = orient(vertices, cells)
        faces, cell_faces, face_cells = build_connectivity(cells)
        tags = np.where(face_cells[:, 1] < 0, DIRICHLET, INTERIOR).astype(np.int8)
        if face_tags:
            lookup = {tuple(f): k for k, f in enumerate(faces.tolist())}
            for key, tag in face_tags.items():
                k = lookup.get(tuple(sorted(key)))
                if k is None or tags[k] == INTERIOR:
                    raise MeshError(f"tagged face {tuple(key)} is not a boundary face")
                tags[k] = tag
        mesh = cls(vertices, cells, faces, cell_faces, face_cells, tags)
        if check:
            mesh.geometry  # raises on degenerate cells
        return mesh

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def boundary_mask(self):
        return self.face_cells[:, 1] < 0

    @property
    def geometry(self):
        if "geometry" not in self._cache:
            self._cache["geometry"] = compute_geometry(self.vertices, self.cells)
        return self._cache["geometry"]

    @cached_property
    def cell_face_signs(self):
        """+1 where the cell is the first neighbour of the face, -1 otherwise."""
        first = self.face_cells[self.cell_faces, 0]
        return np.where(first == np.arange(self.n_cells)[:, None], 1, -1)

    def centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)

    def boundary_vertices(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.faces[self.boundary_mask].ravel()] = True
        return mask

    def edges(self):
        """Unique sorted vertex pairs, lexicographically ordered."""
        i, j = np.triu_indices(self.dim + 1, 1)
        pairs = np.sort(np.stack([self.cells[:, i], self.cells[:, j]], axis=2).reshape(-1, 2), axis=1)
        return np.unique(pairs, axis=0)

    def with_vertices(self, vertices):
        """Same connectivity and tags at new vertex positions."""
        vertices = np.array(vertices, dtype=float)
        if vertices.shape != self.vertices.shape:
            raise MeshError("vertex array shape mismatch")
        mesh = SimplicialMesh(
            vertices, self.cells.copy(), self.faces.copy(), self.cell_faces.copy(),
            self.face_cells.copy(), self.face_tags.copy(),
        )
        mesh.geometry
        return mesh

    def with_tags(self, neumann=None):
        """Retag boundary faces: ``neumann(face_centroids) -> bool mask``.

        Boundary faces not selected become Dirichlet.
        """
        tags = np.where(self.boundary_mask, DIRICHLET, INTERIOR).astype(np.int8)
        if neumann is not None:
            sel = np.asarray(neumann(self.face_centroids()), dtype=bool) & self.boundary_mask
            tags[sel] = NEUMANN
        mesh = SimplicialMesh(
            self.vertices.copy(), self.cells.copy(), self.faces.copy(), self.cell_faces.copy(),
            self.face_cells.copy(), tags,
        )
        mesh._cache.update(self._cache)
        return mesh

    def boundary_tag_map(self):
        """``{sorted face tuple: tag}`` for boundary faces."""
        idx = np.flatnonzero(self.boundary_mask)
        return {tuple(self.faces[k].tolist()): int(self.face_tags[k]) for k in idx}

    def same_topology(self, other):
        return (
            self.dim == other.dim
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.faces, other.faces)
            and np.array_equal(self.face_tags, other.face_tags)
        )


def cell_geometry(mesh, e):
    """Measure, face areas, outward unit normals and longest edge of cell ``e``."""
    if not 0 <= e < mesh.n_cells:
        raise IndexError(f"cell {e} out of range")
    g = compute_geometry(mesh.vertices, mesh.cells[e : e + 1], check=False)
    if not g.volume[0] > 0:
        raise DegenerateCellError([e])
    return g.cell(0)


def stretching_factor(mesh):
    """Maximum over cells of longest-to-shortest edge ratio."""
    x = mesh.vertices[mesh.cells]
    i, j = np.triu_indices(mesh.dim + 1, 1)
    lengths = np.linalg.norm(x[:, i] - x[:, j], axis=2)
    return float(np.max(lengths.max(axis=1) / lengths.min(axis=1)))

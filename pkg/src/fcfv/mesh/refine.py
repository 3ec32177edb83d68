"""Conforming longest-edge bisection driven by a size map."""

import logging
import warnings

import numpy as np
from scipy.spatial import cKDTree

from .core import SimplicialMesh

log = logging.getLogger(__name__)


class RefinementWarning(UserWarning):
    pass


def _edge_table(mesh):
    """Global edges ranked longest first, plus the per-cell edge ids."""
    dim = mesh.dim
    i, j = np.triu_indices(dim + 1, 1)
    pairs = np.sort(np.stack([mesh.cells[:, i], mesh.cells[:, j]], axis=2), axis=2)
    edges, inverse = np.unique(pairs.reshape(-1, 2), axis=0, return_inverse=True)
    cell_edges = inverse.reshape(mesh.n_cells, len(i))
    length = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    # rank 0 = longest; ties broken by the vertex pair so the order is global
    order = np.lexsort((edges[:, 1], edges[:, 0], -length))
    rank = np.empty(len(edges), dtype=np.intp)
    rank[order] = np.arange(len(edges))
    return edges, cell_edges, rank


def bisect(mesh, flagged):
    """One conforming refinement pass.

    The longest edge of every flagged cell is marked, the mark set is closed
    so that any cell touching a marked edge also has its longest edge marked,
    and every cell is then split recursively at its marked edges, highest
    ranked first. A shared face sees its edges split in the same global order
    from both sides, so no hanging nodes remain.
    """
    flagged = np.asarray(flagged, dtype=bool)
    if not flagged.any():
        return mesh
    edges, cell_edges, rank = _edge_table(mesh)
    longest = cell_edges[np.arange(mesh.n_cells), np.argmin(rank[cell_edges], axis=1)]
    marked = np.zeros(len(edges), dtype=bool)
    marked[longest[flagged]] = True
    while True:
        touched = marked[cell_edges].any(axis=1)
        if marked[longest[touched]].all():
            break
        marked[longest[touched]] = True

    marked_ids = np.flatnonzero(marked)
    n_old = mesh.n_vertices
    midpoints = mesh.vertices[edges[marked_ids]].mean(axis=1)
    vertices = np.vstack([mesh.vertices, midpoints])
    split_at = {(int(a), int(b)): (n_old + k, int(rank[e]))
                for k, (e, (a, b)) in enumerate(zip(marked_ids, edges[marked_ids]))}
    # provenance of each new vertex: the parent vertices it lies between
    support = {n_old + k: (int(a), int(b)) for k, (a, b) in enumerate(edges[marked_ids])}

    def split(cell):
        best = None
        for p in range(len(cell)):
            for q in range(p + 1, len(cell)):
                key = (min(cell[p], cell[q]), max(cell[p], cell[q]))
                hit = split_at.get(key)
                if hit is not None and (best is None or hit[1] < best[0]):
                    best = (hit[1], p, q, hit[0])
        if best is None:
            return [cell]
        _, p, q, mid = best
        a, b = list(cell), list(cell)
        a[q] = mid
        b[p] = mid
        return split(a) + split(b)

    new_cells = []
    for e, cell in enumerate(mesh.cells.tolist()):
        if marked[cell_edges[e]].any():
            new_cells.extend(split(cell))
        else:
            new_cells.append(cell)

    parent_tags = mesh.boundary_tag_map()

    def parent_key(face):
        keys = set()
        for v in face:
            keys.update(support.get(v, (v,)))
        return tuple(sorted(keys))

    out = SimplicialMesh.from_cells(vertices, new_cells, check=False)
    tags = {}
    for k in np.flatnonzero(out.boundary_mask):
        face = tuple(out.faces[k].tolist())
        tag = parent_tags.get(parent_key(face))
        if tag is not None:
            tags[face] = tag
    out = SimplicialMesh.from_cells(vertices, new_cells, face_tags=tags)
    return out


class CellLocator:
    """Point-in-cell lookup for piecewise-constant fields on a mesh."""

    def __init__(self, mesh, k=12):
        self.mesh = mesh
        self.k = min(k, mesh.n_cells)
        self.tree = cKDTree(mesh.centroids())
        self.grad = mesh.geometry.grad_bary
        self.origin = mesh.vertices[mesh.cells[:, 0]]

    def locate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        _, cand = self.tree.query(points, k=self.k)
        cand = cand.reshape(len(points), -1)
        # barycentric coordinates of every point in each candidate
        rel = points[:, None, :] - self.origin[cand]
        lam = np.einsum("pcjd,pcd->pcj", self.grad[cand][:, :, 1:], rel)
        lam0 = 1.0 - lam.sum(axis=2)
        worst = np.minimum(lam.min(axis=2), lam0)
        best = np.argmax(worst, axis=1)
        return cand[np.arange(len(points)), best]


def piecewise_constant(mesh, values):
    """Size function evaluating ``values[cell containing x]``."""
    locator = CellLocator(mesh)
    values = np.asarray(values, dtype=float)

    def size_at_point(points):
        return values[locator.locate(points)]

    return size_at_point


def refine_by_sizemap(base_mesh, size_at_point, max_depth=12):
    """Bisect cells of ``base_mesh`` until every longest edge is below the
    size map evaluated at the cell centroid.

    Stops after ``max_depth`` passes; oversized cells left at that point are
    reported with a :class:`RefinementWarning`.
    """
    mesh = base_mesh
    for _ in range(max_depth):
        flagged = mesh.geometry.h > size_at_point(mesh.centroids()) * (1 + 1e-12)
        if not flagged.any():
            return mesh
        mesh = bisect(mesh, flagged)
    oversized = np.flatnonzero(mesh.geometry.h > size_at_point(mesh.centroids()) * (1 + 1e-12))
    if oversized.size:
        warnings.warn(
            f"depth cap {max_depth} reached with {oversized.size} oversized cells",
            RefinementWarning,
            stacklevel=2,
        )
    return mesh

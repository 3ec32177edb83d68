"""Helpers shared by the Poisson and Stokes discretisations."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .mesh.core import DIRICHLET, NEUMANN
from .quadrature import cell_rule, face_rule
from .smalldense import NO_PROJECTION, WITH_PROJECTION

_ALIASES = {
    "second": WITH_PROJECTION,
    WITH_PROJECTION: WITH_PROJECTION,
    "first": NO_PROJECTION,
    NO_PROJECTION: NO_PROJECTION,
}


def variant_of(name):
    """Map ``second``/``first`` (or the cell-matrix names) to a cell-matrix variant."""
    try:
        return _ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; use 'second' or 'first'") from None


def short_variant(name):
    return "second" if variant_of(name) == WITH_PROJECTION else "first"


def boundary_normals(mesh, faces):
    """Outward unit normal of each boundary face, taken from its single cell."""
    cell = mesh.face_cells[faces, 0]
    local = np.argmax(mesh.cell_faces[cell] == np.asarray(faces)[:, None], axis=1)
    return mesh.geometry.normals[cell, local]


def face_average(mesh, faces, fn, with_normal=False):
    """Quadrature average of ``fn`` over each face in ``faces``.

    ``fn(x)`` (or ``fn(x, n)`` with ``with_normal``) receives points shaped
    ``(n_faces, n_points, dim)`` and returns ``(n_faces, n_points, ...)``.
    """
    faces = np.asarray(faces, dtype=np.intp)
    rule = face_rule(mesh.dim)
    x = rule.points(mesh.vertices[mesh.faces[faces]])
    try:
        if with_normal:
            n = np.broadcast_to(boundary_normals(mesh, faces)[:, None, :], x.shape)
            vals = np.asarray(fn(x, n), dtype=float)
        else:
            vals = np.asarray(fn(x), dtype=float)
    except Exception as exc:
        raise ValueError(f"boundary data evaluation failed on faces {faces[:5].tolist()}...: {exc}") from exc
    return np.einsum("q,fq...->f...", rule.weights, vals)


def face_sets(mesh):
    """Local tag masks per cell: Dirichlet, Neumann and non-Dirichlet faces."""
    tags = mesh.face_tags[mesh.cell_faces]
    is_d = tags == DIRICHLET
    return is_d, tags == NEUMANN, ~is_d


def trace_numbering(mesh):
    """Index of each non-Dirichlet face in the trace unknowns, ``-1`` otherwise."""
    free = mesh.face_tags != DIRICHLET
    dof = np.full(mesh.n_faces, -1, dtype=np.intp)
    dof[free] = np.arange(np.count_nonzero(free))
    return dof


def taus_per_face(mesh, tau):
    tau = np.asarray(tau, dtype=float)
    if tau.ndim == 0:
        tau = np.full(mesh.n_faces, float(tau))
    if tau.shape != (mesh.n_faces,):
        raise ValueError("tau must be a scalar or one value per face")
    if np.any(~(tau > 0)):
        raise ValueError("stabilisation parameter must be positive")
    return tau


@dataclass(frozen=True)
class L2Errors:
    """Error norms keyed by field; ``absolute`` lists fields whose exact
    solution has zero norm, for which the absolute error is reported."""

    values: Dict[str, float]
    absolute: Tuple[str, ...] = ()

    def __getitem__(self, key):
        return self.values[key]

    def __iter__(self):
        return iter(self.values.values())


def cell_quadrature(mesh, degree=4):
    """Physical points ``(n_cells, q, dim)``, barycentrics and weights times volume."""
    rule = cell_rule(mesh.dim, degree)
    x = rule.points(mesh.vertices[mesh.cells])
    w = mesh.geometry.volume[:, None] * rule.weights[None, :]
    return x, rule.bary, w


def relative_l2(diff_sq, exact_sq, w):
    """``sqrt(sum w diff^2) / sqrt(sum w exact^2)`` and whether it fell back
    to the absolute error."""
    num = np.sqrt(np.sum(w * diff_sq))
    den = np.sqrt(np.sum(w * exact_sq))
    if den == 0:
        return float(num), True
    return float(num / den), False

"""Face-centred finite volume discretisation of the Poisson problem.

Unknowns: one trace value per non-Dirichlet face. Per cell, the solution
is linear (nodal values) and its gradient ``q = -grad u`` constant; both are
eliminated cell by cell and recovered after the trace solve.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import linalg
from .common import (
    L2Errors,
    cell_quadrature,
    face_average,
    face_sets,
    relative_l2,
    short_variant,
    taus_per_face,
    trace_numbering,
    variant_of,
)
from .mesh.core import DIRICHLET, NEUMANN, SimplicialMesh
from .smalldense import build_me, invert_cellmatrix, projection_matrix


@dataclass(frozen=True, eq=False)
class PoissonProblem:
    """``-div grad u = s`` with ``u = u_D`` on Dirichlet and ``n . grad u = t``
    on Neumann faces. ``neumann_data`` is called as ``t(x, n)``."""

    mesh: SimplicialMesh
    source: Callable
    dirichlet_data: Callable
    neumann_data: Optional[Callable] = None
    tau: object = 1e2

    @classmethod
    def from_spec(cls, spec, mesh, tau=None):
        """Tag ``mesh`` with the problem's boundary layout and wrap the exact data."""
        if spec.equation != "poisson":
            raise ValueError(f"{spec.name} is not a Poisson problem")
        mesh = mesh.with_tags(spec.neumann)
        return cls(mesh, spec.source, spec.dirichlet, spec.neumann_data,
                   spec.tau if tau is None else tau)

    def face_taus(self):
        return taus_per_face(self.mesh, self.tau)


def face_data(problem, faces=None):
    """Face averages of ``u_D`` on Dirichlet and ``t`` on Neumann faces.

    Returns a per-face array (zero on other faces), or the values for the
    requested ``faces``.
    """
    mesh = problem.mesh
    out = np.zeros(mesh.n_faces)
    d = np.flatnonzero(mesh.face_tags == DIRICHLET)
    nm = np.flatnonzero(mesh.face_tags == NEUMANN)
    if d.size:
        out[d] = face_average(mesh, d, problem.dirichlet_data)
    if nm.size:
        if problem.neumann_data is None:
            raise ValueError("mesh has Neumann faces but no Neumann data was given")
        out[nm] = face_average(mesh, nm, problem.neumann_data, with_normal=True)
    return out if faces is None else out[faces]


@dataclass(frozen=True, eq=False)
class PoissonLocalPrecomp:
    """Per-cell quantities of the local problem, batched over cells.

    b: (n_cells, n) right-hand side from source and Dirichlet faces.
    z: (n_cells, dim) sum of |G_j| n_j u_D,j over Dirichlet faces.
    m_inv: (n_cells, n, n).
    r: (n_cells, n_fa, n) row j is |G_j| p_j.
    """

    variant: str
    b: np.ndarray
    z: np.ndarray
    m_inv: np.ndarray
    r: np.ndarray
    taus: np.ndarray  # (n_cells, n_fa)
    face_values: np.ndarray  # (n_faces,) boundary data


def local_precompute(problem, variant="second", face_values=None):
    mesh = problem.mesh
    geo = mesh.geometry
    n = mesh.dim + 1
    is_d, _, _ = face_sets(mesh)
    taus = problem.face_taus()[mesh.cell_faces]
    if face_values is None:
        face_values = face_data(problem)
    u_d = np.where(is_d, face_values[mesh.cell_faces], 0.0)

    proj = projection_matrix(mesh.dim)
    area = geo.face_areas
    r = area[:, :, None] * proj[None]
    s_c = np.asarray(problem.source(mesh.centroids()), dtype=float)
    f = np.repeat((s_c * geo.volume / n)[:, None], n, axis=1)
    b = f + np.einsum("ej,ejI->eI", taus * u_d, r)
    z = np.einsum("ej,ejd->ed", area * u_d, geo.normals)
    m = build_me(area, taus, variant_of(variant))
    return PoissonLocalPrecomp(variant_of(variant), b, z, invert_cellmatrix(m), r, taus, face_values)


def switch_variant(pre, mesh, variant):
    """Same precomputation with the cell matrix rebuilt for ``variant``;
    nothing else in the local problem depends on it."""
    variant = variant_of(variant)
    if variant == pre.variant:
        return pre
    m = build_me(mesh.geometry.face_areas, pre.taus, variant)
    return replace(pre, variant=variant, m_inv=invert_cellmatrix(m))


def element_contributions(mesh, pre):
    """Dense cell blocks ``K_e`` (n_cells, n_fa, n_fa) and ``f_e`` (n_cells, n_fa)
    over all local faces; rows/columns of Dirichlet faces are discarded at
    assembly."""
    geo = mesh.geometry
    area, normals, vol = geo.face_areas, geo.normals, geo.volume
    taus = pre.taus
    _, is_n, _ = face_sets(mesh)
    proj = projection_matrix(mesh.dim)
    # p_i . (m^-1 r_j)
    pmr = np.einsum("iI,eIJ,ejJ->eij", proj, pre.m_inv, pre.r)
    nn = np.einsum("eid,ejd->eij", normals, normals)
    k = area[:, :, None] * (
        taus[:, :, None] * taus[:, None, :] * pmr
        - nn * area[:, None, :] / vol[:, None, None]
        - taus[:, :, None] * np.eye(len(proj))[None]
    )
    pmb = np.einsum("iI,eIJ,eJ->ei", proj, pre.m_inv, pre.b)
    t = np.where(is_n, pre.face_values[mesh.cell_faces], 0.0)
    f = area * (np.einsum("eid,ed->ei", normals, pre.z) / vol[:, None] - taus * pmb - t)
    return k, f


def _triplets(mesh, k, f, dof):
    cell_dof = dof[mesh.cell_faces]
    n_fa = cell_dof.shape[1]
    rows = np.repeat(cell_dof[:, :, None], n_fa, axis=2)
    cols = np.repeat(cell_dof[:, None, :], n_fa, axis=1)
    keep = (rows >= 0) & (cols >= 0)
    origin = np.broadcast_to(np.arange(mesh.n_cells)[:, None, None], rows.shape)
    frow = cell_dof[cell_dof >= 0]
    return rows[keep], cols[keep], k[keep], origin[keep], frow, f[cell_dof >= 0]


def assemble_global(problem, variant="second", pre=None):
    """Trace system ``K u_hat = f`` over non-Dirichlet faces."""
    mesh = problem.mesh
    if pre is None:
        pre = local_precompute(problem, variant)
    dof = trace_numbering(mesh)
    n = int(dof.max()) + 1 if dof.size and dof.max() >= 0 else 0
    k, f = element_contributions(mesh, pre)
    rows, cols, vals, origin, frow, fvals = _triplets(mesh, k, f, dof)
    rhs = linalg.assemble_vector(frow, fvals, n)
    return linalg.assemble(rows, cols, vals, n, rhs=rhs, origin=origin)


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    """Trace per face (Dirichlet faces hold their data), nodal ``u`` and
    constant ``q`` per cell."""

    mesh: SimplicialMesh
    variant: str
    trace: np.ndarray  # (n_faces,)
    u: np.ndarray  # (n_cells, dim+1)
    q: np.ndarray  # (n_cells, dim)
    dof: np.ndarray
    system_size: int
    timings: dict = field(default_factory=dict)

    @property
    def free_trace(self):
        return self.trace[self.dof >= 0]


def recover(mesh, pre, trace):
    """Cellwise ``(u, q)`` from the full per-face trace."""
    geo = mesh.geometry
    _, _, is_b = face_sets(mesh)
    uhat = np.where(is_b, trace[mesh.cell_faces], 0.0)
    q = -(pre.z + np.einsum("ej,ejd->ed", geo.face_areas * uhat, geo.normals)) / geo.volume[:, None]
    rhs = pre.b + np.einsum("ej,ejI->eI", pre.taus * uhat, pre.r)
    u = np.einsum("eIJ,eJ->eI", pre.m_inv, rhs)
    return u, q


def solve(problem, variant="second", method="direct", tol=1e-10, pre=None):
    mesh = problem.mesh
    t0 = time.perf_counter()
    pre = local_precompute(problem, variant) if pre is None else switch_variant(pre, mesh, variant)
    system = assemble_global(problem, variant, pre)
    t1 = time.perf_counter()
    x = linalg.solve(system, method, tol)
    t2 = time.perf_counter()
    dof = trace_numbering(mesh)
    trace = np.where(mesh.face_tags == DIRICHLET, pre.face_values, 0.0)
    trace[dof >= 0] = x
    u, q = recover(mesh, pre, trace)
    t3 = time.perf_counter()
    timings = {"assembly": t1 - t0, "solve": t2 - t1, "recovery": t3 - t2}
    return PoissonSolution(mesh, short_variant(variant), trace, u, q, dof, system.n, timings)


def numerical_flux(problem, sol, pre=None):
    """``n . q_hat`` on every local face, ``(n_cells, n_fa)``."""
    mesh = problem.mesh
    if pre is None:
        pre = local_precompute(problem, sol.variant)
    proj = projection_matrix(mesh.dim)
    nq = np.einsum("ejd,ed->ej", mesh.geometry.normals, sol.q)
    p0u = np.einsum("jI,eI->ej", proj, sol.u)
    return nq + pre.taus * (p0u - sol.trace[mesh.cell_faces])


def evaluate(sol, bary):
    """Linear field at barycentric points: ``(n_cells, n_points)``."""
    return np.einsum("qI,eI->eq", bary, sol.u)


def l2_errors(sol, exact_u, exact_grad):
    """Relative L2 errors of ``u`` and ``q = -grad u`` (degree-4 quadrature)."""
    x, bary, w = cell_quadrature(sol.mesh, degree=4)
    ue = exact_u(x)
    err_u, abs_u = relative_l2((ue - evaluate(sol, bary)) ** 2, ue**2, w)
    qe = -exact_grad(x)
    err_q, abs_q = relative_l2(
        np.sum((qe - sol.q[:, None, :]) ** 2, axis=-1), np.sum(qe**2, axis=-1), w
    )
    absolute = tuple(name for name, flag in (("u", abs_u), ("q", abs_q)) if flag)
    return L2Errors({"u": err_u, "q": err_q}, absolute)

"""Face-centred finite volume discretisation of the Stokes problem.

Global unknowns: a velocity vector per non-Dirichlet face followed by one
mean pressure per cell. Without Neumann faces the pressure is fixed by one
extra bordering row enforcing ``sum_e |dOmega_e| rho_e = 0``.
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


class CompatibilityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StokesProblem:
    """``-nu lap u + grad p = s``, ``div u = 0``; Dirichlet velocity and
    Neumann pseudo-traction ``t(x, n) = nu (n . grad) u - p n``."""

    mesh: SimplicialMesh
    body_force: Callable
    dirichlet_data: Callable
    pseudo_traction: Optional[Callable] = None
    nu: float = 1.0
    tau: object = 1e2

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("viscosity must be positive")

    @classmethod
    def from_spec(cls, spec, mesh, tau=None):
        if spec.equation != "stokes":
            raise ValueError(f"{spec.name} is not a Stokes problem")
        mesh = mesh.with_tags(spec.neumann)
        return cls(mesh, spec.source, spec.dirichlet, spec.neumann_data, spec.nu,
                   spec.tau * spec.nu if tau is None else tau)

    def face_taus(self):
        return taus_per_face(self.mesh, self.tau)

    @property
    def has_neumann(self):
        return bool(np.any(self.mesh.face_tags == NEUMANN))


def face_data(problem):
    """Per-face vector data: face average of ``u_D`` on Dirichlet faces and of
    ``t`` on Neumann faces."""
    mesh = problem.mesh
    out = np.zeros((mesh.n_faces, mesh.dim))
    d = np.flatnonzero(mesh.face_tags == DIRICHLET)
    nm = np.flatnonzero(mesh.face_tags == NEUMANN)
    if d.size:
        out[d] = face_average(mesh, d, problem.dirichlet_data)
    if nm.size:
        if problem.pseudo_traction is None:
            raise ValueError("mesh has Neumann faces but no pseudo-traction was given")
        out[nm] = face_average(mesh, nm, problem.pseudo_traction, with_normal=True)
    return out


@dataclass(frozen=True, eq=False)
class StokesLocalPrecomp:
    """Batched local quantities.

    b: (n_cells, dim, n) one scalar right-hand side per velocity component.
    z: (n_cells, dim, dim) sum over Dirichlet faces of |G_j| n_j (x) u_D,j.
    m_inv: (n_cells, n, n) scalar block; the full inverse is I_dim (x) m_inv.
    """

    variant: str
    b: np.ndarray
    z: np.ndarray
    m_inv: np.ndarray
    r: np.ndarray
    taus: np.ndarray
    face_values: np.ndarray

    def block_inverse(self, e):
        """Full ``(dim*n, dim*n)`` inverse for cell ``e`` (component-major)."""
        dim = self.b.shape[1]
        return np.kron(np.eye(dim), self.m_inv[e])


def local_precompute(problem, variant="second", face_values=None):
    mesh = problem.mesh
    geo = mesh.geometry
    n = mesh.dim + 1
    is_d, _, _ = face_sets(mesh)
    taus = problem.face_taus()[mesh.cell_faces]
    if face_values is None:
        face_values = face_data(problem)
    u_d = np.where(is_d[:, :, None], face_values[mesh.cell_faces], 0.0)

    proj = projection_matrix(mesh.dim)
    area = geo.face_areas
    r = area[:, :, None] * proj[None]
    s_c = np.asarray(problem.body_force(mesh.centroids()), dtype=float)
    f = np.repeat((s_c * (geo.volume / n)[:, None])[:, :, None], n, axis=2)
    b = f + np.einsum("ej,ejc,ejI->ecI", taus, u_d, r)
    z = np.einsum("ej,ejd,ejc->edc", area, geo.normals, u_d)
    m = build_me(area, taus, variant_of(variant))
    return StokesLocalPrecomp(variant_of(variant), b, z, invert_cellmatrix(m), r, taus, face_values)


def switch_variant(pre, mesh, variant):
    """Same precomputation with the cell matrix rebuilt for ``variant``;
    nothing else in the local problem depends on it."""
    variant = variant_of(variant)
    if variant == pre.variant:
        return pre
    m = build_me(mesh.geometry.face_areas, pre.taus, variant)
    return replace(pre, variant=variant, m_inv=invert_cellmatrix(m))


def element_contributions(mesh, pre, nu):
    """Scalar velocity-velocity kernel ``(n_cells, n_fa, n_fa)`` (the block is
    this times I_dim), velocity rhs ``(n_cells, n_fa, dim)``, velocity-pressure
    coupling ``(n_cells, n_fa, dim)`` and pressure rhs ``(n_cells,)``."""
    geo = mesh.geometry
    area, normals, vol = geo.face_areas, geo.normals, geo.volume
    taus = pre.taus
    is_d, is_n, _ = face_sets(mesh)
    proj = projection_matrix(mesh.dim)
    pmr = np.einsum("iI,eIJ,ejJ->eij", proj, pre.m_inv, pre.r)
    nn = np.einsum("eid,ejd->eij", normals, normals)
    k = area[:, :, None] * (
        taus[:, :, None] * taus[:, None, :] * pmr
        - nu * nn * area[:, None, :] / vol[:, None, None]
        - taus[:, :, None] * np.eye(len(proj))[None]
    )
    pmb = np.einsum("iI,eIJ,ecJ->eic", proj, pre.m_inv, pre.b)
    n_dot_z = np.einsum("eid,edc->eic", normals, pre.z)
    t = np.where(is_n[:, :, None], pre.face_values[mesh.cell_faces], 0.0)
    f = area[:, :, None] * (nu * n_dot_z / vol[:, None, None] - taus[:, :, None] * pmb - t)
    g = area[:, :, None] * normals
    u_d = np.where(is_d[:, :, None], pre.face_values[mesh.cell_faces], 0.0)
    f_rho = -np.einsum("ej,ejc,ejc->e", area, u_d, normals)
    return k, f, g, f_rho


@dataclass(frozen=True)
class StokesNumbering:
    dof: np.ndarray  # per face, trace index or -1
    n_trace: int
    dim: int
    n_cells: int
    constrained: bool

    @property
    def rho_offset(self):
        return self.dim * self.n_trace

    @property
    def size(self):
        return self.rho_offset + self.n_cells + int(self.constrained)


def numbering(problem):
    mesh = problem.mesh
    dof = trace_numbering(mesh)
    n_trace = int(np.count_nonzero(dof >= 0))
    return StokesNumbering(dof, n_trace, mesh.dim, mesh.n_cells, not problem.has_neumann)


def check_compatibility(problem, face_values, tol=1e-10):
    """Without Neumann faces the Dirichlet data must carry zero net flux."""
    mesh = problem.mesh
    if problem.has_neumann:
        return
    bnd = np.flatnonzero(mesh.boundary_mask)
    cell = mesh.face_cells[bnd, 0]
    local = np.argmax(mesh.cell_faces[cell] == bnd[:, None], axis=1)
    area = mesh.geometry.face_areas[cell, local]
    normal = mesh.geometry.normals[cell, local]
    flux = np.sum(area * np.einsum("fd,fd->f", face_values[bnd], normal))
    scale = max(1.0, float(np.sum(area * np.linalg.norm(face_values[bnd], axis=1))))
    if abs(flux) > tol * scale:
        raise CompatibilityError(f"net boundary flux of Dirichlet data is {flux:.3e}, expected 0")


def assemble_global(problem, variant="second", pre=None):
    mesh = problem.mesh
    dim = mesh.dim
    if pre is None:
        pre = local_precompute(problem, variant)
    check_compatibility(problem, pre.face_values)
    num = numbering(problem)
    k, f, g, f_rho = element_contributions(mesh, pre, problem.nu)

    cell_dof = num.dof[mesh.cell_faces]
    n_fa = dim + 1
    rows_s = np.repeat(cell_dof[:, :, None], n_fa, axis=2)
    cols_s = np.repeat(cell_dof[:, None, :], n_fa, axis=1)
    keep = (rows_s >= 0) & (cols_s >= 0)
    origin = np.broadcast_to(np.arange(mesh.n_cells)[:, None, None], rows_s.shape)[keep]
    rs, cs, ks = rows_s[keep], cols_s[keep], k[keep]
    # only same-component entries exist in the velocity-velocity blocks
    rows = [dim * rs + c for c in range(dim)]
    cols = [dim * cs + c for c in range(dim)]
    vals = [ks] * dim
    origins = [origin] * dim

    free = cell_dof >= 0
    cell_of = np.broadcast_to(np.arange(mesh.n_cells)[:, None], free.shape)[free]
    rho_col = num.rho_offset + cell_of
    for c in range(dim):
        vel = dim * cell_dof[free] + c
        rows += [vel, rho_col]
        cols += [rho_col, vel]
        vals += [g[free][:, c]] * 2
        origins += [cell_of] * 2
    rhs = np.zeros(num.size)
    rhs[: num.rho_offset] = linalg.assemble_vector(
        (dim * cell_dof[free][:, None] + np.arange(dim)).ravel(), f[free].ravel(), num.rho_offset
    )
    rhs[num.rho_offset : num.rho_offset + mesh.n_cells] = f_rho
    if num.constrained:
        perim = mesh.geometry.face_areas.sum(axis=1)
        last = num.size - 1
        rho = num.rho_offset + np.arange(mesh.n_cells)
        rows += [np.full(mesh.n_cells, last), rho]
        cols += [rho, np.full(mesh.n_cells, last)]
        vals += [perim, perim]
        origins += [np.arange(mesh.n_cells)] * 2
    return linalg.assemble(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), num.size,
        rhs=rhs, origin=np.concatenate(origins),
    )


@dataclass(frozen=True, eq=False)
class StokesSolution:
    mesh: SimplicialMesh
    variant: str
    nu: float
    trace: np.ndarray  # (n_faces, dim)
    rho: np.ndarray  # (n_cells,)
    u: np.ndarray  # (n_cells, dim+1, dim) nodal velocities
    L: np.ndarray  # (n_cells, dim, dim)
    dof: np.ndarray
    system_size: int
    timings: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.rho


def recover(mesh, pre, trace, nu):
    geo = mesh.geometry
    _, _, is_b = face_sets(mesh)
    uhat = np.where(is_b[:, :, None], trace[mesh.cell_faces], 0.0)
    sum_nu = np.einsum("ej,ejd,ejc->edc", geo.face_areas, geo.normals, uhat)
    L = -np.sqrt(nu) * (pre.z + sum_nu) / geo.volume[:, None, None]
    rhs = pre.b + np.einsum("ej,ejc,ejI->ecI", pre.taus, uhat, pre.r)
    u = np.einsum("eIJ,ecJ->eIc", pre.m_inv, rhs)
    return u, L


def solve(problem, variant="second", method="direct", tol=1e-10, pre=None):
    mesh = problem.mesh
    t0 = time.perf_counter()
    pre = local_precompute(problem, variant) if pre is None else switch_variant(pre, mesh, variant)
    system = assemble_global(problem, variant, pre)
    t1 = time.perf_counter()
    x = linalg.solve(system, method, tol)
    t2 = time.perf_counter()
    num = numbering(problem)
    trace = np.where((mesh.face_tags == DIRICHLET)[:, None], pre.face_values, 0.0)
    trace[num.dof >= 0] = x[: num.rho_offset].reshape(-1, mesh.dim)
    rho = x[num.rho_offset : num.rho_offset + mesh.n_cells].copy()
    u, L = recover(mesh, pre, trace, problem.nu)
    t3 = time.perf_counter()
    timings = {"assembly": t1 - t0, "solve": t2 - t1, "recovery": t3 - t2}
    return StokesSolution(mesh, short_variant(variant), problem.nu, trace, rho, u, L,
                          num.dof, system.n, timings)


def divergence_residual(sol):
    """Per-cell net face flux of the trace velocity; zero up to the solve."""
    geo = sol.mesh.geometry
    return np.einsum("ej,ejc,ejc->e", geo.face_areas, sol.trace[sol.mesh.cell_faces], geo.normals)


def evaluate(sol, bary):
    """Velocity at barycentric points, ``(n_cells, n_points, dim)``."""
    return np.einsum("qI,eIc->eqc", bary, sol.u)


def l2_errors(sol, exact_u, exact_grad_u, exact_p):
    """Relative L2 errors of velocity, ``L = -sqrt(nu) grad u`` and pressure."""
    x, bary, w = cell_quadrature(sol.mesh, degree=4)
    ue = exact_u(x)
    err_u, abs_u = relative_l2(
        np.sum((ue - evaluate(sol, bary)) ** 2, axis=-1), np.sum(ue**2, axis=-1), w
    )
    le = -np.sqrt(sol.nu) * exact_grad_u(x)
    err_l, abs_l = relative_l2(
        np.sum((le - sol.L[:, None]) ** 2, axis=(-2, -1)), np.sum(le**2, axis=(-2, -1)), w
    )
    pe = exact_p(x)
    err_p, abs_p = relative_l2((pe - sol.p[:, None]) ** 2, pe**2, w)
    flags = (("u", abs_u), ("L", abs_l), ("p", abs_p))
    return L2Errors({"u": err_u, "L": err_l, "p": err_p}, tuple(k for k, v in flags if v))

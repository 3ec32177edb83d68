"""Projection-difference error indicator and the h-adaptive loop.

The second-order solution ``u`` and the first-order one ``u~`` (same
discretisation without the face projection) differ by an amount that
tracks the first-order error. Cells where they disagree are refined.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import poisson, stokes
from .mesh.core import SimplicialMesh
from .mesh.refine import RefinementWarning, piecewise_constant, refine_by_sizemap
from .quadrature import cell_rule

EXPONENT_MODES = ("paper", "richardson")
GROWTH_CAP = 2.0
SHRINK_CAP = 0.25


@dataclass(frozen=True, eq=False)
class IndicatorField:
    E: np.ndarray  # per cell, solution units
    h: np.ndarray  # per cell, longest edge

    @property
    def max_E(self):
        return float(self.E.max()) if self.E.size else 0.0


def _nodal(sol):
    """Nodal values as ``(n_cells, n, n_comp)``."""
    u = np.asarray(sol.u)
    return u[:, :, None] if u.ndim == 2 else u


def cell_rms(mesh, nodal_diff):
    """``[ |cell|^-1 int (sum_c d_c^2) ]^(1/2)`` for linear fields given by nodal
    values ``(n_cells, n, n_comp)``; the degree-2 rule is exact here."""
    rule = cell_rule(mesh.dim, 2)
    vals = np.einsum("qI,eIc->eqc", rule.bary, nodal_diff)
    return np.sqrt(np.einsum("q,eq->e", rule.weights, np.sum(vals**2, axis=-1)))


def indicator(sol_second, sol_first):
    """Cellwise indicator from the two variants on one mesh."""
    if sol_second.mesh is not sol_first.mesh and not sol_second.mesh.same_topology(sol_first.mesh):
        raise ValueError("solutions live on different meshes")
    mesh = sol_second.mesh
    diff = _nodal(sol_first) - _nodal(sol_second)
    return IndicatorField(cell_rms(mesh, diff), mesh.geometry.h.copy())


def exponent(mode, dim):
    if mode == "paper":
        return 2.0 + dim / 2.0
    if mode == "richardson":
        return 1.0 / (1.0 + dim / 2.0)
    raise ValueError(f"unknown exponent mode {mode!r}; use one of {EXPONENT_MODES}")


def target_sizes(field_, epsilon, mode="paper", dim=2):
    """Desired size per cell, ``h (eps / E)^k``, clamped to ``[h/4, 2h]``.

    Cells with ``E = 0`` get the growth cap ``2h``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    k = exponent(mode, dim)
    h = np.asarray(field_.h, dtype=float)
    E = np.asarray(field_.E, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(E > 0, epsilon / np.where(E > 0, E, 1.0), np.inf)
        raw = np.where(np.isinf(ratio), GROWTH_CAP * h, h * ratio**k)
    return np.clip(raw, SHRINK_CAP * h, GROWTH_CAP * h)


@dataclass
class IterationRecord:
    """``exact_error`` is the largest cellwise error of the first-order
    solution, the quantity the indicator estimates (the second-order error is
    of higher order), and ``efficiency = exact_error / max_indicator``.
    ``exact_error_second`` is the error of the delivered solution."""

    iteration: int
    n_cells: int
    max_indicator: float
    exact_error: float = math.nan
    efficiency: float = math.nan
    exact_error_second: float = math.nan


@dataclass
class AdaptResult:
    mesh: SimplicialMesh
    solution: object
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    indicator: Optional[IndicatorField] = None


def _make_problem(spec, mesh, tau):
    cls = poisson.PoissonProblem if spec.equation == "poisson" else stokes.StokesProblem
    return cls.from_spec(spec, mesh, tau=tau)


def solve_pair(problem, method="direct", tol=1e-10):
    """Second- and first-order solutions sharing one local precomputation."""
    mod = poisson if isinstance(problem, poisson.PoissonProblem) else stokes
    pre = mod.local_precompute(problem, "second")
    second = mod.solve(problem, "second", method, tol, pre=pre)
    first = mod.solve(problem, "first", method, tol, pre=pre)
    return second, first


def exact_cell_error(sol, exact_u, degree=4):
    """Per-cell ``[ |cell|^-1 int |u - u_h|^2 ]^(1/2)`` against the exact field."""
    mesh = sol.mesh
    rule = cell_rule(mesh.dim, degree)
    x = rule.points(mesh.vertices[mesh.cells])
    ue = np.asarray(exact_u(x))
    if ue.ndim == 2:
        ue = ue[..., None]
    uh = np.einsum("qI,eIc->eqc", rule.bary, _nodal(sol))
    return np.sqrt(np.einsum("q,eq->e", rule.weights, np.sum((ue - uh) ** 2, axis=-1)))


def adapt_loop(spec, base_mesh, epsilon=None, max_iters=12, mode="paper", tau=None,
               method="direct", tol=1e-10, on_iteration=None):
    """Solve both variants, stop once ``max E <= epsilon``, otherwise remesh
    from ``base_mesh`` with the target size map and repeat.

    ``on_iteration(iteration, mesh, second, first, field)`` is called after
    every solve (used by the harness for per-iteration dumps).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    epsilon = spec.epsilon if epsilon is None else epsilon
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    mesh = base_mesh
    result = AdaptResult(base_mesh, None)
    for it in range(max_iters):
        problem = _make_problem(spec, mesh, tau)
        mesh = problem.mesh
        second, first = solve_pair(problem, method, tol)
        fld = indicator(second, first)
        err = float(exact_cell_error(first, spec.u).max())
        err_second = float(exact_cell_error(second, spec.u).max())
        eff = err / fld.max_E if fld.max_E > 0 else math.nan
        result.history.append(IterationRecord(it, mesh.n_cells, fld.max_E, err, eff, err_second))
        result.mesh, result.solution, result.indicator = mesh, second, fld
        if on_iteration is not None:
            on_iteration(it, mesh, second, first, fld)
        if fld.max_E <= epsilon:
            result.converged = True
            break
        if it == max_iters - 1:
            break
        sizes = target_sizes(fld, epsilon, mode, mesh.dim)
        size_fn = piecewise_constant(mesh, sizes)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RefinementWarning)
            mesh = refine_by_sizemap(base_mesh, size_fn)
    return result

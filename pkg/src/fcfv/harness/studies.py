"""Study drivers: convergence, tau sweep, robustness and adaptivity."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import linalg, poisson, stokes
from ..adaptivity import adapt_loop
from ..mesh import distort, generate_structured, stretch
from ..mesh.core import MeshError
from ..problems import get_problem
from ..smalldense import SingularCellMatrixError

log = logging.getLogger(__name__)

NUMERICAL_ERRORS = (linalg.SolverError, SingularCellMatrixError, MeshError,
                    stokes.CompatibilityError, FloatingPointError)


def fit_rate(h, err):
    """Least-squares slope of ``log err`` against ``log h`` and the slope of
    the last pair. Non-positive errors are skipped."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = (h > 0) & (err > 0) & np.isfinite(err)
    h, err = h[ok], err[ok]
    if len(h) < 2:
        return math.nan, math.nan, math.nan
    slope, intercept = np.polyfit(np.log10(h), np.log10(err), 1)
    last = math.log(err[-1] / err[-2]) / math.log(h[-1] / h[-2])
    return float(slope), float(intercept), float(last)


def error_names(spec):
    return ("u", "q") if spec.equation == "poisson" else ("u", "L", "p")


def build_mesh(dim, n, family="regular", distortion=0.0, seed=0, s=1.0):
    if family == "regular":
        return generate_structured(dim, n)
    if family == "distorted":
        return distort(generate_structured(dim, n), distortion, seed=seed)
    if family == "stretched":
        return stretch(n, s, dim=dim)
    raise ValueError(f"unknown mesh family {family!r}")


def solve_and_measure(spec, mesh, variant, tau=None, solver="direct", tol=1e-10):
    """One solve; returns ``(solution, errors dict, n_unknowns)``."""
    if spec.equation == "poisson":
        prob = poisson.PoissonProblem.from_spec(spec, mesh, tau=tau)
        sol = poisson.solve(prob, variant, solver, tol)
        errs = poisson.l2_errors(sol, spec.u, spec.grad_u)
    else:
        prob = stokes.StokesProblem.from_spec(spec, mesh, tau=tau)
        sol = stokes.solve(prob, variant, solver, tol)
        errs = stokes.l2_errors(sol, spec.u, spec.grad_u, spec.p)
    return sol, dict(errs.values), sol.system_size


@dataclass
class LevelRecord:
    variant: str
    level: int
    h: float
    n_cells: int
    n_unknowns: int
    errors: Dict[str, float]
    timings: Dict[str, float] = field(default_factory=dict)
    status: str = "ok"


@dataclass
class ConvergenceRecord:
    problem: str
    family: str
    names: Tuple[str, ...]
    levels: List[LevelRecord] = field(default_factory=list)
    # (variant, name) -> (lsq slope, intercept, last-pair slope)
    rates: Dict[Tuple[str, str], Tuple[float, float, float]] = field(default_factory=dict)

    def rows(self, variant):
        return [r for r in self.levels if r.variant == variant and r.status == "ok"]

    def rate(self, variant, name):
        return self.rates[(variant, name)][0]

    @property
    def variants(self):
        return tuple(dict.fromkeys(r.variant for r in self.levels))


def _fit_all(record):
    for variant in record.variants:
        rows = record.rows(variant)
        if len(rows) < 3:
            raise RuntimeError(
                f"only {len(rows)} successful levels for the {variant} variant; a fit needs 3")
        h = [r.h for r in rows]
        for name in record.names:
            record.rates[(variant, name)] = fit_rate(h, [r.errors[name] for r in rows])
    return record


def run_convergence(config, family="regular", stretch_factor=1.0):
    spec = get_problem(config.problem)
    levels = config.resolved_levels(spec.dim)
    if len(levels) < 3:
        raise ValueError("a rate fit needs at least 3 mesh levels")
    label = family if family != "stretched" else f"stretched-{stretch_factor:g}"
    record = ConvergenceRecord(spec.name, label, error_names(spec))
    for n in levels:
        mesh = build_mesh(spec.dim, n, family, config.distortion, config.seed, stretch_factor)
        h = float(mesh.geometry.h.max())
        for variant in config.variants:
            try:
                sol, errs, n_unk = solve_and_measure(spec, mesh, variant, config.tau,
                                                     config.solver, config.tol)
            except NUMERICAL_ERRORS as exc:
                log.warning("level %d (%s) failed: %s", n, variant, exc)
                record.levels.append(LevelRecord(variant, n, h, mesh.n_cells, 0,
                                                 {k: math.nan for k in record.names},
                                                 status=f"failed: {exc}"))
                continue
            record.levels.append(LevelRecord(variant, n, h, mesh.n_cells, n_unk, errs,
                                             dict(sol.timings)))
            log.info("%s n=%d %s %s", spec.name, n, variant,
                     " ".join(f"{k}={v:.3e}" for k, v in errs.items()))
    return _fit_all(record)


@dataclass
class TauRecord:
    tau: float
    variant: str
    errors: Dict[str, float]


@dataclass
class TauSweep:
    problem: str
    level: int
    names: Tuple[str, ...]
    records: List[TauRecord] = field(default_factory=list)

    def series(self, variant, name):
        rs = [r for r in self.records if r.variant == variant]
        return np.array([r.tau for r in rs]), np.array([r.errors[name] for r in rs])

    def plateau_onset(self, variant, name="u", factor=1.15):
        """Smallest tau whose error is within ``factor`` of the grid minimum."""
        taus, errs = self.series(variant, name)
        if not len(taus):
            return math.nan
        ok = errs <= factor * np.nanmin(errs)
        return float(taus[ok].min())

    def spread(self, variant, name):
        _, errs = self.series(variant, name)
        return float(np.nanmax(errs) / np.nanmin(errs))


def run_tau_sweep(config):
    spec = get_problem(config.problem)
    mesh = build_mesh(spec.dim, config.level)
    sweep = TauSweep(spec.name, config.level, error_names(spec))
    for tau in config.tau_grid:
        # Stokes keeps the tau = tau0 * nu convention of the problem default
        eff_tau = tau * spec.nu if spec.equation == "stokes" else tau
        for variant in config.variants:
            _, errs, _ = solve_and_measure(spec, mesh, variant, eff_tau, config.solver, config.tol)
            sweep.records.append(TauRecord(float(tau), variant, errs))
    return sweep


@dataclass
class RobustnessResult:
    regular: ConvergenceRecord
    perturbed: List[ConvergenceRecord]

    def rate_deltas(self):
        """``rate(perturbed) - rate(regular)`` per record, variant and field."""
        out = {}
        for rec in self.perturbed:
            for key, (slope, _, _) in rec.rates.items():
                out[(rec.family,) + key] = slope - self.regular.rates[key][0]
        return out


def run_robustness(config):
    regular = run_convergence(config, "regular")
    if config.family == "distortion":
        perturbed = [run_convergence(config, "distorted")]
    else:
        perturbed = [run_convergence(config, "stretched", s) for s in config.stretch_factors]
    return RobustnessResult(regular, perturbed)


def run_adaptivity(config, on_iteration=None):
    spec = get_problem(config.problem)
    base = generate_structured(spec.dim, config.base_n)
    return adapt_loop(spec, base, config.epsilon, config.max_iters, config.exponent_mode,
                      tau=config.tau, method=config.solver, tol=config.tol,
                      on_iteration=on_iteration)

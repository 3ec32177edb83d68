"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 solver or numerical failure,
3 a ``--check`` threshold failed.
"""

import argparse
import logging
import sys
from pathlib import Path

from .. import poisson, stokes
from ..mesh import distort, generate_structured, stretch, write_mesh
from ..problems import catalog, get_problem
from . import checks, output, studies
from .config import ConfigError, load_config

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("fcfv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _csv_floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _study_options(p):
    p.add_argument("--config", type=Path, help="INI file with [common] and per-study sections")
    p.add_argument("--problem", help="catalog problem name")
    p.add_argument("--variant", choices=("first", "second", "both"))
    p.add_argument("--levels", type=_csv_ints, help="mesh levels, e.g. 8,16,32,64")
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--solver", choices=("direct", "cg", "minres", "bicgstab"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plot", dest="plot", action="store_const", const=False,
                   help="skip the SVG figures")
    p.add_argument("--check", action="store_true", help="exit 3 if acceptance thresholds fail")


def _solve_options(p, equation):
    default = "poisson-sine-2d" if equation == "poisson" else "stokes-poly-2d"
    p.add_argument("--problem", default=default)
    p.add_argument("--n", type=int, default=16, help="cells per side of the structured mesh")
    p.add_argument("--variant", choices=("first", "second"), default="second")
    p.add_argument("--tau", type=float)
    p.add_argument("--distortion", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--solver", choices=("direct", "cg", "minres", "bicgstab"), default="direct")
    p.add_argument("--out", default="results")
    p.add_argument("--matrix-market", action="store_true", help="also dump the global matrix (.mtx)")


def build_parser():
    parser = _Parser(prog="fcfv", description="Face-centred finite volume solvers and studies.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for eq in ("poisson", "stokes"):
        _solve_options(sub.add_parser(f"solve-{eq}", help=f"solve one {eq} problem"), eq)

    p = sub.add_parser("convergence", help="mesh convergence study")
    _study_options(p)

    p = sub.add_parser("tau-sweep", help="error as a function of the stabilisation")
    _study_options(p)
    p.add_argument("--tau-grid", type=_csv_floats)
    p.add_argument("--level", type=int)

    p = sub.add_parser("robustness", help="regular against distorted or stretched meshes")
    _study_options(p)
    p.add_argument("--family", choices=("distortion", "stretch"))
    p.add_argument("--distortion", type=float)
    p.add_argument("--stretch-factors", type=_csv_floats)

    p = sub.add_parser("adapt", help="adaptive refinement driven by the projection indicator")
    _study_options(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--base-n", type=int)
    p.add_argument("--exponent-mode", choices=("paper", "richardson"))
    p.add_argument("--dump", action="store_true", help="write mesh and solution of every iteration")

    p = sub.add_parser("mesh-gen", help="write a structured, distorted or stretched mesh")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--distortion", type=float, default=0.0)
    p.add_argument("--stretch", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="mesh file path")

    sub.add_parser("list-problems", help="print the problem catalog")
    return parser


_OVERRIDE_KEYS = ("problem", "variant", "levels", "tau", "seed", "solver", "out", "plot",
                  "tau_grid", "level", "family", "distortion", "stretch_factors", "epsilon",
                  "max_iters", "base_n", "exponent_mode")


def _config(kind, args):
    overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
    return load_config(kind, args.config, overrides)


def _report(results, check):
    failed = False
    for label, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {label}  ({detail})")
        failed |= not ok
    return EXIT_CHECK if (check and failed) else EXIT_OK


def _check_mesh_args(args):
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    if not 0 <= args.distortion < 0.5:
        raise UsageError(f"--distortion must lie in [0, 0.5), got {args.distortion}")


def _cmd_solve(args, equation):
    _check_mesh_args(args)
    spec = get_problem(args.problem)
    if spec.equation != equation:
        raise UsageError(f"{spec.name} is a {spec.equation} problem")
    mesh = generate_structured(spec.dim, args.n)
    if args.distortion:
        mesh = distort(mesh, args.distortion, seed=args.seed)
    mod = poisson if equation == "poisson" else stokes
    cls = poisson.PoissonProblem if equation == "poisson" else stokes.StokesProblem
    prob = cls.from_spec(spec, mesh, tau=args.tau)
    sol = mod.solve(prob, args.variant, args.solver)
    out = output.ensure_dir(args.out)
    stem = out / f"{spec.name}_n{args.n}_{args.variant}"
    paths = output.write_solution(sol, stem)
    if args.matrix_market:
        system = mod.assemble_global(prob, args.variant)
        system.to_matrix_market(f"{stem}.mtx")
        paths.append(Path(f"{stem}.mtx"))
    errs = (poisson.l2_errors(sol, spec.u, spec.grad_u) if equation == "poisson"
            else stokes.l2_errors(sol, spec.u, spec.grad_u, spec.p))
    print(f"{spec.name} n={args.n} {args.variant}: unknowns={sol.system_size} "
          + " ".join(f"err_{k}={v:.4e}" for k, v in errs.values.items()))
    t = sol.timings
    print(f"timings: assembly {t['assembly']:.3f}s solve {t['solve']:.3f}s recovery {t['recovery']:.3f}s")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _print_rates(record):
    for (variant, name), (slope, _, last) in record.rates.items():
        print(f"{record.problem} {record.family} {variant:6s} {name}: rate {slope:.3f} (last pair {last:.3f})")


def _cmd_convergence(args):
    cfg = _config("convergence", args)
    record = studies.run_convergence(cfg)
    out = output.ensure_dir(cfg.out)
    paths = output.write_convergence(record, out)
    paths += output.emit_plotdata(record, out / f"{record.problem}_regular_plot.csv", svg=cfg.plot)
    _print_rates(record)
    for p in paths:
        print(f"wrote {p}")
    spec = get_problem(cfg.problem)
    return _report(checks.check_convergence(record, spec.equation, spec.dim), args.check)


def _cmd_tau_sweep(args):
    cfg = _config("tau-sweep", args)
    sweep = studies.run_tau_sweep(cfg)
    paths = output.write_tau_sweep(sweep, output.ensure_dir(cfg.out))
    for v in cfg.variants:
        print(f"{sweep.problem} {v}: u plateau from tau={sweep.plateau_onset(v):g}; "
              + ", ".join(f"{k} spread {sweep.spread(v, k):.2f}" for k in sweep.names))
    for p in paths:
        print(f"wrote {p}")
    variant = "second" if "second" in cfg.variants else cfg.variants[0]
    return _report(checks.check_tau_sweep(sweep, variant), args.check)


def _cmd_robustness(args):
    cfg = _config("robustness", args)
    result = studies.run_robustness(cfg)
    out = output.ensure_dir(cfg.out)
    paths = []
    for rec in [result.regular, *result.perturbed]:
        paths += output.write_convergence(rec, out)
        paths += output.emit_plotdata(rec, out / f"{rec.problem}_{rec.family}_plot.csv", svg=cfg.plot)
        _print_rates(rec)
    for key, delta in result.rate_deltas().items():
        print(f"rate delta {' '.join(key)}: {delta:+.3f}")
    for p in paths:
        print(f"wrote {p}")
    variant = "second" if "second" in cfg.variants else cfg.variants[0]
    return _report(checks.check_robustness(result, variant), args.check)


def _cmd_adapt(args):
    cfg = _config("adapt", args)
    spec = get_problem(cfg.problem)
    out = output.ensure_dir(cfg.out)
    dumps = []

    def dump(it, mesh, second, first, fld):
        if args.dump:
            write_mesh(mesh, out / f"{spec.name}_adapt_{it:02d}.mesh")
            dumps.extend(output.write_solution(second, out / f"{spec.name}_adapt_{it:02d}"))

    result = studies.run_adaptivity(cfg, on_iteration=dump)
    path = output.write_history(result, out / f"{spec.name}_adapt_history.csv")
    for h in result.history:
        print(f"iter {h.iteration:2d} cells {h.n_cells:7d} max E {h.max_indicator:.3e} "
              f"exact {h.exact_error:.3e} efficiency {h.efficiency:.3f}")
    print(f"{'converged' if result.converged else 'not converged'}; wrote {path}")
    eps = spec.epsilon if cfg.epsilon is None else cfg.epsilon
    return _report(checks.check_adaptivity(result, eps), args.check)


def _cmd_mesh_gen(args):
    _check_mesh_args(args)
    if args.stretch != 1.0:
        mesh = stretch(args.n, args.stretch, dim=args.dim)
    else:
        mesh = generate_structured(args.dim, args.n)
    if args.distortion:
        mesh = distort(mesh, args.distortion, seed=args.seed)
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_cells} cells, {mesh.n_faces} faces")
    return EXIT_OK


def _cmd_list(args):
    for spec in catalog():
        print(f"{spec.name:20s} {spec.equation:8s} dim={spec.dim}  {spec.description}")
    return EXIT_OK


COMMANDS = {
    "solve-poisson": lambda a: _cmd_solve(a, "poisson"),
    "solve-stokes": lambda a: _cmd_solve(a, "stokes"),
    "convergence": _cmd_convergence,
    "tau-sweep": _cmd_tau_sweep,
    "robustness": _cmd_robustness,
    "adapt": _cmd_adapt,
    "mesh-gen": _cmd_mesh_gen,
    "list-problems": _cmd_list,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, KeyError) as exc:
        print(f"fcfv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except studies.NUMERICAL_ERRORS as exc:
        print(f"fcfv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as exc:
        print(f"fcfv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fcfv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

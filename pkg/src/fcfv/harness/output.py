"""CSV tables, log-log plot data and SVG figures.

Result tables hold only deterministic quantities; wall-clock timings go to a
separate ``*_timings.csv`` so that identical runs give byte-identical tables.
"""

import csv
import math
import os
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.10e}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else FLOAT_FMT.format(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


# --- studies ----------------------------------------------------------------


def write_convergence(record, out_dir, stem=None):
    """Per-level errors, fitted rates and timings; returns the written paths."""
    out_dir = Path(out_dir)
    stem = stem or f"{record.problem}_{record.family}"
    names = list(record.names)
    rows = [[r.variant, r.level, r.h, r.n_cells, r.n_unknowns, *[r.errors[k] for k in names], r.status]
            for r in record.levels]
    paths = [write_csv(out_dir / f"{stem}_convergence.csv",
                       ["variant", "n_per_side", "h", "n_cells", "n_unknowns",
                        *[f"err_{k}" for k in names], "status"], rows)]
    rate_rows = [[v, k, *record.rates[(v, k)]] for v in record.variants for k in names]
    paths.append(write_csv(out_dir / f"{stem}_rates.csv",
                           ["variant", "field", "rate_lsq", "intercept", "rate_last_pair"], rate_rows))
    t_rows = [[r.variant, r.level, r.timings.get("assembly", math.nan),
               r.timings.get("solve", math.nan), r.timings.get("recovery", math.nan)]
              for r in record.levels]
    paths.append(write_csv(out_dir / f"{stem}_timings.csv",
                           ["variant", "n_per_side", "precompute_assembly_s", "solve_s", "recovery_s"],
                           t_rows))
    return paths


def write_tau_sweep(sweep, out_dir):
    names = list(sweep.names)
    rows = [[r.variant, r.tau, *[r.errors[k] for k in names]] for r in sweep.records]
    return [write_csv(Path(out_dir) / f"{sweep.problem}_tau_sweep.csv",
                      ["variant", "tau", *[f"err_{k}" for k in names]], rows)]


def write_history(result, path):
    rows = [[h.iteration, h.n_cells, h.max_indicator, h.exact_error, h.efficiency,
             h.exact_error_second] for h in result.history]
    return write_csv(path, ["iteration", "n_cells", "max_indicator", "exact_error", "efficiency",
                            "exact_error_second"], rows)


# --- solutions --------------------------------------------------------------


def write_solution(sol, stem):
    """``<stem>_cells.csv`` and ``<stem>_faces.csv``.

    Poisson cells: id, u0..u{n-1}, q0..q{d-1}. Stokes cells: id, nodal
    velocities ``u{node}_{comp}``, ``L{i}{j}`` row-major, p. Faces: id and
    the trace (one column per component).
    """
    mesh = sol.mesh
    n, dim = mesh.dim + 1, mesh.dim
    ids = np.arange(mesh.n_cells)
    if np.ndim(sol.u) == 2:
        header = ["cell", *[f"u{i}" for i in range(n)], *[f"q{k}" for k in range(dim)]]
        data = np.column_stack([sol.u, sol.q])
        f_header = ["face", "uhat"]
        f_data = sol.trace[:, None]
    else:
        header = ["cell", *[f"u{i}_{c}" for i in range(n) for c in range(dim)],
                  *[f"L{i}{j}" for i in range(dim) for j in range(dim)], "p"]
        data = np.column_stack([sol.u.reshape(mesh.n_cells, -1), sol.L.reshape(mesh.n_cells, -1), sol.p])
        f_header = ["face", *[f"uhat_{c}" for c in range(dim)]]
        f_data = sol.trace
    cells = write_csv(f"{stem}_cells.csv", header, ([int(i), *row] for i, row in zip(ids, data)))
    faces = write_csv(f"{stem}_faces.csv", f_header,
                      ([int(i), *row] for i, row in zip(range(mesh.n_faces), f_data)))
    return [cells, faces]


# --- plot data --------------------------------------------------------------


def emit_plotdata(record, path, variant=None, svg=True):
    """``(log10 h, log10 err)`` per field plus the fitted line, as CSV; with
    ``svg`` a log-log chart is written next to it (same stem, ``.svg``)."""
    path = Path(path)
    variants = record.variants if variant is None else (variant,)
    rows, fits = [], []
    for v in variants:
        h = [r.h for r in record.rows(v)]
        for k in record.names:
            slope, intercept, last = record.rates[(v, k)]
            fits.append((v, k, slope, intercept, last))
            for hh, r in zip(h, record.rows(v)):
                rows.append([v, k, math.log10(hh), math.log10(r.errors[k]) if r.errors[k] > 0 else math.nan])
    out = [write_csv(path, ["variant", "field", "log10_h", "log10_err"], rows)]
    out.append(write_csv(path.with_name(path.stem + "_fit.csv"),
                         ["variant", "field", "slope", "intercept", "slope_last_pair"], fits))
    if svg:
        out.append(plot_convergence(record, path.with_suffix(".svg"), variants))
    return out


def plot_convergence(record, path, variants=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .plotstyle import style

    variants = variants or record.variants
    with style():
        fig, ax = plt.subplots()
        markers = iter("osD^vp<>h*")
        for v in variants:
            rows = record.rows(v)
            h = np.array([r.h for r in rows])
            for k in record.names:
                e = np.array([r.errors[k] for r in rows])
                slope, intercept, _ = record.rates[(v, k)]
                line = ax.loglog(h, e, next(markers, "o"), linestyle="none")[0]
                ax.loglog(h, 10 ** (intercept + slope * np.log10(h)), "-", color=line.get_color(),
                          label=f"{k} ({v}): rate {slope:.3f}")
        ax.set_xlabel("h")
        ax.set_ylabel("relative L2 error")
        ax.set_title(f"{record.problem} ({record.family})")
        ax.legend(loc="best")
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)
    return Path(path)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)

"""Face-coupled sparse systems: triplet assembly and linear solves."""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sps
import scipy.sparse.linalg as spla

METHODS = ("direct", "cg", "minres", "bicgstab")
RESTARTS = 4


class AssemblyError(IndexError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """CSR matrix with sorted column indices and its right-hand side."""

    matrix: sps.csr_matrix
    rhs: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def indptr(self):
        return self.matrix.indptr

    @property
    def indices(self):
        return self.matrix.indices

    @property
    def values(self):
        return self.matrix.data

    @property
    def nnz(self):
        return self.matrix.nnz

    def pattern_bytes(self):
        return (
            self.matrix.indptr.astype(np.int64).tobytes(),
            self.matrix.indices.astype(np.int64).tobytes(),
        )

    def same_pattern(self, other):
        return self.n == other.n and self.pattern_bytes() == other.pattern_bytes()

    def dense(self):
        return self.matrix.toarray()

    def to_matrix_market(self, path):
        scipy.io.mmwrite(str(path), self.matrix.tocoo())


def assemble(rows, cols, vals, n, rhs=None, origin=None):
    """Sum triplets ``(rows[k], cols[k], vals[k])`` into an ``n x n`` CSR matrix.

    Duplicates are added; positions that only ever receive zeros stay in the
    pattern so that the pattern depends on the triplet positions alone.
    ``origin`` optionally names the cell behind each triplet for error reports.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("triplet arrays differ in length")
    bad = (rows < 0) | (rows >= n) | (cols < 0) | (cols >= n)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        where = f" from cell {int(np.ravel(origin)[k])}" if origin is not None else ""
        raise AssemblyError(f"triplet ({rows[k]}, {cols[k]}) out of range for n={n}{where}")
    mat = sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    rhs = np.zeros(n) if rhs is None else np.asarray(rhs, dtype=float)
    if rhs.shape != (n,):
        raise ValueError(f"rhs must have length {n}")
    return SparseSystem(mat, rhs)


def assemble_vector(rows, vals, n):
    out = np.zeros(n)
    np.add.at(out, np.asarray(rows, dtype=np.int64).ravel(), np.asarray(vals, dtype=float).ravel())
    return out


def relative_residual(matrix, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(matrix @ x - b)
    return r / nb if nb > 0 else r


def solve(system, method="direct", tol=1e-10):
    """Solve ``system``; returns the solution vector.

    ``direct`` is SuperLU with partial pivoting. ``cg`` needs a definite
    matrix; a negative definite one (the Poisson trace system in its natural
    sign) is negated before iterating.
    """
    a, b = system.matrix, system.rhs
    n = system.n
    if n == 0:
        return np.zeros(0)
    if not np.any(b):
        return np.zeros(n)
    if method == "direct":
        try:
            lu = spla.splu(a.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"sparse LU failed: {exc}") from exc
        x = lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError("sparse LU produced non-finite values (singular pivot)")
    elif method in ("cg", "minres", "bicgstab"):
        sign = 1.0
        if method == "cg" and np.all(a.diagonal() < 0):
            sign = -1.0
        op = sign * a
        rhs = sign * b
        fn = {"cg": spla.cg, "minres": spla.minres, "bicgstab": spla.bicgstab}[method]
        x, inner = None, tol
        # scipy's minres stops on a residual estimate scaled by ||A|| ||x||,
        # which can sit far above the true relative residual; restart from
        # the last iterate with a tighter inner tolerance until it is met
        for _ in range(RESTARTS):
            x, info = fn(op, rhs, x0=x, rtol=inner, maxiter=10 * n)
            if info > 0:
                raise SolverError(f"{method} hit the iteration cap ({10 * n}) without converging")
            if info < 0:
                raise SolverError(f"{method} breakdown (info={info})")
            if relative_residual(a, x, b) <= tol:
                break
            inner = max(inner * 1e-2, 1e-16)
    else:
        raise ValueError(f"unknown solver {method!r}; choose from {METHODS}")
    res = relative_residual(a, x, b)
    # iterative methods stop on a recursively updated residual; allow drift
    limit = tol if method == "direct" else 10 * tol
    if res > limit:
        raise SolverError(f"{method} relative residual {res:.3e} exceeds {limit:.1e}")
    return x

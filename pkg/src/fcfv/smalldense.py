"""Per-cell dense matrices for the local problems.

All functions accept a single cell or a batch with leading axes; the
trailing axes carry the cell-local structure.
"""

import numpy as np

WITH_PROJECTION = "with_projection"
NO_PROJECTION = "no_projection"
VARIANTS = (WITH_PROJECTION, NO_PROJECTION)


class SingularCellMatrixError(np.linalg.LinAlgError):
    pass


def projection_vector(dim, local_face):
    """Weights that average nodal values over local face ``local_face``.

    The face opposite local node ``j`` contains every other node, each with
    weight ``1/dim``.
    """
    n = dim + 1
    if not 0 <= local_face < n:
        raise IndexError(f"local face {local_face} out of range for a {dim}D simplex")
    p = np.full(n, 1.0 / dim)
    p[local_face] = 0.0
    return p


def projection_matrix(dim):
    """Rows are the projection vectors of every local face."""
    n = dim + 1
    return (1.0 - np.eye(n)) / dim


def build_me(face_areas, taus, variant=WITH_PROJECTION):
    """Cell matrix of the local solution equation.

    with_projection:  sum_k |G_k| tau_k p_k p_k^T (each p_k carrying 1/n_fn)
    no_projection:    sum_k tau_k * exact P1 face mass matrix of face k
    """
    face_areas = np.asarray(getattr(face_areas, "face_areas", face_areas), dtype=float)
    taus = np.broadcast_to(np.asarray(taus, dtype=float), face_areas.shape)
    if np.any(~(taus > 0)):
        raise ValueError("stabilisation parameter must be positive on every face")
    n = face_areas.shape[-1]
    nfn = n - 1
    chi = 1.0 - np.eye(n)  # chi[k, I] = 1 if node I lies on face k
    w = face_areas * taus
    if variant == WITH_PROJECTION:
        return np.einsum("...k,kI,kJ->...IJ", w / nfn**2, chi, chi)
    if variant == NO_PROJECTION:
        mass = (1.0 + np.eye(n)) / (nfn * (nfn + 1))
        return np.einsum("...k,kI,kJ->...IJ", w, chi, chi) * mass
    raise ValueError(f"unknown variant {variant!r}")


def _det2(a, b, c, d):
    return a * d - b * c


def _det3(m):
    return (
        m[..., 0, 0] * _det2(m[..., 1, 1], m[..., 1, 2], m[..., 2, 1], m[..., 2, 2])
        - m[..., 0, 1] * _det2(m[..., 1, 0], m[..., 1, 2], m[..., 2, 0], m[..., 2, 2])
        + m[..., 0, 2] * _det2(m[..., 1, 0], m[..., 1, 1], m[..., 2, 0], m[..., 2, 1])
    )


def _minor(m, i, j):
    rows = [r for r in range(m.shape[-1]) if r != i]
    cols = [c for c in range(m.shape[-1]) if c != j]
    return m[..., rows, :][..., :, cols]


def _small_det(m):
    n = m.shape[-1]
    if n == 2:
        return _det2(m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1])
    if n == 3:
        return _det3(m)
    return sum((-1) ** j * m[..., 0, j] * _det3(_minor(m, 0, j)) for j in range(n))


def invert_cellmatrix(m):
    """Closed-form (cofactor) inverse of 3x3 or 4x4 matrices."""
    m = np.asarray(m, dtype=float)
    n = m.shape[-1]
    if n not in (3, 4) or m.shape[-2] != n:
        raise ValueError("only 3x3 and 4x4 cell matrices are supported")
    cof = np.empty_like(m)
    for i in range(n):
        for j in range(n):
            cof[..., i, j] = (-1) ** (i + j) * _small_det(_minor(m, i, j))
    det = np.einsum("...j,...j->...", m[..., 0, :], cof[..., 0, :])
    scale = np.max(np.abs(m), axis=(-2, -1)) ** n
    bad = ~(np.abs(det) > 1e-14 * scale)
    if np.any(bad):
        cond = np.linalg.cond(m[bad].reshape(-1, n, n)) if m.ndim > 2 else np.linalg.cond(m)
        raise SingularCellMatrixError(
            f"near-singular cell matrix (condition estimate {np.max(cond):.3e})"
        )
    return np.swapaxes(cof, -1, -2) / det[..., None, None]

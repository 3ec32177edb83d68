"""Independent reference computations used by the tests."""

import numpy as np


def random_simplex(rng, dim):
    """Well-shaped random simplex (positive orientation)."""
    while True:
        x = rng.normal(size=(dim + 1, dim))
        jac = (x[1:] - x[0]).T
        det = np.linalg.det(jac)
        if abs(det) > 0.1:
            if det < 0:
                x[[1, 2]] = x[[2, 1]]
            return x


# --- brute-force dense assembly -------------------------------------------
# Written directly from the local/global equations with plain loops and its
# own geometry, without any of the package's batched kernels.


def simplex_faces(x):
    """Per local face j (opposite vertex j): node list, measure, outward normal."""
    dim = x.shape[1]
    out = []
    for j in range(dim + 1):
        nodes = [k for k in range(dim + 1) if k != j]
        p = x[nodes]
        if dim == 2:
            t = p[1] - p[0]
            area = np.hypot(*t)
            n = np.array([t[1], -t[0]]) / area
        else:
            c = np.cross(p[1] - p[0], p[2] - p[0])
            area = 0.5 * np.linalg.norm(c)
            n = c / np.linalg.norm(c)
        if np.dot(n, p.mean(axis=0) - x[j]) < 0:
            n = -n
        out.append((nodes, area, n))
    return out


def simplex_volume(x):
    dim = x.shape[1]
    return abs(np.linalg.det((x[1:] - x[0]).T)) / (2.0 if dim == 2 else 6.0)


def cell_matrix(faces, taus, dim, second):
    n = dim + 1
    m = np.zeros((n, n))
    for k, (nodes, area, _) in enumerate(faces):
        for I in nodes:
            for J in nodes:
                if second:
                    m[I, J] += area * taus[k] / dim**2
                else:
                    # exact P1 face mass: |G| (1 + delta_IJ) / (n_fn (n_fn + 1))
                    m[I, J] += taus[k] * area * (2.0 if I == J else 1.0) / (dim * (dim + 1))
    return m


def proj(dim, nodes):
    p = np.zeros(dim + 1)
    p[nodes] = 1.0 / dim
    return p


def free_face_index(mesh):
    """Sorted non-Dirichlet face tuples -> consecutive index."""
    keys = sorted(tuple(f) for f, t in zip(mesh.faces.tolist(), mesh.face_tags) if t != 1)
    return {k: i for i, k in enumerate(keys)}


def face_tag(mesh, key):
    lookup = {tuple(f): t for f, t in zip(mesh.faces.tolist(), mesh.face_tags)}
    return lookup[key]


def dense_poisson(mesh, source, face_value, tau, second=True):
    """``face_value(key)`` returns u_D (Dirichlet) or t (Neumann) for a face key."""
    dim = mesh.dim
    index = free_face_index(mesh)
    K = np.zeros((len(index), len(index)))
    F = np.zeros(len(index))
    for cell in mesh.cells:
        x = mesh.vertices[cell]
        vol = simplex_volume(x)
        faces = simplex_faces(x)
        keys = [tuple(sorted(cell[nodes].tolist())) for nodes, _, _ in faces]
        tags = [face_tag(mesh, k) for k in keys]
        taus = [tau] * (dim + 1)
        m_inv = np.linalg.inv(cell_matrix(faces, taus, dim, second))
        b = np.full(dim + 1, source(x.mean(axis=0)) * vol / (dim + 1))
        z = np.zeros(dim)
        for j, (nodes, area, n) in enumerate(faces):
            if tags[j] == 1:
                ud = face_value(keys[j])
                b += taus[j] * ud * area * proj(dim, nodes)
                z += area * n * ud
        for i, (ni_nodes, ai, ni) in enumerate(faces):
            if tags[i] == 1:
                continue
            pi = proj(dim, ni_nodes)
            row = index[keys[i]]
            t = face_value(keys[i]) if tags[i] == 2 else 0.0
            F[row] += ai * (ni @ z / vol - taus[i] * pi @ m_inv @ b - t)
            for j, (nj_nodes, aj, nj) in enumerate(faces):
                if tags[j] == 1:
                    continue
                rj = aj * proj(dim, nj_nodes)
                K[row, index[keys[j]]] += ai * (
                    taus[i] * taus[j] * pi @ m_inv @ rj - aj * (ni @ nj) / vol - taus[i] * (i == j)
                )
    return K, F


def dense_stokes(mesh, body_force, face_value, tau, nu, second=True):
    """Velocity traces interleaved per face (dim * face + component), then one
    mean pressure per cell, then the mean-pressure row without Neumann faces."""
    dim = mesh.dim
    n = dim + 1
    eye = np.eye(dim)
    index = free_face_index(mesh)
    n_u = dim * len(index)
    constrained = not np.any(mesh.face_tags == 2)
    size = n_u + mesh.n_cells + int(constrained)
    K = np.zeros((size, size))
    F = np.zeros(size)
    for e, cell in enumerate(mesh.cells):
        x = mesh.vertices[cell]
        vol = simplex_volume(x)
        faces = simplex_faces(x)
        keys = [tuple(sorted(cell[nodes].tolist())) for nodes, _, _ in faces]
        tags = [face_tag(mesh, k) for k in keys]
        taus = [tau] * n
        M = np.kron(eye, cell_matrix(faces, taus, dim, second))
        M_inv = np.linalg.inv(M)
        s = body_force(x.mean(axis=0))
        B = np.concatenate([np.full(n, s[c] * vol / n) for c in range(dim)])
        Z = np.zeros((dim, dim))
        for j, (nodes, area, nj) in enumerate(faces):
            if tags[j] == 1:
                ud = face_value(keys[j])
                B += taus[j] * np.kron(ud, area * proj(dim, nodes))
                Z += area * np.outer(nj, ud)
                F[n_u + e] -= area * ud @ nj
        rho = n_u + e
        for i, (ni_nodes, ai, ni) in enumerate(faces):
            if tags[i] == 1:
                continue
            Pi = np.kron(eye, proj(dim, ni_nodes)[None, :])
            rows = dim * index[keys[i]] + np.arange(dim)
            t = face_value(keys[i]) if tags[i] == 2 else np.zeros(dim)
            F[rows] += ai * (nu * ni @ Z / vol - taus[i] * Pi @ M_inv @ B - t)
            K[rows, rho] += ai * ni
            K[rho, rows] += ai * ni
            for j, (nj_nodes, aj, nj) in enumerate(faces):
                if tags[j] == 1:
                    continue
                Rj = np.kron(eye, aj * proj(dim, nj_nodes)[:, None])
                cols = dim * index[keys[j]] + np.arange(dim)
                K[np.ix_(rows, cols)] += ai * (
                    taus[i] * taus[j] * Pi @ M_inv @ Rj
                    - nu * aj * (ni @ nj) / vol * eye
                    - taus[i] * (i == j) * eye
                )
        if constrained:
            perim = sum(a for _, a, _ in faces)
            K[-1, rho] += perim
            K[rho, -1] += perim
    return K, F

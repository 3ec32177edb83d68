"""Plain-text mesh format.

::

    fcfv-mesh <dim> <n_vertices> <n_cells> <n_boundary_faces>
    x y [z]                 # n_vertices lines
    i0 i1 i2 [i3]           # n_cells lines, zero-based
    j0 j1 [j2] <tag>        # n_boundary_faces lines, tag dirichlet|neumann
"""

import numpy as np

from .core import TAG_CODES, TAG_NAMES, MeshError, SimplicialMesh


class MeshFormatError(MeshError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def write_mesh(mesh, path):
    bnd = np.flatnonzero(mesh.boundary_mask)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"fcfv-mesh {mesh.dim} {mesh.n_vertices} {mesh.n_cells} {len(bnd)}\n")
        for x in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in x) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(int(i)) for i in c) + "\n")
        for k in bnd:
            verts = " ".join(str(int(i)) for i in mesh.faces[k])
            fh.write(f"{verts} {TAG_NAMES[int(mesh.face_tags[k])]}\n")


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        lines = [(n, ln.split()) for n, ln in enumerate(fh, start=1)]
    lines = [(n, tok) for n, tok in lines if tok]
    if not lines:
        raise MeshFormatError("empty file")
    n, head = lines[0]
    if len(head) != 5 or head[0] != "fcfv-mesh":
        raise MeshFormatError("expected header 'fcfv-mesh <dim> <nv> <nc> <nb>'", n)
    try:
        dim, nv, nc, nb = (int(t) for t in head[1:])
    except ValueError:
        raise MeshFormatError("non-integer count in header", n) from None
    if dim not in (2, 3) or min(nv, nc, nb) < 0:
        raise MeshFormatError("invalid dimension or counts in header", n)
    body = lines[1:]
    if len(body) != nv + nc + nb:
        raise MeshFormatError(f"expected {nv + nc + nb} data lines, found {len(body)}")

    vertices = np.empty((nv, dim))
    for k, (n, tok) in enumerate(body[:nv]):
        if len(tok) != dim:
            raise MeshFormatError(f"vertex needs {dim} coordinates", n)
        try:
            vertices[k] = [float(t) for t in tok]
        except ValueError:
            raise MeshFormatError("bad coordinate", n) from None

    def indices(tok, count, n):
        if len(tok) != count:
            raise MeshFormatError(f"expected {count} vertex indices", n)
        try:
            idx = [int(t) for t in tok]
        except ValueError:
            raise MeshFormatError("bad vertex index", n) from None
        for i in idx:
            if not 0 <= i < nv:
                raise MeshFormatError(f"vertex index {i} out of range [0, {nv})", n)
        return idx

    cells = [indices(tok, dim + 1, n) for n, tok in body[nv : nv + nc]]
    tags = {}
    for n, tok in body[nv + nc :]:
        if not tok or tok[-1] not in TAG_CODES:
            raise MeshFormatError(f"unknown boundary tag {tok[-1] if tok else ''!r}", n)
        face = indices(tok[:-1], dim, n)
        tags[tuple(sorted(face))] = TAG_CODES[tok[-1]]
    return SimplicialMesh.from_cells(vertices, np.array(cells, dtype=np.intp).reshape(nc, dim + 1), tags)

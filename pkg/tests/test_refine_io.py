import warnings

import numpy as np
import pytest

from fcfv.mesh import (
    NEUMANN,
    CellLocator,
    MeshFormatError,
    RefinementWarning,
    bisect,
    distort,
    generate_structured,
    piecewise_constant,
    read_mesh,
    refine_by_sizemap,
    write_mesh,
)


class TestBisect:
    def test_conforming_and_area_preserving(self):
        m = generate_structured(2, 4)
        flagged = np.zeros(m.n_cells, dtype=bool)
        flagged[[3, 17]] = True
        r = bisect(m, flagged)
        assert r.n_cells > m.n_cells + 1
        assert r.geometry.volume.sum() == pytest.approx(1.0, abs=1e-13)
        # conforming: every face has one or two cells and boundary faces lie on the box
        bf = r.vertices[r.faces[r.boundary_mask]]
        on_box = np.any(np.isclose(bf, 0) | np.isclose(bf, 1), axis=2).all(axis=1)
        assert on_box.all()

    def test_tags_inherited(self):
        m = generate_structured(2, 2).with_tags(lambda x: np.isclose(x[:, 0], 1.0))
        r = bisect(m, np.ones(m.n_cells, dtype=bool))
        neu = r.vertices[r.faces[r.face_tags == NEUMANN]]
        assert len(neu) >= 2 and np.allclose(neu[..., 0], 1.0)
        assert r.geometry.volume.sum() == pytest.approx(1.0)

    def test_3d(self):
        m = generate_structured(3, 2)
        r = bisect(m, np.arange(m.n_cells) < 5)
        assert r.geometry.volume.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.all(r.geometry.volume > 0)


class TestSizemap:
    def test_base_size_returns_base(self):
        m = generate_structured(2, 4)
        h = m.geometry.h.max()
        assert refine_by_sizemap(m, lambda x: np.full(len(x), h)) is m

    @pytest.mark.parametrize("dim", [2, 3])
    def test_half_size(self, dim):
        m = generate_structured(dim, 2)
        h0 = m.geometry.h.max()
        r = refine_by_sizemap(m, lambda x: np.full(len(x), h0 / 2))
        assert r.geometry.h.max() <= 0.75 * h0
        # every base cell got split
        assert r.n_cells >= 2 * m.n_cells

    def test_depth_cap_warns(self):
        m = generate_structured(2, 2)
        with pytest.warns(RefinementWarning):
            refine_by_sizemap(m, lambda x: np.full(len(x), 1e-6), max_depth=2)

    def test_focused_map_increases_focus_cells(self):
        base = generate_structured(2, 4)
        focus = np.array([0.7, 0.7])

        def in_disc(mesh):
            return int(np.sum(np.linalg.norm(mesh.centroids() - focus, axis=1) < 0.15))

        counts = []
        for target in (0.2, 0.1, 0.05):
            size = lambda x, t=target: np.where(np.linalg.norm(x - focus, axis=1) < 0.2, t, 1.0)
            counts.append(in_disc(refine_by_sizemap(base, size)))
        assert counts[0] < counts[1] < counts[2]


def test_locator_finds_containing_cell():
    m = distort(generate_structured(2, 6), 0.3, seed=5)
    rng = np.random.default_rng(0)
    pts = rng.random((200, 2))
    cells = CellLocator(m).locate(pts)
    lam = np.einsum("pjd,pd->pj", m.geometry.grad_bary[cells][:, 1:], pts - m.vertices[m.cells[cells, 0]])
    bary = np.column_stack([1 - lam.sum(axis=1), lam])
    assert np.all(bary > -1e-12)
    f = piecewise_constant(m, np.arange(m.n_cells, dtype=float))
    assert np.array_equal(f(pts), cells.astype(float))


class TestIO:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_round_trip(self, tmp_path, dim):
        m = generate_structured(dim, 2).with_tags(lambda x: np.isclose(x[:, 0], 1.0))
        path = tmp_path / "m.mesh"
        write_mesh(m, path)
        r = read_mesh(path)
        assert r.same_topology(m)
        assert np.array_equal(r.vertices, m.vertices)

    def _write(self, tmp_path, text):
        p = tmp_path / "bad.mesh"
        p.write_text(text)
        return p

    def test_unknown_tag(self, tmp_path):
        p = self._write(tmp_path, "fcfv-mesh 2 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 robin\n1 2 dirichlet\n0 2 dirichlet\n")
        with pytest.raises(MeshFormatError, match="robin"):
            read_mesh(p)

    def test_index_out_of_range_reports_line(self, tmp_path):
        p = self._write(tmp_path, "fcfv-mesh 2 3 1 0\n0 0\n1 0\n0 1\n0 1 3\n")
        with pytest.raises(MeshFormatError, match="line 5"):
            read_mesh(p)

    def test_bad_counts(self, tmp_path):
        p = self._write(tmp_path, "fcfv-mesh 2 4 1 0\n0 0\n1 0\n0 1\n")
        with pytest.raises(MeshFormatError):
            read_mesh(p)

    def test_bad_header(self, tmp_path):
        with pytest.raises(MeshFormatError, match="line 1"):
            read_mesh(self._write(tmp_path, "mesh 2 3 1 0\n"))

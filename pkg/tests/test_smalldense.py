import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fcfv.mesh import SimplicialMesh
from fcfv.smalldense import (
    NO_PROJECTION,
    WITH_PROJECTION,
    SingularCellMatrixError,
    build_me,
    invert_cellmatrix,
    projection_vector,
)

from oracles import random_simplex

SQ2 = np.sqrt(2.0)


def geometry(x):
    dim = x.shape[1]
    return SimplicialMesh.from_cells(x, [list(range(dim + 1))]).geometry


def unit_triangle_areas():
    # local face j is opposite vertex j: |G_0| = sqrt2, |G_1| = |G_2| = 1
    return geometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).face_areas[0]


class TestProjectionVector:
    def test_triangle_face(self):
        # face through nodes 1 and 2 (one-based) is opposite node 3
        assert np.allclose(projection_vector(2, 2), [0.5, 0.5, 0])

    def test_tet_face(self):
        assert np.allclose(projection_vector(3, 0), [0, 1 / 3, 1 / 3, 1 / 3])

    @pytest.mark.parametrize("dim", [2, 3])
    def test_partition_of_unity(self, dim):
        for j in range(dim + 1):
            p = projection_vector(dim, j)
            assert p.sum() == pytest.approx(1.0)
            assert set(np.round(p * dim, 12)) <= {0.0, 1.0}

    def test_bad_face(self):
        with pytest.raises(IndexError):
            projection_vector(2, 3)


class TestBuildMe:
    def test_unit_triangle_example(self):
        m = build_me(unit_triangle_areas(), np.ones(3), WITH_PROJECTION)
        expected = np.array(
            [[0.5, 0.25, 0.25], [0.25, (1 + SQ2) / 4, SQ2 / 4], [0.25, SQ2 / 4, (1 + SQ2) / 4]]
        )
        assert np.allclose(m, expected, atol=1e-15)

    def test_unit_triangle_face_mass(self):
        # hand evaluation: sum_k tau_k |G_k|/6 [2 1; 1 2] on the nodes of face k
        m = build_me(unit_triangle_areas(), np.ones(3), NO_PROJECTION)
        ref = np.zeros((3, 3))
        for k, area in enumerate(unit_triangle_areas()):
            nodes = [i for i in range(3) if i != k]
            ref[np.ix_(nodes, nodes)] += area / 6 * np.array([[2, 1], [1, 2]])
        assert np.allclose(m, ref, atol=1e-15)

    @given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.sampled_from([WITH_PROJECTION, NO_PROJECTION]))
    def test_row_sums(self, seed, dim, variant):
        rng = np.random.default_rng(seed)
        g = geometry(random_simplex(rng, dim))
        taus = rng.uniform(0.1, 100, dim + 1)
        m = build_me(g.face_areas[0], taus, variant)
        chi = 1 - np.eye(dim + 1)
        expected = chi.T @ (taus * g.face_areas[0]) / dim
        assert np.allclose(m.sum(axis=1), expected, rtol=1e-13)

    @given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.sampled_from([WITH_PROJECTION, NO_PROJECTION]))
    def test_spd_and_linear_in_tau(self, seed, dim, variant):
        rng = np.random.default_rng(seed)
        areas = geometry(random_simplex(rng, dim)).face_areas[0]
        taus = rng.uniform(0.1, 100, dim + 1)
        m = build_me(areas, taus, variant)
        assert np.allclose(m, m.T, atol=1e-13 * np.abs(m).max())
        np.linalg.cholesky(m)
        assert np.all(np.diag(m) > 0)
        assert np.allclose(build_me(areas, 3.5 * taus, variant), 3.5 * m, rtol=1e-14)

    @pytest.mark.parametrize("tau", [0.0, -1.0])
    def test_nonpositive_tau_rejected(self, tau):
        with pytest.raises(ValueError):
            build_me(unit_triangle_areas(), [1.0, tau, 1.0])


class TestInvert:
    def test_identity(self):
        assert np.allclose(invert_cellmatrix(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        assert np.allclose(invert_cellmatrix(np.diag([2.0, 4.0, 8.0])), np.diag([0.5, 0.25, 0.125]))

    def test_unit_triangle(self):
        m = build_me(unit_triangle_areas(), np.ones(3))
        assert np.allclose(m @ invert_cellmatrix(m), np.eye(3), atol=1e-12)

    @given(st.integers(0, 10_000), st.sampled_from([2, 3]))
    def test_involution_and_batch(self, seed, dim):
        rng = np.random.default_rng(seed)
        ms = np.stack([
            build_me(geometry(random_simplex(rng, dim)).face_areas[0], rng.uniform(0.1, 100, dim + 1))
            for _ in range(4)
        ])
        inv = invert_cellmatrix(ms)
        assert np.allclose(np.einsum("eij,ejk->eik", ms, inv), np.eye(dim + 1), atol=1e-10)
        back = invert_cellmatrix(inv)
        assert np.allclose(back, ms, rtol=1e-10, atol=1e-10 * np.abs(ms).max())

    def test_singular_reports_condition(self):
        with pytest.raises(SingularCellMatrixError, match="condition"):
            invert_cellmatrix(np.ones((3, 3)))

    def test_size_checked(self):
        with pytest.raises(ValueError):
            invert_cellmatrix(np.eye(5))


def test_face_average_integral_1000_random_checks():
    """Face integral of the face average equals the exact integral of a linear field."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(1000):
        dim = 2 + trial % 2
        x = random_simplex(rng, dim)
        g = geometry(x)
        coef, c0 = rng.normal(size=dim), rng.normal()
        nodal = x @ coef + c0
        for j in range(dim + 1):
            proj = g.face_areas[0, j] * projection_vector(dim, j) @ nodal
            # exact: integral of a linear field = measure * value at the face centroid
            face = np.delete(x, j, axis=0)
            exact = g.face_areas[0, j] * (face.mean(axis=0) @ coef + c0)
            worst = max(worst, abs(proj - exact) / max(abs(exact), 1e-300))
    assert worst <= 1e-12

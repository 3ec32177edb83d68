import math

import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import dblquad
from hypothesis import strategies as st

from fcfv import poisson, stokes
from fcfv.adaptivity import (
    IndicatorField,
    adapt_loop,
    cell_rms,
    exact_cell_error,
    indicator,
    solve_pair,
    target_sizes,
)
from fcfv.mesh import distort, generate_structured
from fcfv.problems import get_problem


def fake(mesh, u):
    return poisson.PoissonSolution(mesh, "second", np.zeros(mesh.n_faces), u,
                                   np.zeros((mesh.n_cells, mesh.dim)), np.zeros(mesh.n_faces, int), 0)


class TestIndicator:
    def test_identical_solutions(self):
        mesh = generate_structured(2, 3)
        u = np.random.default_rng(0).random((mesh.n_cells, 3))
        assert np.all(indicator(fake(mesh, u), fake(mesh, u.copy())).E == 0)

    def test_constant_difference(self):
        mesh = distort(generate_structured(2, 3), 0.3, seed=1)
        u = np.random.default_rng(1).random((mesh.n_cells, 3))
        E = indicator(fake(mesh, u), fake(mesh, u - 0.3)).E
        np.testing.assert_allclose(E, 0.3, rtol=1e-14)

    def test_linear_difference_on_unit_triangle(self, unit_triangle):
        # difference x1 at the vertices (0,0), (1,0), (0,1)
        diff = np.array([[0.0, 1.0, 0.0]])[:, :, None]
        integral, _ = dblquad(lambda y, x: x**2, 0, 1, 0, lambda x: 1 - x, epsabs=1e-14)
        expected = math.sqrt(integral / 0.5)
        assert expected == pytest.approx(math.sqrt(1 / 6), rel=1e-12)
        assert cell_rms(unit_triangle, diff)[0] == pytest.approx(expected, rel=1e-12)

    def test_vector_components_summed(self, unit_triangle):
        diff = np.zeros((1, 3, 2))
        diff[..., 0], diff[..., 1] = 3.0, 4.0
        assert cell_rms(unit_triangle, diff)[0] == pytest.approx(5.0)

    def test_mesh_mismatch(self):
        a, b = generate_structured(2, 2), generate_structured(2, 3)
        with pytest.raises(ValueError, match="different meshes"):
            indicator(fake(a, np.zeros((a.n_cells, 3))), fake(b, np.zeros((b.n_cells, 3))))


class TestTargetSizes:
    def field(self, E, h=0.1):
        return IndicatorField(np.atleast_1d(np.asarray(E, float)), np.full(np.size(E), h))

    @pytest.mark.parametrize("mode", ["paper", "richardson"])
    def test_at_tolerance_keeps_size(self, mode):
        assert target_sizes(self.field(0.01), 0.01, mode)[0] == pytest.approx(0.1)

    def test_default_mode_clamped(self):
        assert target_sizes(self.field(0.04), 0.01, "paper")[0] == pytest.approx(0.025)

    def test_richardson_mode(self):
        assert target_sizes(self.field(0.04), 0.01, "richardson")[0] == pytest.approx(0.05)

    def test_zero_indicator_grows(self):
        assert target_sizes(self.field(0.0), 0.01)[0] == pytest.approx(0.2)

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_rejects_nonpositive_epsilon(self, eps):
        with pytest.raises(ValueError, match="epsilon"):
            target_sizes(self.field(0.1), eps)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="exponent mode"):
            target_sizes(self.field(0.1), 0.01, "other")

    @given(E=st.lists(st.floats(0, 10), min_size=2, max_size=20),
           mode=st.sampled_from(["paper", "richardson"]), dim=st.sampled_from([2, 3]))
    def test_monotone(self, E, mode, dim):
        E = np.sort(np.array(E))
        sizes = target_sizes(self.field(E), 0.05, mode, dim)
        assert np.all(np.diff(sizes) <= 1e-15)
        assert np.all((sizes >= 0.025 - 1e-15) & (sizes <= 0.2 + 1e-15))


class TestReuse:
    def test_pair_matches_separate_solves(self):
        spec = get_problem("poisson-gauss-2d")
        prob = poisson.PoissonProblem.from_spec(spec, generate_structured(2, 6))
        second, first = solve_pair(prob)
        np.testing.assert_allclose(second.u, poisson.solve(prob, "second").u, rtol=1e-12)
        np.testing.assert_allclose(first.u, poisson.solve(prob, "first").u, rtol=1e-12)

    def test_stokes_pair(self):
        prob = stokes.StokesProblem.from_spec(get_problem("stokes-poly-2d"), generate_structured(2, 4))
        second, first = solve_pair(prob)
        np.testing.assert_allclose(first.u, stokes.solve(prob, "first").u, rtol=1e-12)
        assert indicator(second, first).max_E > 0


def test_exact_cell_error_of_exact_field():
    spec = get_problem("poisson-linear-2d")
    sol = poisson.solve(poisson.PoissonProblem.from_spec(spec, generate_structured(2, 3)))
    assert exact_cell_error(sol, spec.u).max() <= 1e-12


class TestLoop:
    def test_already_converged(self):
        zero = lambda x: np.zeros(x.shape[:-1])  # noqa: E731
        spec = get_problem("poisson-gauss-2d").with_(
            u=lambda x: np.full(x.shape[:-1], 2.0), grad_u=lambda x: np.zeros(x.shape), source=zero)
        base = generate_structured(2, 4)
        result = adapt_loop(spec, base, epsilon=1e-2)
        assert result.converged and len(result.history) == 1
        assert result.mesh.n_cells == base.n_cells

    def test_gaussian_reaches_loose_tolerance(self):
        spec = get_problem("poisson-gauss-2d")
        seen = []
        result = adapt_loop(spec, generate_structured(2, 8), epsilon=4e-2, tau=10.0,
                            on_iteration=lambda it, *rest: seen.append(it))
        assert result.converged
        assert result.history[-1].max_indicator <= 4e-2 < result.history[0].max_indicator
        assert seen == [h.iteration for h in result.history]
        cells = [h.n_cells for h in result.history]
        assert cells == sorted(cells)
        assert all(0.1 <= h.efficiency <= 10 for h in result.history)

    def test_iteration_cap(self):
        result = adapt_loop(get_problem("poisson-gauss-2d"), generate_structured(2, 4),
                            epsilon=1e-6, max_iters=2)
        assert not result.converged and len(result.history) == 2

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError, match="max_iters"):
            adapt_loop(get_problem("poisson-gauss-2d"), generate_structured(2, 4), max_iters=0)

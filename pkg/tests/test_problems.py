import numpy as np
import pytest

from fcfv.problems import catalog, get_problem, residual_check, residual_scale

NAMES = [s.name for s in catalog()]


@pytest.mark.parametrize("name", NAMES)
def test_residual_of_exact_fields(name):
    spec = get_problem(name)
    assert residual_check(spec) <= 1e-10 * residual_scale(spec)


def test_required_entries_present():
    for name in ("poisson-sine-2d", "poisson-sine-3d", "poisson-gauss-2d",
                 "stokes-poly-2d", "stokes-poly-3d", "poisson-linear-2d", "stokes-linear-2d"):
        assert name in NAMES


def test_point_values():
    assert get_problem("poisson-gauss-2d").u(np.array([[0.7, 0.7]]))[0] == pytest.approx(1.0, abs=1e-15)
    assert get_problem("poisson-sine-2d").u(np.array([[0.5, 0.5]]))[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("name", ["stokes-poly-2d", "stokes-poly-3d"])
def test_velocity_divergence_free(name):
    spec = get_problem(name)
    x = np.random.default_rng(3).random((100, spec.dim))
    div = np.einsum("nkk->n", spec.grad_u(x))
    assert np.max(np.abs(div)) <= 1e-12


def test_corrupted_source_is_caught():
    spec = get_problem("poisson-sine-2d")
    bad = spec.with_(source=lambda x: spec.source(x) + 1.0)
    assert residual_check(bad) == pytest.approx(1.0, abs=1e-8)


def test_same_seed_same_samples():
    spec = get_problem("stokes-poly-2d")
    assert residual_check(spec, seed=7) == residual_check(spec, seed=7)


def test_viscosity_change_rebuilds_source():
    spec = get_problem("stokes-poly-2d").with_(nu=0.01)
    assert residual_check(spec) <= 1e-10 * residual_scale(spec)


def test_unknown_name():
    with pytest.raises(KeyError, match="known"):
        get_problem("nope")


def test_pseudo_traction_matches_definition():
    spec = get_problem("stokes-linear-2d")
    x = np.array([[1.0, 0.3]])
    n = np.array([[1.0, 0.0]])
    # grad u has only d u1/d x2 = 1, so (n.grad)u = 0 here; t = -p n
    np.testing.assert_allclose(spec.neumann_data(x, n), [[-0.5, 0.0]])

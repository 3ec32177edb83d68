"""Catalog of model problems with hand-derived exact fields.

Every entry carries the exact solution, its gradient, the matching source
and the boundary layout. :func:`residual_check` re-derives the PDE residual
by complex-step differentiation to guard against transcription slips.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

pi = np.pi


def neumann_on_x1_eq_1(x):
    return np.isclose(x[..., 0], 1.0, atol=1e-12)


def no_neumann(x):
    return np.zeros(x.shape[:-1], dtype=bool)


@dataclass(frozen=True)
class ProblemSpec:
    """Exact fields act on ``(..., dim)`` point arrays.

    Poisson: ``u -> (...)``, ``grad_u -> (..., dim)``.
    Stokes:  ``u -> (..., dim)``, ``grad_u -> (..., dim, dim)`` with
    ``grad_u[..., k, i] = d u_i / d x_k``, ``p -> (...)``.
    """

    name: str
    dim: int
    equation: str
    u: Callable
    grad_u: Callable
    source: Callable
    p: Optional[Callable] = None
    neumann: Callable = no_neumann
    nu: float = 1.0
    tau: float = 1e2
    epsilon: float = 1e-2
    description: str = ""
    laplacian_u: Optional[Callable] = field(default=None, repr=False)
    grad_p: Optional[Callable] = field(default=None, repr=False)

    def dirichlet(self, x):
        return self.u(x)

    def neumann_data(self, x, n):
        """Poisson: t = n . grad u. Stokes pseudo-traction: t = nu (n . grad) u - p n."""
        g = self.grad_u(x)
        if self.equation == "poisson":
            return np.einsum("...d,...d->...", g, n)
        return self.nu * np.einsum("...k,...ki->...i", n, g) - self.p(x)[..., None] * n

    def with_(self, **changes):
        """Copy with changed fields; a new Stokes ``nu`` rebuilds the source."""
        if "nu" in changes and self.laplacian_u is not None and "source" not in changes:
            nu, lap, gp = changes["nu"], self.laplacian_u, self.grad_p
            changes["source"] = lambda x: -nu * lap(x) + gp(x)
        return replace(self, **changes)


# --- Poisson ------------------------------------------------------------


def _sine(dim):
    def u(x):
        return np.prod(np.sin(pi * x[..., :dim]), axis=-1)

    def grad(x):
        s = np.sin(pi * x[..., :dim])
        c = np.cos(pi * x[..., :dim])
        out = np.empty(x.shape[:-1] + (dim,), dtype=x.dtype)
        for k in range(dim):
            others = np.prod(np.delete(s, k, axis=-1), axis=-1)
            out[..., k] = pi * c[..., k] * others
        return out

    def source(x):
        return dim * pi**2 * u(x)

    return u, grad, source


def _gauss(x0=0.7, y0=0.7, a=100.0):
    def u(x):
        return np.exp(-a * ((x[..., 0] - x0) ** 2 + (x[..., 1] - y0) ** 2))

    def grad(x):
        e = u(x)
        return np.stack([-2 * a * (x[..., 0] - x0) * e, -2 * a * (x[..., 1] - y0) * e], axis=-1)

    def source(x):
        r2 = (x[..., 0] - x0) ** 2 + (x[..., 1] - y0) ** 2
        return -(4 * a * a * r2 - 4 * a) * u(x)

    return u, grad, source


def _linear_poisson(dim):
    coef = np.array([1.0, -0.5, 0.25][:dim])

    def u(x):
        return 0.3 + x @ coef

    def grad(x):
        return np.broadcast_to(coef, x.shape).copy()

    def source(x):
        return np.zeros(x.shape[:-1], dtype=x.dtype)

    return u, grad, source


# --- Stokes -------------------------------------------------------------
# u1 = f(x1) g'(x2), u2 = -f(x2) g'(x1) with f(t) = t^2 (1-t)^2, g' = f'.


def _f(t):
    return t**2 * (1 - t) ** 2


def _df(t):
    return 2 * t - 6 * t**2 + 4 * t**3


def _d2f(t):
    return 2 - 12 * t + 12 * t**2


def _d3f(t):
    return -12 + 24 * t


def _stokes_poly(dim):
    def u(x):
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape, dtype=x.dtype)
        out[..., 0] = _f(x1) * _df(x2)
        out[..., 1] = -_f(x2) * _df(x1)
        return out

    def grad(x):
        x1, x2 = x[..., 0], x[..., 1]
        g = np.zeros(x.shape[:-1] + (dim, dim), dtype=x.dtype)
        g[..., 0, 0] = _df(x1) * _df(x2)
        g[..., 1, 0] = _f(x1) * _d2f(x2)
        g[..., 0, 1] = -_f(x2) * _d2f(x1)
        g[..., 1, 1] = -_df(x2) * _df(x1)
        return g

    def lap(x):
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape, dtype=x.dtype)
        out[..., 0] = _d2f(x1) * _df(x2) + _f(x1) * _d3f(x2)
        out[..., 1] = -(_d2f(x2) * _df(x1) + _f(x2) * _d3f(x1))
        return out

    def p(x):
        return x[..., 0] * (1 - x[..., 0]) - 1.0 / 6.0

    def grad_p(x):
        out = np.zeros(x.shape, dtype=x.dtype)
        out[..., 0] = 1 - 2 * x[..., 0]
        return out

    def source(x):
        return -lap(x) + grad_p(x)

    return u, grad, source, p, lap, grad_p


def _linear_stokes(dim, p0=0.5):
    # u = (x2, 0[, 0]) is divergence free with constant gradient
    def u(x):
        out = np.zeros(x.shape, dtype=x.dtype)
        out[..., 0] = x[..., 1]
        return out

    def grad(x):
        g = np.zeros(x.shape[:-1] + (dim, dim), dtype=x.dtype)
        g[..., 1, 0] = 1.0
        return g

    def p(x):
        return np.full(x.shape[:-1], p0, dtype=x.dtype)

    def zero_vec(x):
        return np.zeros(x.shape, dtype=x.dtype)

    return u, grad, zero_vec, p, zero_vec, zero_vec


def _constant_stokes(dim, c=(1.0, -2.0, 0.5)):
    c = np.array(c[:dim])

    def u(x):
        return np.broadcast_to(c, x.shape).copy()

    def grad(x):
        return np.zeros(x.shape[:-1] + (dim, dim), dtype=x.dtype)

    def zero_scalar(x):
        return np.zeros(x.shape[:-1], dtype=x.dtype)

    def zero_vec(x):
        return np.zeros(x.shape, dtype=x.dtype)

    return u, grad, zero_vec, zero_scalar, zero_vec, zero_vec


def _poisson(name, dim, fields, **kw):
    u, g, s = fields
    return ProblemSpec(name, dim, "poisson", u, g, s, **kw)


def _stokes(name, dim, fields, **kw):
    u, g, s, p, lap, gp = fields
    return ProblemSpec(name, dim, "stokes", u, g, s, p=p, laplacian_u=lap, grad_p=gp, **kw)


def catalog():
    return [
        _poisson("poisson-sine-2d", 2, _sine(2), neumann=neumann_on_x1_eq_1,
                 description="u = sin(pi x1) sin(pi x2), Neumann on x1 = 1"),
        _poisson("poisson-sine-3d", 3, _sine(3), neumann=neumann_on_x1_eq_1,
                 description="u = sin(pi x1) sin(pi x2) sin(pi x3), Neumann on x1 = 1"),
        _poisson("poisson-gauss-2d", 2, _gauss(),
                 description="u = exp(-100 |x - (0.7, 0.7)|^2), all Dirichlet"),
        _poisson("poisson-linear-2d", 2, _linear_poisson(2), neumann=neumann_on_x1_eq_1,
                 description="linear patch test"),
        _poisson("poisson-linear-3d", 3, _linear_poisson(3), neumann=neumann_on_x1_eq_1,
                 description="linear patch test"),
        _stokes("stokes-poly-2d", 2, _stokes_poly(2), neumann=neumann_on_x1_eq_1,
                description="polynomial divergence-free velocity, Neumann on x1 = 1"),
        _stokes("stokes-poly-3d", 3, _stokes_poly(3), neumann=neumann_on_x1_eq_1,
                description="2D polynomial field extruded with u3 = 0"),
        _stokes("stokes-linear-2d", 2, _linear_stokes(2), neumann=neumann_on_x1_eq_1,
                description="linear patch test, constant pressure"),
        _stokes("stokes-linear-3d", 3, _linear_stokes(3), neumann=neumann_on_x1_eq_1,
                description="linear patch test, constant pressure"),
        _stokes("stokes-constant-2d", 2, _constant_stokes(2),
                description="constant velocity, zero pressure, all Dirichlet"),
    ]


def get_problem(name):
    for spec in catalog():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in catalog())
    raise KeyError(f"unknown problem {name!r}; known: {known}")


def _complex_step(f, x, k, h=1e-30):
    """Exact-to-rounding derivative of an analytic ``f`` along axis ``k``."""
    xc = x.astype(complex)
    xc[:, k] += 1j * h
    return np.imag(f(xc)) / h


def residual_check(spec, n_samples=100, seed=0):
    """Largest absolute PDE residual of the exact fields at random interior points.

    Poisson: -div grad u - s, and grad u against the derivative of u.
    Stokes: -nu div grad u + grad p - s, div u, and grad u against u.
    Derivatives of the hand-coded fields are taken by complex-step
    differentiation, which is exact to rounding for analytic expressions.
    """
    rng = np.random.default_rng(seed)
    x = 0.05 + 0.9 * rng.random((n_samples, spec.dim))
    dim = spec.dim
    if spec.equation == "poisson":
        lap = sum(_complex_step(lambda y: spec.grad_u(y)[:, k], x, k) for k in range(dim))
        res = np.abs(-lap - spec.source(x))
        grad_cs = np.stack([_complex_step(spec.u, x, k) for k in range(dim)], axis=1)
        res_g = np.abs(grad_cs - spec.grad_u(x))
        return float(max(res.max(), res_g.max()))
    g = spec.grad_u(x)
    div = np.einsum("nkk->n", g)
    lap = np.zeros((n_samples, dim))
    for i in range(dim):
        for k in range(dim):
            lap[:, i] += _complex_step(lambda y: spec.grad_u(y)[:, k, i], x, k)
    grad_p = np.stack([_complex_step(spec.p, x, k) for k in range(dim)], axis=1)
    mom = -spec.nu * lap + grad_p - spec.source(x)
    grad_cs = np.stack([_complex_step(spec.u, x, k) for k in range(dim)], axis=1)
    return float(max(np.abs(mom).max(), np.abs(div).max(), np.abs(grad_cs - g).max()))


def residual_scale(spec, n_samples=100, seed=0):
    """Magnitude of the source at the residual sample points (at least 1)."""
    rng = np.random.default_rng(seed)
    x = 0.05 + 0.9 * rng.random((n_samples, spec.dim))
    return float(max(1.0, np.max(np.abs(spec.source(x)))))

"""The operators d, d#, dd#, the alpha = dd# phi^(1/2) expansion, integration and Stokes."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import rules
from .exterior import Superform, _basis_product, _is_zero, volume_sign
from .fields import PowerField, ScalarField, as_points
from .quadrature import (
    Ball,
    Box,
    MeasureEstimate,
    Region,
    TensorGrid,
    boundary_nodes,
    integrate_density,
)

__all__ = [
    "d",
    "dsharp",
    "ddsharp",
    "alpha_form",
    "alpha_matrix",
    "integrate",
    "stokes_residual",
    "boundary_flux",
    "sphere_mean",
    "density_function",
]


def _partial(c, i):
    if isinstance(c, ScalarField):
        return c.partial(i)
    if isinstance(c, (int, Fraction, float, np.integer, np.floating)):
        return 0
    raise TypeError(f"cannot differentiate coefficient of type {type(c).__name__}")


def _apply(a: Superform, generator) -> Superform:
    n = a.n
    is_x = generator == "x"
    p, q = (a.p + 1, a.q) if is_x else (a.p, a.q + 1)
    if p > n or q > n:
        return Superform(n, p, q)
    terms = {}
    for (K, L), c in a.terms.items():
        for i in range(1, n + 1):
            left = ((i,), ()) if is_x else ((), (i,))
            prod = _basis_product(*left, K, L)
            if prod is None:
                continue
            dc = _partial(c, i)
            if _is_zero(dc):
                continue
            sign, K2, L2 = prod
            if sign < 0:
                dc = -dc
            key = (K2, L2)
            terms[key] = terms[key] + dc if key in terms else dc
    return Superform(n, p, q, terms)


def d(a: Superform) -> Superform:
    """d a = sum_i d_i(a_KL) dx_i ^ dx_K ^ dxi_L."""
    return _apply(a, "x")


def dsharp(a: Superform) -> Superform:
    """d# a = sum_j d_j(a_KL) dxi_j ^ dx_K ^ dxi_L."""
    return _apply(a, "xi")


def ddsharp(a) -> Superform:
    """dd# of a form, or of a scalar field (giving sum d_i d_j f dx_i ^ dxi_j)."""
    if isinstance(a, ScalarField):
        a = Superform.scalar(a.n, a)
    return d(dsharp(a))


def alpha_form(phi: ScalarField) -> Superform:
    """alpha = omega / (2 phi^(1/2)) - dphi ^ d#phi / (4 phi^(3/2)), omega = dd# phi.

    Coefficients are fields that raise on evaluation where phi <= 0.
    """
    n = phi.n
    g = phi.gradient()
    H = [[g[i].partial(j + 1) for j in range(n)] for i in range(n)]
    a = PowerField(phi, Fraction(-1, 2)) * Fraction(1, 2)
    b = PowerField(phi, Fraction(-3, 2)) * Fraction(-1, 4)
    terms = {}
    for i in range(n):
        for j in range(n):
            parts = []
            if not H[i][j].is_zero():
                parts.append(a * H[i][j])
            if not (g[i].is_zero() or g[j].is_zero()):
                parts.append(b * (g[i] * g[j]))
            if parts:
                terms[((i + 1,), (j + 1,))] = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return Superform(n, 1, 1, terms)


def alpha_matrix(phi: ScalarField, X, grad=None, hess=None):
    """Coefficient matrices of alpha at points X, shape (N, n, n)."""
    n = phi.n
    X, _ = as_points(X, n)
    v = np.asarray(phi.evaluate(X), dtype=float)
    if np.any(v <= 0):
        raise ValueError("alpha_form needs phi > 0")
    grad = grad or phi.gradient()
    hess = hess or [[grad[i].partial(j + 1) for j in range(n)] for i in range(n)]
    G = np.stack([np.broadcast_to(np.asarray(gi.evaluate(X), dtype=float), v.shape) for gi in grad], axis=1)
    H = np.empty((len(v), n, n))
    for i in range(n):
        for j in range(n):
            H[:, i, j] = hess[i][j].evaluate(X)
    s = np.sqrt(v)
    return H / (2 * s)[:, None, None] - G[:, :, None] * G[:, None, :] / (4 * v * s)[:, None, None]


def density_function(a: Superform):
    """Vectorised density of an (n,n)-form relative to beta^n / n!."""
    g = a.density()
    if isinstance(g, ScalarField):
        return g.evaluate
    c = float(g)
    return lambda X: np.full(len(X), c)


def integrate(a: Superform, region: Region, quad, jobs: int = 1) -> MeasureEstimate:
    """int_region a, with a = g beta^n/n! integrated as int g dlambda."""
    if a.bidegree != (a.n, a.n):
        raise ValueError(f"integrate needs an ({a.n},{a.n})-form, got {a.bidegree}")
    if region.n != a.n:
        raise ValueError("region dimension does not match the form")
    return integrate_density(density_function(a), region, quad, jobs)


def stokes_residual(a: Superform, region: Region, quad, boundary_points: int | None = None) -> float:
    """|int_region d a - int_boundary a| for an (n-1, n)-form on a Ball or Box.

    Writing a = sum_i a_i dx_(all but i) ^ dxi_(all), the boundary integral is
    the flux volume_sign(n) * int sum_i (-1)^(i-1) a_i nu_i dS.
    """
    n = a.n
    if a.bidegree != (n - 1, n):
        raise ValueError(f"stokes_residual needs an ({n - 1},{n})-form")
    if not isinstance(region, (Ball, Box)):
        raise ValueError(f"unsupported region {type(region).__name__}")
    interior = integrate(d(a), region, quad).value
    m = boundary_points or (quad.points if isinstance(quad, TensorGrid) else 24)
    return abs(interior - boundary_flux(a, region, m))


def boundary_flux(a, region: Region, points: int = 24) -> float:
    """int over the boundary of an (n-1, n)-form on a Ball or Box (outward orientation).

    Writing a = sum_i a_i dx_(all but i) ^ dxi_(all), this is
    volume_sign(n) * int sum_i (-1)^(i-1) a_i nu_i dS.  ``a`` may also be a
    callable ``X -> Superform`` with array coefficients.
    """
    X, W, nu = boundary_nodes(region, points)
    n = region.n
    A = a.evaluate(X) if isinstance(a, Superform) else a(X)
    if A.bidegree != (n - 1, n):
        raise ValueError(f"boundary_flux needs an ({n - 1},{n})-form")
    full = tuple(range(1, n + 1))
    flux = np.zeros(len(W))
    for i in range(1, n + 1):
        c = A[(tuple(k for k in full if k != i), full)]
        flux += (-1) ** (i - 1) * np.broadcast_to(np.asarray(c, dtype=float), (len(W),)) * nu[:, i - 1]
    return volume_sign(n) * float(np.dot(flux, W))


def sphere_mean(f: ScalarField, r: float, center=None, order: int = 32) -> float:
    """(1/r^n) int_{S(r)} f dsigma with dsigma = sum_i (-1)^(i-1) x_i dx_(all but i).

    On the sphere of radius r the form dsigma restricts to r times the
    surface measure, so this is r^(1-n) int_{S(r)} f dS.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    n = f.n
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    X, W, _ = rules.scaled_sphere_rule(c, r, n, order)
    return float(np.dot(np.asarray(f.evaluate(X), dtype=float), W)) * r / r**n

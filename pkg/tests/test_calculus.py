import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from supercurrents import rules
from supercurrents.calculus import (
    alpha_form,
    alpha_matrix,
    boundary_flux,
    d,
    ddsharp,
    dsharp,
    integrate,
    sphere_mean,
    stokes_residual,
)
from supercurrents.exterior import Superform, beta, beta_power, dx, is_symmetric, power, wedge, wedge_all
from supercurrents.fields import ExprField, Polynomial, PowerField, bump, coordinate_symbols, phi_m
from supercurrents.quadrature import Ball, Box, MonteCarlo, Spherical, TensorGrid

from helpers import random_form, random_symmetric_11


def test_d_example():
    x1 = Polynomial.variable(2, 1)
    assert d(dx(2, 2, x1)) == Superform.from_word(2, [("x", 1), ("x", 2)])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ddsharp_half_norm_squared_is_beta(n):
    half = Polynomial.norm_squared(n) * Polynomial.constant(n, 1) / 2
    assert ddsharp(half) == beta(n)


@pytest.mark.parametrize("n,m", [(3, 1), (3, 2), (5, 2)])
def test_ddsharp_phi_m_closed_form(n, m):
    D = ddsharp(phi_m(n, m))
    rng = np.random.default_rng(m)
    X = rng.uniform(-2, 2, (30, n))
    r2 = np.sum(X**2, axis=1)
    q = n / m
    for i in range(n):
        for j in range(n):
            expect = r2 ** (-q / 2) * ((i == j) - q * X[:, i] * X[:, j] / r2)
            got = np.asarray(D[((i + 1,), (j + 1,))].evaluate(X), dtype=float)
            assert np.allclose(got, expect, rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_integrate_beta_n_over_cube(n):
    box = Box(np.zeros(n), np.ones(n))
    assert integrate(beta_power(n, n), box, TensorGrid(4)).value == pytest.approx(math.factorial(n), rel=1e-14)


def test_integrate_beta_n_over_ball_montecarlo():
    n, r = 3, 0.7
    est = integrate(beta_power(n, n), Ball(np.zeros(n), r), MonteCarlo(200_000, 11))
    expect = math.factorial(n) * rules.ball_volume(n) * r**n
    assert abs(est.value - expect) <= 4 * est.stderr
    assert est.seed == 11


def test_example_density_vanishes_at_s_equal_m():
    D = ddsharp(phi_m(3, 2))
    F = wedge(power(D, 2), beta_power(3, 1))
    assert integrate(F, Ball(np.zeros(3), 1.0), Spherical(16, 16)).value == pytest.approx(0.0, abs=1e-10)


def test_stokes_on_box_polynomial():
    rng = np.random.default_rng(4)
    a = random_form(2, 1, 2, rng, degree=3, density=1.0)
    assert stokes_residual(a, Box(np.array([-1.0, -0.5]), np.array([1.0, 0.8])), TensorGrid(8)) <= 1e-6
    assert stokes_residual(Superform(2, 1, 2), Box(np.zeros(2), np.ones(2)), TensorGrid(4)) == 0.0


def test_stokes_on_ball_polynomial():
    rng = np.random.default_rng(5)
    a = random_form(3, 2, 3, rng, degree=2, density=1.0)
    assert stokes_residual(a, Ball(np.zeros(3), 0.9), Spherical(16, 24), boundary_points=24) <= 1e-6


def test_stokes_compact_support():
    b = bump(2, [0.1, 0.0], 0.5, power=8)
    a = Superform(2, 1, 2, {((1,), (1, 2)): b, ((2,), (1, 2)): b * 2})
    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    assert abs(boundary_flux(a, box, 16)) == 0.0
    assert abs(integrate(d(a), box, TensorGrid(16, 8)).value) <= 1e-6


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_mean(n):
    one = Polynomial.constant(n, 1)
    area = rules.sphere_area(n)
    for r in (0.5, 1.0, 2.0):
        assert sphere_mean(one, r) == pytest.approx(area, rel=1e-12)
        assert sphere_mean(Polynomial.norm_squared(n), r) == pytest.approx(r**2 * area, rel=1e-6)


@pytest.mark.parametrize("name", ["|x|^2", "|x|^2+1", "poly^2+1"])
def test_alpha_equals_ddsharp_sqrt(name):
    n = 3
    xs = coordinate_symbols(n)
    N = Polynomial.norm_squared(n)
    phi = {"|x|^2": N, "|x|^2+1": N + Polynomial.constant(n, 1),
           "poly^2+1": Polynomial.from_sympy((xs[0] * xs[1] - xs[2] + 2) ** 2 + 1, xs)}[name]
    A = alpha_form(phi)
    direct = ddsharp(PowerField(phi, 0.5))
    X = np.random.default_rng(0).uniform(-1.5, 1.5, (100, n))
    M = alpha_matrix(phi, X)
    for i in range(n):
        for j in range(n):
            a = np.asarray(A[((i + 1,), (j + 1,))].evaluate(X), dtype=float)
            b = np.asarray(direct[((i + 1,), (j + 1,))].evaluate(X), dtype=float)
            assert np.allclose(a, b, rtol=1e-9, atol=1e-12)
            assert np.allclose(M[:, i, j], b, rtol=1e-9, atol=1e-12)


def test_alpha_degenerate_for_norm_squared():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 3))
    a = power(alpha_form(Polynomial.norm_squared(3)), 3)
    assert np.max(np.abs(a.density().evaluate(X))) <= 1e-12


def test_integration_additive_and_linear():
    f = Polynomial.random(2, 3, np.random.default_rng(9))
    vol = Superform.volume(2, f)
    q = TensorGrid(6)
    left = integrate(vol, Box(np.array([0.0, 0.0]), np.array([0.5, 1.0])), q).value
    right = integrate(vol, Box(np.array([0.5, 0.0]), np.array([1.0, 1.0])), q).value
    whole = integrate(vol, Box(np.zeros(2), np.ones(2)), q).value
    assert left + right == pytest.approx(whole, rel=1e-12)
    assert integrate(vol.scale(3), Box(np.zeros(2), np.ones(2)), q).value == pytest.approx(3 * whole, rel=1e-12)


def test_integrate_rejects_wrong_bidegree():
    with pytest.raises(ValueError):
        integrate(beta(2), Box(np.zeros(2), np.ones(2)), TensorGrid(4))


# -- exact identities ---------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 4))
def test_d_squared_and_anticommutation(seed, n):
    rng = np.random.default_rng(seed)
    p, q = int(rng.integers(0, n + 1)), int(rng.integers(0, n + 1))
    a = random_form(n, p, q, rng)
    assert d(d(a)).is_zero()
    assert dsharp(dsharp(a)).is_zero()
    assert d(dsharp(a)) == -dsharp(d(a))


@given(seeds, st.integers(2, 4))
def test_lemma_l1_identity(seed, n):
    rng = np.random.default_rng(seed)
    psi = Superform.scalar(n, Polynomial.random(n, 3, rng))
    gamma = wedge_all(*[random_symmetric_11(n, rng) for _ in range(n - 1)])
    assert is_symmetric(gamma)
    assert wedge(d(psi), dsharp(gamma)) == -wedge(dsharp(psi), d(gamma))


def test_ddsharp_commutes_with_nonpolynomial_fields():
    xs = coordinate_symbols(2)
    f = ExprField((xs[0] ** 2 + 1) ** 0.5 * xs[1], 2)
    X = np.array([[0.3, 0.2], [1.0, -2.0]])
    lhs = d(dsharp(Superform.scalar(2, f))).evaluate(X)
    rhs = (-dsharp(d(Superform.scalar(2, f)))).evaluate(X)
    for k in lhs.terms:
        assert np.allclose(lhs[k], rhs[k])

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from supercurrents import rules
from supercurrents.fields import (
    MaxAffine,
    Mollified,
    MollifierKernel,
    OutOfGridError,
    Polynomial,
    Sampled,
    SingularPointError,
    field_from_spec,
    mollify,
    norm,
    parse_field,
    phi_m,
)


def test_evaluate_examples():
    assert Polynomial.norm_squared(2).evaluate([1, 2]) == 5
    assert phi_m(4, 2).evaluate(np.array([math.e, 0, 0, 0])) == pytest.approx(1.0, abs=1e-14)
    f = MaxAffine.from_rows([[0, 0], [1, 0]])
    assert f.evaluate(np.array([-3.0])) == 0


def test_polynomial_partials_exact():
    f = parse_field("x1^2*x2", 2)
    assert f.partial(1) == parse_field("2*x1*x2", 2)
    g = parse_field("3*x1 - 2*x2 + 7", 2)
    assert g.partial(1) == Polynomial.constant(2, 3)


@pytest.mark.parametrize("n,m", [(3, 1), (5, 2), (4, 1)])
def test_phi_m_hessian(n, m):
    f = phi_m(n, m)
    H = f.hessian()
    rng = np.random.default_rng(n * 10 + m)
    X = rng.uniform(-2, 2, (50, n))
    r2 = np.sum(X**2, axis=1)
    q = n / m
    for i in range(n):
        for j in range(n):
            expect = r2 ** (-q / 2) * ((i == j) - q * X[:, i] * X[:, j] / r2)
            got = np.asarray(H[i][j].evaluate(X), dtype=float)
            assert np.allclose(got, expect, rtol=1e-10, atol=1e-12)


def test_singular_point_is_an_error():
    with pytest.raises(SingularPointError):
        phi_m(3, 1).evaluate(np.zeros(3))
    with pytest.raises(SingularPointError):
        norm(2).evaluate(np.array([1e-14, 0.0]))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_integrates_to_one(n):
    K = MollifierKernel(n)
    X, W = rules.scaled_ball_rule(np.zeros(n), 1.0, n, 32, 32)
    assert float(np.dot(K.evaluate(X), W)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mollified_affine_is_identity(n):
    rng = np.random.default_rng(n)
    a = rng.integers(-3, 4, n).tolist()
    f = MaxAffine.from_rows([a + [2]])
    m = mollify(f, 0.3)
    X = rng.uniform(-2, 2, (20, n))
    assert np.max(np.abs(m.evaluate(X) - f.evaluate(X))) <= 1e-8


def test_mollified_hinge_at_origin():
    eps = 0.25
    v = float(mollify(MaxAffine.from_rows([[0, 0, 0], [1, 0, 0]]), eps).evaluate(np.zeros(2)))
    assert 0 < v < eps


def test_mollified_abs_matches_1d_oracle():
    eps = 0.3
    prof = lambda t: (1 - t * t) ** 4  # noqa: E731
    Z = quad(prof, -1, 1)[0]
    oracle = eps * 2 * quad(lambda t: t * prof(t), 0, 1)[0] / Z
    v = float(mollify(MaxAffine.from_rows([[1, 0], [-1, 0]]), eps).evaluate(np.zeros(1)))
    assert v == pytest.approx(oracle, abs=1e-6)


def test_mollified_convex_decreases_with_eps():
    f = MaxAffine.from_rows([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, -1, 0.5]])
    X = np.random.default_rng(2).uniform(-1, 1, (40, 2))
    vals = [np.asarray(mollify(f, e).evaluate(X)) for e in (0.4, 0.2, 0.1, 0.05)]
    base = f.evaluate(X)
    for hi, lo in zip(vals, vals[1:]):
        assert np.all(lo <= hi + 1e-10)
    assert np.all(vals[-1] >= base - 1e-10)


def test_mollified_partials():
    # smooth base: d/dx1 (x1^3 * rho_eps) = 3 (x1^2 + eps^2 mu2), mu2 the kernel's second moment
    x1 = Polynomial.variable(2, 1)
    m = mollify(x1 * x1 * x1, 0.2)
    Y, W = rules.scaled_ball_rule(np.zeros(2), 1.0, 2, 32, 32)
    mu2 = float(np.dot(MollifierKernel(2).evaluate(Y) * Y[:, 0] ** 2, W))
    X = np.array([[0.3, -0.1], [-0.5, 0.4]])
    assert np.allclose(m.partial(1).evaluate(X), 3 * (X[:, 0] ** 2 + 0.04 * mu2), atol=1e-8)
    # kinked base: the default rule against a refined one
    g = field_from_spec({"mollify": {"maxaffine": [[0, 0, 0], [1, 0, 0], [0, 1, 0]]}, "eps": 0.3}, 2)
    fine = Mollified(g.base, 0.3, orders=(64, 192))
    x = np.array([[0.05, -0.02]])
    assert g.partial(1).evaluate(x) == pytest.approx(fine.partial(1).evaluate(x), abs=1e-3)


def test_sampled_field_interpolates_and_guards_grid():
    axes = [np.linspace(-1, 1, 41)] * 2
    s = Sampled.from_field(Polynomial.norm_squared(2), axes)
    assert float(s.evaluate(np.array([0.3, -0.2]))) == pytest.approx(0.13, abs=1e-5)
    with pytest.raises(OutOfGridError):
        s.evaluate(np.array([1.5, 0.0]))


def test_parse_field_rejects_unknown_symbols():
    with pytest.raises(ValueError):
        parse_field("x1 + y", 2)


# -- properties -------------------------------------------------------------


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_polynomial_partials_commute(seed, n):
    f = Polynomial.random(n, 4, np.random.default_rng(seed))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            assert f.partial(i).partial(j) == f.partial(j).partial(i)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 5))
def test_maxaffine_is_convex(seed, n, pieces):
    rng = np.random.default_rng(seed)
    f = MaxAffine.from_rows(rng.uniform(-3, 3, (pieces, n + 1)).tolist())
    x, y = rng.uniform(-5, 5, (2, 30, n))
    t = rng.random((30, 1))
    lhs = f.evaluate(t * x + (1 - t) * y)
    rhs = t[:, 0] * f.evaluate(x) + (1 - t[:, 0]) * f.evaluate(y)
    assert np.all(lhs <= rhs + 1e-9)


@given(st.integers(0, 2**32 - 1))
def test_polynomial_arithmetic_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    f, g = Polynomial.random(3, 3, rng), Polynomial.random(3, 3, rng)
    X = rng.uniform(-1, 1, (10, 3))
    assert np.allclose((f * g).evaluate(X), f.evaluate(X) * g.evaluate(X))
    assert np.allclose((f - g).evaluate(X), f.evaluate(X) - g.evaluate(X))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from supercurrents.exterior import (
    DimensionError,
    Superform,
    apply_J,
    beta,
    beta_power,
    canonicalize,
    dx,
    dxi,
    is_symmetric,
    power,
    wedge,
    wedge_all,
)
from supercurrents.fields import Polynomial

from helpers import random_form


def full_word(n):
    w = []
    for i in range(1, n + 1):
        w += [("x", i), ("xi", i)]
    return w


def test_wedge_anticommutes_degree_one():
    assert wedge(dxi(2, 1), dx(2, 1)) == -wedge(dx(2, 1), dxi(2, 1))


def test_repeated_generator_vanishes():
    assert wedge(dx(3, 1), dx(3, 1)).is_zero()
    assert canonicalize([("x", 1), ("x", 1)]) == (0, None, None)


def test_beta_squared_n2():
    expect = Superform.from_word(2, full_word(2), 2)
    assert wedge(beta(2), beta(2)) == expect
    assert beta_power(2, 2) == expect


def test_beta_powers():
    assert beta_power(3, 0) == Superform.scalar(3, 1)
    assert beta_power(3, 3) == Superform.from_word(3, full_word(3), 6)
    assert beta_power(2, 3).is_zero()
    for n in range(1, 5):
        assert beta_power(n, n).density() == math.factorial(n)
        assert Superform.volume(n).density() == 1


def test_J_examples():
    assert apply_J(dx(2, 1)) == dxi(2, 1)
    assert apply_J(dxi(2, 1)) == -dx(2, 1)
    assert apply_J(apply_J(dx(2, 1))) == -dx(2, 1)
    for n in (1, 2, 3):
        assert apply_J(beta(n)) == beta(n)


def test_symmetry_examples():
    assert is_symmetric(beta(3))
    assert not is_symmetric(Superform.from_word(2, [("x", 1), ("xi", 2)]))
    a = Superform.from_word(2, [("x", 1), ("xi", 2)]) + Superform.from_word(2, [("x", 2), ("xi", 1)])
    assert is_symmetric(a)
    with pytest.raises(ValueError):
        is_symmetric(dx(2, 1))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        wedge(dx(2, 1), dx(3, 1))


def test_text_round_trip():
    rng = np.random.default_rng(0)
    a = random_form(3, 1, 2, rng, degree=2)
    assert Superform.from_text(3, a.to_text()) == a


def test_wedge_evaluates_pointwise():
    x1 = Polynomial.variable(2, 1)
    a = Superform(2, 1, 1, {((1,), (1,)): x1, ((2,), (2,)): 1})
    b = Superform(2, 1, 1, {((1,), (1,)): 3, ((2,), (2,)): x1 * x1})
    X = np.array([[0.5, 0.0], [2.0, 1.0]])
    lhs = np.asarray(wedge(a, b).density().evaluate(X), dtype=float)
    # density(A ^ B) = tr(adj(A) B) for (1,1)-forms in n = 2
    rhs = X[:, 0] * X[:, 0] ** 2 + 3
    assert np.allclose(lhs, rhs)


# -- properties -------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


def _bideg(rng, n):
    return int(rng.integers(0, n + 1)), int(rng.integers(0, n + 1))


@given(seeds, dims)
def test_associativity(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_form(n, *_bideg(rng, n), rng, degree=1) for _ in range(3))
    assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))


@given(seeds, dims)
def test_supercommutativity(seed, n):
    rng = np.random.default_rng(seed)
    a = random_form(n, *_bideg(rng, n), rng, degree=1)
    b = random_form(n, *_bideg(rng, n), rng, degree=1)
    sign = (-1) ** ((a.p + a.q) * (b.p + b.q))
    assert wedge(a, b) == wedge(b, a).scale(sign)


@given(seeds, dims)
def test_J_squared(seed, n):
    rng = np.random.default_rng(seed)
    p, q = _bideg(rng, n)
    a = random_form(n, p, q, rng)
    assert apply_J(apply_J(a)) == a.scale((-1) ** (p + q))


@given(st.lists(st.tuples(st.sampled_from(["x", "xi"]), st.integers(1, 4)), max_size=8))
def test_canonicalize_matches_permutation_parity(word):
    sign, K, L = canonicalize(word)
    if len(set(word)) < len(word):
        assert sign == 0
        return
    # bubble sort on the canonical rank and count swaps
    ranks = [(0 if k == "x" else 1, i) for k, i in word]
    swaps = 0
    r = list(ranks)
    for i in range(len(r)):
        for j in range(len(r) - 1 - i):
            if r[j] > r[j + 1]:
                r[j], r[j + 1] = r[j + 1], r[j]
                swaps += 1
    assert sign == (-1) ** swaps
    assert K == tuple(sorted(i for k, i in word if k == "x"))
    assert L == tuple(sorted(i for k, i in word if k == "xi"))


@given(st.integers(1, 4), st.integers(0, 4))
def test_beta_power_is_symmetric_power(n, p):
    if p > n:
        assert beta_power(n, p).is_zero()
        return
    assert beta_power(n, p) == power(beta(n), p)
    if p:
        assert is_symmetric(beta_power(n, p))


def test_wedge_all_matches_nested():
    rng = np.random.default_rng(3)
    forms = [random_form(3, 1, 0, rng, degree=1), random_form(3, 0, 1, rng, degree=1), random_form(3, 1, 1, rng)]
    assert wedge_all(*forms) == wedge(wedge(forms[0], forms[1]), forms[2])

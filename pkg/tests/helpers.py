"""Random builders shared by the test modules."""
from itertools import combinations

import numpy as np

from supercurrents.exterior import Superform
from supercurrents.fields import Polynomial, bump


def random_form(n, p, q, rng, degree=3, density=0.6):
    """A (p,q)-form with random polynomial coefficients."""
    terms = {}
    for K in combinations(range(1, n + 1), p):
        for L in combinations(range(1, n + 1), q):
            if rng.random() < density:
                terms[(K, L)] = Polynomial.random(n, degree, rng, terms=3)
    return Superform(n, p, q, terms)


def random_symmetric_11(n, rng, degree=1):
    terms = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            c = Polynomial.random(n, degree, rng, terms=2)
            terms[((i,), (j,))] = c
            terms[((j,), (i,))] = c
    return Superform(n, 1, 1, terms)


def constant_psd_form(n, rng, shift=1):
    """sum A_ij dx_i ^ dxi_j with A = B^T B + shift I, integer entries."""
    B = rng.integers(-2, 3, (n, n))
    A = B.T @ B + shift * np.eye(n, dtype=int)
    return Superform(n, 1, 1, {((i + 1,), (j + 1,)): int(A[i, j])
                               for i in range(n) for j in range(n) if A[i, j]})


def bump_form(n, p, rng, center_box=0.3, radius=(0.5, 0.7)):
    """(p,p)-form whose coefficients are random multiples of one bump."""
    c = [round(float(v), 3) for v in rng.uniform(-center_box, center_box, n)]
    R = round(float(rng.uniform(*radius)), 3)
    b = bump(n, c, R)
    terms = {}
    for K in combinations(range(1, n + 1), p):
        for L in combinations(range(1, n + 1), p):
            terms[(K, L)] = b * float(round(rng.uniform(-2, 2), 3))
    return Superform(n, p, p, terms)

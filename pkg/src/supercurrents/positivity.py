"""Pointwise positivity cones, m-positivity, m-convexity and k-Hessian operators.

The constant relating wedge powers to principal-minor sums is

    alpha^k ^ beta^(n-k) = k! (n-k)! / n! * S_k(A) * beta^n,

for a (1,1)-form alpha with coefficient matrix A.  It is checked against
the exterior algebra in the tests; see :func:`wedge_minor_constant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Optional

import numpy as np

from .calculus import ddsharp
from .exterior import Superform, beta_power, is_symmetric, power, wedge, wedge_all
from .fields import Polynomial, ScalarField, as_points

TOL = 1e-9

CERTIFIED_TRUE = "certified_true"
CERTIFIED_FALSE = "certified_false"
PLAUSIBLY_TRUE = "plausibly_true"


@dataclass
class PositivityVerdict:
    status: str
    witness: Optional[dict] = None
    samples: Optional[int] = None
    context: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status != CERTIFIED_FALSE

    def to_dict(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, Fraction)):
                return float(v)
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return {"status": self.status, "witness": clean(self.witness), "samples": self.samples,
                "context": clean(self.context)}


def wedge_minor_constant(n: int, k: int) -> Fraction:
    """c with alpha^k ^ beta^(n-k) = c S_k(A) beta^n."""
    return Fraction(math.factorial(k) * math.factorial(n - k), math.factorial(n))


# -- determinants and minor sums ------------------------------------------


def _perm_sign(p):
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def det_leibniz(M):
    """Determinant by the Leibniz formula; works for any ring elements (fields, Fractions)."""
    k = len(M)
    if k == 0:
        return 1
    total = None
    for p in permutations(range(k)):
        term = M[0][p[0]]
        for i in range(1, k):
            term = term * M[i][p[i]]
        if _perm_sign(p) < 0:
            term = -term
        total = term if total is None else total + term
    return total


def principal_minor_sum(M, k: int):
    """S_k(M): sum of the k x k principal minors (exact for exact entries)."""
    n = len(M)
    if k == 0:
        return 1
    total = None
    for S in combinations(range(n), k):
        m = det_leibniz([[M[i][j] for j in S] for i in S])
        total = m if total is None else total + m
    return total


def elementary_symmetric(eigs, k: int):
    """e_k of the last axis of ``eigs`` (vectorised)."""
    eigs = np.asarray(eigs, dtype=float)
    E = [np.ones(eigs.shape[:-1])] + [np.zeros(eigs.shape[:-1]) for _ in range(k)]
    for idx in range(eigs.shape[-1]):
        lam = eigs[..., idx]
        for j in range(k, 0, -1):
            E[j] = E[j] + lam * E[j - 1]
    return E[k]


# -- k-Hessian -------------------------------------------------------------


def hessian_Fk(u: ScalarField, k: int) -> ScalarField:
    """F_k[u] = S_k(D^2 u) as a field (exact for polynomials)."""
    n = u.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    return principal_minor_sum(u.hessian(), k)


def check_eq1(u: Polynomial, k: int, constant=None) -> bool:
    """Exact test of (dd# u)^k ^ beta^(n-k) = c F_k[u] beta^n.

    ``constant`` defaults to :func:`wedge_minor_constant`; pass another value
    to test an alternative normalisation.
    """
    n = u.n
    c = wedge_minor_constant(n, k) if constant is None else constant
    lhs = wedge(power(ddsharp(u), k), beta_power(n, n - k))
    Fk = hessian_Fk(u, k)
    rhs = beta_power(n, n).scale(Fk * c if isinstance(Fk, ScalarField) else Fk * c)
    return lhs == rhs


# -- pointwise cones ---------------------------------------------------------


def _coefficient_matrix(a: Superform, x):
    if a.bidegree != (1, 1):
        raise ValueError("expected a (1,1)-form")
    if not is_symmetric(a):
        raise ValueError("form is not symmetric")
    exact = isinstance(x, (list, tuple)) and all(isinstance(v, (int, Fraction)) for v in x)
    A = []
    for row in a.matrix():
        out = []
        for c in row:
            if isinstance(c, ScalarField):
                v = c.evaluate(list(x) if exact else np.asarray(x, dtype=float))
            else:
                v = c
            out.append(v)
        A.append(out)
    return A, exact


def form_is_m_positive(a: Superform, x, m: int) -> PositivityVerdict:
    """alpha^j ^ beta^(n-j) >= 0 for j = 1..m, decided through S_j(A(x))."""
    n = a.n
    if not 1 <= m <= n:
        raise ValueError(f"m must be in 1..{n}")
    A, exact = _coefficient_matrix(a, x)
    ctx = {"cone": "m-positive", "m": m, "point": [float(v) for v in np.atleast_1d(x)]}
    if not exact:
        Af = np.asarray(A, dtype=float)
        scale = max(1.0, float(np.max(np.abs(Af))))
    for j in range(1, m + 1):
        if exact:
            S = principal_minor_sum(A, j)
            bad = S < 0
        else:
            S = float(principal_minor_sum(Af.tolist(), j))
            bad = S < -TOL * scale**j
        if bad:
            return PositivityVerdict(CERTIFIED_FALSE, {"j": j, "S_j": S, "point": ctx["point"]}, context=ctx)
    return PositivityVerdict(CERTIFIED_TRUE, context=ctx)


def _numeric_form(a: Superform, x):
    x = np.asarray(x, dtype=float)
    return a.map_coefficients(lambda c: float(c.evaluate(x)) if isinstance(c, ScalarField) else float(c))


def _one_form_J(n, V):
    """Sum_ij V_i V_j dx_i ^ dxi_j = a ^ J(a) for a = sum V_i dx_i; V may be (N, n)."""
    terms = {}
    for i in range(n):
        for j in range(n):
            terms[((i + 1,), (j + 1,))] = V[..., i] * V[..., j]
    return Superform(n, 1, 1, terms)


def weak_positivity_matrix(a: Superform):
    """For an (n-1, n-1)-form (numeric coefficients): Q_jk = density(a ^ dx_j ^ dxi_k)."""
    n = a.n
    Q = np.zeros((n, n))
    for j in range(n):
        for k in range(n):
            t = Superform(n, 1, 1, {((j + 1,), (k + 1,)): 1})
            Q[j, k] = float(wedge(a, t).density())
    return Q


def form_is_weakly_positive(a: Superform, x, samples: int = 10_000, seed: int = 0) -> PositivityVerdict:
    """Weak positivity of a symmetric (p,p)-form at x.

    p = 1 and p = n-1 reduce to a symmetric matrix being positive
    semidefinite; other bidegrees are only sampled with random (1,0)-forms.
    """
    n, p = a.n, a.p
    if a.p != a.q or not is_symmetric(a):
        raise ValueError("weak positivity needs a symmetric (p,p)-form")
    A = _numeric_form(a, x)
    ctx = {"cone": "weakly positive", "p": p, "point": np.atleast_1d(np.asarray(x, dtype=float)).tolist()}
    if p == 0:
        v = float(A[((), ())])
        return PositivityVerdict(CERTIFIED_TRUE if v >= -TOL else CERTIFIED_FALSE,
                                 None if v >= -TOL else {"value": v}, context=ctx)
    if p == n:
        v = float(A.density())
        return PositivityVerdict(CERTIFIED_TRUE if v >= -TOL else CERTIFIED_FALSE,
                                 None if v >= -TOL else {"density": v}, context=ctx)
    if p in (1, n - 1):
        M = np.asarray(A.matrix(), dtype=float) if p == 1 else weak_positivity_matrix(A)
        M = 0.5 * (M + M.T)
        w, V = np.linalg.eigh(M)
        scale = max(1.0, float(np.max(np.abs(w))))
        if w[0] < -TOL * scale:
            return PositivityVerdict(CERTIFIED_FALSE, {"eigenvalue": float(w[0]), "vector": V[:, 0]}, context=ctx)
        return PositivityVerdict(CERTIFIED_TRUE, context=ctx)
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((n - p, samples, n))
    vecs /= np.linalg.norm(vecs, axis=2, keepdims=True)
    test = wedge_all(*[_one_form_J(n, vecs[k]) for k in range(n - p)])
    dens = np.broadcast_to(np.asarray(wedge(A, test).density(), dtype=float), (samples,))
    i = int(np.argmin(dens))
    scale = max(1.0, max(abs(float(c)) for c in A.terms.values()) if A.terms else 1.0)
    if dens[i] < -TOL * scale:
        return PositivityVerdict(CERTIFIED_FALSE, {"density": float(dens[i]), "vectors": vecs[:, i, :]},
                                 samples=samples, context=ctx)
    return PositivityVerdict(PLAUSIBLY_TRUE, samples=samples, context=ctx)


def strongly_positive_sample(n: int, p: int, terms: int, rng) -> Superform:
    """Random sum lambda_s a_1 ^ J(a_1) ^ ... ^ a_p ^ J(a_p) with constant coefficients."""
    out = Superform(n, p, p)
    for _ in range(terms):
        vs = rng.standard_normal((p, n))
        piece = wedge_all(*[_one_form_J(n, v) for v in vs]) if p else Superform.scalar(n, 1.0)
        out = out + piece.scale(float(rng.random()))
    return out.map_coefficients(float)


def is_m_convex(u: ScalarField, points, m: int, scale=None) -> PositivityVerdict:
    """Sampled test of F_k[u](x) >= -tol for k = 1..m at the given points."""
    n = u.n
    X, _ = as_points(points, n)
    H = np.empty((len(X), n, n))
    hess = u.hessian()  # raises for MaxAffine
    for i in range(n):
        for j in range(n):
            H[:, i, j] = hess[i][j].evaluate(X)
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
    eigs = np.linalg.eigvalsh(H)
    mag = np.maximum(1.0, np.max(np.abs(eigs), axis=1))
    ctx = {"cone": "m-convex", "m": m, "points": len(X)}
    for k in range(1, m + 1):
        Fk = elementary_symmetric(eigs, k)
        thresh = -(scale if scale is not None else TOL) * mag**k
        bad = np.nonzero(Fk < thresh)[0]
        if len(bad):
            i = int(bad[np.argmin(Fk[bad])])
            return PositivityVerdict(CERTIFIED_FALSE, {"k": k, "F_k": float(Fk[i]), "point": X[i]},
                                     samples=len(X), context=ctx)
    return PositivityVerdict(PLAUSIBLY_TRUE, samples=len(X), context=ctx)


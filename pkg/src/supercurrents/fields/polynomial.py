"""Exact multivariate polynomials with rational coefficients."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

from .base import ScalarField, as_points


def _exact(c):
    if isinstance(c, (int, Fraction)):
        return c
    if isinstance(c, Rational):
        return Fraction(c)
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, np.integer):
        return int(c)
    raise TypeError(f"polynomial coefficients must be rational, got {type(c).__name__}")


class Polynomial(ScalarField):
    """Polynomial in x_1..x_n stored as ``{exponent tuple: coefficient}``.

    Coefficients are ints or Fractions, so arithmetic, differentiation and
    evaluation at rational points are exact.
    """

    __slots__ = ("coeffs",)

    def __init__(self, n: int, coeffs=None):
        super().__init__(n)
        clean = {}
        for exps, c in (coeffs or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for n={n}")
            c = _exact(c)
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c
                if clean[exps] == 0:
                    del clean[exps]
        self.coeffs = clean

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, n, c):
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n, i):
        """The coordinate x_i (1-based)."""
        e = [0] * n
        e[i - 1] = 1
        return cls(n, {tuple(e): 1})

    @classmethod
    def norm_squared(cls, n, center=None):
        """|x - center|^2 with exact coefficients."""
        center = [0] * n if center is None else list(center)
        out = cls(n)
        for i in range(n):
            xi = cls.variable(n, i + 1) - cls.constant(n, _exact(center[i]))
            out = out + xi * xi
        return out

    @classmethod
    def random(cls, n, max_degree, rng, terms=6, coeff_range=5):
        """Random integer-coefficient polynomial of total degree <= max_degree."""
        from itertools import product

        monos = [e for e in product(range(max_degree + 1), repeat=n) if sum(e) <= max_degree]
        pick = rng.choice(len(monos), size=min(terms, len(monos)), replace=False)
        coeffs = {monos[i]: int(rng.integers(-coeff_range, coeff_range + 1)) for i in pick}
        return cls(n, coeffs)

    @classmethod
    def from_sympy(cls, expr, symbols):
        import sympy

        poly = sympy.Poly(sympy.expand(expr), *symbols)
        coeffs = {}
        for monom, c in poly.terms():
            c = sympy.Rational(c)
            coeffs[tuple(monom)] = Fraction(int(c.p), int(c.q))
        return cls(len(symbols), coeffs)

    # -- queries ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.coeffs)

    def constant_value(self):
        return self.coeffs.get((0,) * self.n, 0)

    # -- arithmetic -----------------------------------------------------
    def _add_poly(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        p = Polynomial.__new__(Polynomial)
        ScalarField.__init__(p, self.n)
        p.coeffs = out
        return p

    def _mul_poly(self, other: "Polynomial") -> "Polynomial":
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0) + c1 * c2
                if v == 0:
                    out.pop(e, None)
                else:
                    out[e] = v
        p = Polynomial.__new__(Polynomial)
        ScalarField.__init__(p, self.n)
        p.coeffs = out
        return p

    def __neg__(self):
        return Polynomial(self.n, {e: -c for e, c in self.coeffs.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.n, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, frozenset(self.coeffs.items())))

    def partial(self, i: int) -> "Polynomial":
        k = self._axis(i)
        out = {}
        for e, c in self.coeffs.items():
            if e[k] == 0:
                continue
            ne = list(e)
            ne[k] -= 1
            out[tuple(ne)] = c * e[k]
        return Polynomial(self.n, out)

    def pow(self, k: int) -> "Polynomial":
        out = Polynomial.constant(self.n, 1)
        for _ in range(k):
            out = out._mul_poly(self)
        return out

    # -- evaluation -----------------------------------------------------
    def evaluate(self, x):
        if isinstance(x, (list, tuple)) and all(isinstance(v, (int, Fraction)) for v in x):
            if len(x) != self.n:
                raise ValueError(f"point has {len(x)} coordinates, expected {self.n}")
            total = 0
            for e, c in self.coeffs.items():
                term = c
                for v, k in zip(x, e):
                    if k:
                        term = term * v**k
                total += term
            return total
        X, single = as_points(x, self.n)
        out = np.zeros(X.shape[0])
        if self.coeffs:
            maxdeg = max(max(e) for e in self.coeffs)
            pows = np.ones((maxdeg + 1,) + X.shape)
            for k in range(1, maxdeg + 1):
                pows[k] = pows[k - 1] * X
            cols = np.arange(self.n)
            for e, c in self.coeffs.items():
                out += float(c) * np.prod(pows[list(e), :, cols], axis=0)
        return out[0] if single else out

    def to_sympy(self):
        import sympy

        from .symbolic import coordinate_symbols

        xs = coordinate_symbols(self.n)
        expr = sympy.Integer(0)
        for e, c in self.coeffs.items():
            term = sympy.Rational(c.numerator, c.denominator) if isinstance(c, Fraction) else sympy.Integer(c)
            for v, k in zip(xs, e):
                term = term * v**k
            expr = expr + term
        return expr

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for e, c in sorted(self.coeffs.items(), reverse=True):
            mon = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            cs = str(c)
            if "/" in cs or cs.startswith("-"):
                cs = f"({cs})"
            parts.append(cs if not mon else (mon if c == 1 else f"{cs}*{mon}"))
        return " + ".join(parts)

    def __repr__(self):
        return f"Polynomial(n={self.n}, {self})"

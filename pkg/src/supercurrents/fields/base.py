"""Base class for coefficient functions and generic combinators."""
from __future__ import annotations

from fractions import Fraction
from numbers import Number

import numpy as np


class SingularPointError(ValueError):
    """Raised when a field is evaluated at (or too close to) a singular point."""


def as_points(x, n: int):
    """Return ``(X, single)`` with ``X`` a float array of shape (N, n)."""
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        if X.shape[0] != n:
            raise ValueError(f"point has {X.shape[0]} coordinates, expected {n}")
        return X[None, :], True
    if X.ndim != 2 or X.shape[1] != n:
        raise ValueError(f"expected points of shape (N, {n}), got {X.shape}")
    return X, False


class ScalarField:
    """A function R^n -> R that can be evaluated and (usually) differentiated.

    Axes are 1-based, matching the ``dx_i`` generators.  ``evaluate`` accepts
    a single point or an (N, n) array and is vectorised in the second case.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = int(n)

    def evaluate(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)

    def partial(self, i: int) -> "ScalarField":
        raise NotImplementedError(f"{type(self).__name__} has no symbolic derivative")

    def gradient(self):
        return [self.partial(i) for i in range(1, self.n + 1)]

    def hessian(self):
        g = self.gradient()
        return [[g[i].partial(j + 1) for j in range(self.n)] for i in range(self.n)]

    def is_zero(self) -> bool:
        return False

    def _axis(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise ValueError(f"axis {i} outside 1..{self.n}")
        return i - 1

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other):
        from .polynomial import Polynomial

        if isinstance(other, ScalarField):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch {self.n} != {other.n}")
            return other
        if isinstance(other, (int, Fraction, float, np.integer, np.floating)) or (
            isinstance(other, Number) and not isinstance(other, complex)
        ):
            return Polynomial.constant(self.n, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return add_fields(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return mul_fields(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul_fields(self, self._coerce(-1))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return add_fields(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return add_fields(other, -self)

    def __truediv__(self, c):
        if isinstance(c, ScalarField):
            return NotImplemented
        c = Fraction(c) if isinstance(c, int) else c
        return self * (1 / c)


def _symbolic_ok(f) -> bool:
    return callable(getattr(f, "to_sympy", None))


def add_fields(a: ScalarField, b: ScalarField) -> ScalarField:
    from .polynomial import Polynomial
    from .symbolic import ExprField

    if isinstance(a, Polynomial) and isinstance(b, Polynomial):
        return a._add_poly(b)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    if _symbolic_ok(a) and _symbolic_ok(b):
        out = ExprField.from_sympy(a.to_sympy() + b.to_sympy(), a.n, _merge_singular(a, b))
        sa, sb = getattr(a, "support", None), getattr(b, "support", None)
        if sa is not None and sb is not None:
            out.support = _enclosing_ball(sa, sb)
        return out
    return SumField([a, b])


def _enclosing_ball(s1, s2):
    (c1, r1), (c2, r2) = s1, s2
    c1, c2 = np.asarray(c1, dtype=float), np.asarray(c2, dtype=float)
    dist = float(np.linalg.norm(c2 - c1))
    if dist + r2 <= r1:
        return s1
    if dist + r1 <= r2:
        return s2
    R = 0.5 * (dist + r1 + r2)
    c = c1 + (R - r1) * (c2 - c1) / dist
    return c, R


def mul_fields(a: ScalarField, b: ScalarField) -> ScalarField:
    from .polynomial import Polynomial
    from .symbolic import ExprField

    if isinstance(a, Polynomial) and isinstance(b, Polynomial):
        return a._mul_poly(b)
    if a.is_zero() or b.is_zero():
        return Polynomial(a.n)
    if _symbolic_ok(a) and _symbolic_ok(b):
        out = ExprField.from_sympy(a.to_sympy() * b.to_sympy(), a.n, _merge_singular(a, b))
        # a product is supported where either factor is
        sups = [s for s in (getattr(a, "support", None), getattr(b, "support", None)) if s is not None]
        if sups:
            out.support = min(sups, key=lambda s: s[1])
        return out
    return ProductField([a, b])


def _merge_singular(a, b):
    pts = list(getattr(a, "singular_points", ())) + list(getattr(b, "singular_points", ()))
    out = []
    for p in pts:
        if not any(np.allclose(p, q) for q in out):
            out.append(p)
    return out


class SumField(ScalarField):
    def __init__(self, terms):
        super().__init__(terms[0].n)
        self.terms = list(terms)

    def evaluate(self, x):
        return sum(t.evaluate(x) for t in self.terms)

    def partial(self, i):
        out = self.terms[0].partial(i)
        for t in self.terms[1:]:
            out = out + t.partial(i)
        return out

    def __repr__(self):
        return " + ".join(map(repr, self.terms))


class ProductField(ScalarField):
    def __init__(self, factors):
        super().__init__(factors[0].n)
        self.factors = list(factors)

    def evaluate(self, x):
        out = self.factors[0].evaluate(x)
        for f in self.factors[1:]:
            out = out * f.evaluate(x)
        return out

    def partial(self, i):
        # Leibniz rule
        out = None
        for k, f in enumerate(self.factors):
            rest = self.factors[:k] + self.factors[k + 1 :]
            term = f.partial(i)
            for g in rest:
                term = term * g
            out = term if out is None else out + term
        return out

    def __repr__(self):
        return " * ".join(f"({f!r})" for f in self.factors)


class FunctionField(ScalarField):
    """Wrap a vectorised numpy callable ``fn(X) -> (N,)``.

    ``derivatives`` optionally maps an axis to another FunctionField.
    """

    def __init__(self, n, fn, derivatives=None, name="f"):
        super().__init__(n)
        self.fn = fn
        self.derivatives = dict(derivatives or {})
        self.name = name

    def evaluate(self, x):
        X, single = as_points(x, self.n)
        out = np.asarray(self.fn(X), dtype=float)
        out = np.broadcast_to(out, (X.shape[0],)).copy()
        return out[0] if single else out

    def partial(self, i):
        self._axis(i)
        if i not in self.derivatives:
            raise NotImplementedError(f"no derivative registered for axis {i} of {self.name}")
        return self.derivatives[i]

    def __repr__(self):
        return f"FunctionField({self.name})"


class DomainError(ValueError):
    """Raised when a field is evaluated outside its domain (e.g. sqrt of a nonpositive value)."""


class PowerField(ScalarField):
    """base ** exponent on {base > 0}; evaluation elsewhere raises :class:`DomainError`."""

    def __init__(self, base: ScalarField, exponent):
        super().__init__(base.n)
        self.base = base
        self.exponent = exponent

    def evaluate(self, x):
        v = np.asarray(self.base.evaluate(x), dtype=float)
        if np.any(v <= 0):
            raise DomainError(f"{self.base!r} is not positive at some evaluation point")
        out = v ** float(self.exponent)
        return out if out.ndim else float(out)

    def partial(self, i):
        e = self.exponent
        return PowerField(self.base, e - 1) * self.base.partial(i) * e

    def __repr__(self):
        return f"({self.base!r})^{self.exponent}"

"""Closed-form fields backed by sympy expressions (radial profiles, logs, bumps)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy

from .base import ScalarField, SingularPointError, as_points

SINGULAR_TOL = 1e-12


@lru_cache(maxsize=None)
def coordinate_symbols(n: int):
    return sympy.symbols(f"x1:{n + 1}", real=True)


class ExprField(ScalarField):
    """Field given by a sympy expression in ``x1..xn``.

    ``singular_points`` lists points where the expression is not defined;
    evaluating within ``SINGULAR_TOL`` of one of them raises
    :class:`SingularPointError` instead of returning inf/nan.
    """

    def __init__(self, expr, n: int, singular_points=(), name=None, support=None):
        super().__init__(n)
        self.expr = expr
        self.singular_points = [np.asarray(p, dtype=float) for p in singular_points]
        self.name = name
        # optional (center, radius) ball outside which the field vanishes
        self.support = support
        self._fn = None

    @classmethod
    def from_sympy(cls, expr, n, singular_points=()):
        return cls(expr, n, singular_points)

    @classmethod
    def parse(cls, text: str, n: int, singular_points=()):
        xs = coordinate_symbols(n)
        local = {f"x{i + 1}": xs[i] for i in range(n)}
        expr = sympy.sympify(text.replace("^", "**"), locals=local)
        return cls(expr, n, singular_points)

    def to_sympy(self):
        return self.expr

    def is_zero(self) -> bool:
        return self.expr == 0

    def _compiled(self):
        if self._fn is None:
            self._fn = sympy.lambdify(coordinate_symbols(self.n), self.expr, modules="numpy")
        return self._fn

    def _check_singular(self, X):
        for p in self.singular_points:
            dist = np.linalg.norm(X - p, axis=1)
            if np.any(dist < SINGULAR_TOL):
                raise SingularPointError(f"{self} evaluated within {SINGULAR_TOL} of singular point {p}")

    def evaluate(self, x):
        X, single = as_points(x, self.n)
        self._check_singular(X)
        with np.errstate(all="ignore"):
            out = self._compiled()(*X.T)
        out = np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()
        return out[0] if single else out

    def partial(self, i):
        k = self._axis(i)
        d = sympy.diff(self.expr, coordinate_symbols(self.n)[k])
        return ExprField(d, self.n, self.singular_points, support=self.support)

    def __repr__(self):
        return self.name or f"ExprField({self.expr})"

    __str__ = __repr__


def radial(profile, n: int, center=None, singular=True, name=None) -> ExprField:
    """Field ``g(|x - center|)`` from a sympy expression ``profile`` in the symbol ``r``."""
    r = sympy.Symbol("r", positive=True)
    xs = coordinate_symbols(n)
    c = [0] * n if center is None else list(center)
    rho = sympy.sqrt(sum((xs[i] - sympy.nsimplify(c[i])) ** 2 for i in range(n)))
    expr = profile(r) if callable(profile) else profile
    expr = expr.subs(r, rho)
    return ExprField(expr, n, [c] if singular else (), name=name)


def phi_m(n: int, m: int) -> ExprField:
    """The m-convex model weight: log|x| if n = 2m, else -|x|^(2 - n/m) / (n/m - 2)."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    q = sympy.Rational(n, m)
    if q == 2:
        return radial(lambda r: sympy.log(r), n, name=f"phi_m(n={n},m={m})")
    return radial(lambda r: -1 / ((q - 2) * r ** (q - 2)), n, name=f"phi_m(n={n},m={m})")


def norm(n: int, center=None) -> ExprField:
    """|x - center|, singular (non-differentiable) at the center."""
    return radial(lambda r: r, n, center=center, name="|x|")


def bump(n: int, center, radius, power: int = 6) -> ExprField:
    """Compactly supported test function (1 - |x-c|^2/R^2)_+^power.

    It is C^(power-1), polynomial inside its support ball.
    """
    xs = coordinate_symbols(n)
    s = sum((xs[i] - sympy.nsimplify(center[i])) ** 2 for i in range(n)) / sympy.nsimplify(radius) ** 2
    expr = sympy.Piecewise(((1 - s) ** power, s < 1), (0, True))
    support = (np.asarray(center, dtype=float), float(radius))
    return ExprField(expr, n, name=f"bump(c={list(center)}, R={radius})", support=support)

"""Scalar coefficient fields."""
from __future__ import annotations

import sympy

from .base import (
    DomainError,
    FunctionField,
    PowerField,
    ProductField,
    ScalarField,
    SingularPointError,
    SumField,
    as_points,
)
from .maxaffine import MaxAffine
from .mollify import Mollified, MollifierKernel, mollify
from .polynomial import Polynomial
from .sampled import OutOfGridError, Sampled
from .symbolic import ExprField, bump, coordinate_symbols, norm, phi_m, radial

__all__ = [
    "ScalarField",
    "Polynomial",
    "ExprField",
    "MaxAffine",
    "Mollified",
    "MollifierKernel",
    "Sampled",
    "FunctionField",
    "SumField",
    "ProductField",
    "SingularPointError",
    "DomainError",
    "PowerField",
    "OutOfGridError",
    "as_points",
    "bump",
    "norm",
    "phi_m",
    "radial",
    "mollify",
    "parse_field",
    "field_from_spec",
    "partial_derivative",
]


def parse_field(text, n: int) -> ScalarField:
    """Parse ``"x1^2*x2 + 3"``-style text; polynomials come back as exact :class:`Polynomial`."""
    if isinstance(text, ScalarField):
        return text
    if isinstance(text, (int, float)):
        return Polynomial.constant(n, text)
    xs = coordinate_symbols(n)
    local = {f"x{i + 1}": xs[i] for i in range(n)}
    expr = sympy.sympify(str(text).replace("^", "**"), locals=local, rational=True)
    if expr.free_symbols - set(xs):
        raise ValueError(f"unknown symbols in {text!r}: {expr.free_symbols - set(xs)}")
    if expr.is_polynomial(*xs):
        return Polynomial.from_sympy(expr, xs)
    # singularities of non-polynomial text are not inferred; the origin is
    # flagged when the expression blows up there
    origin = {x: 0 for x in xs}
    try:
        v = expr.subs(origin)
        singular = [[0] * n] if (v.has(sympy.zoo, sympy.oo, -sympy.oo, sympy.nan)) else []
    except (ZeroDivisionError, TypeError):
        singular = [[0] * n]
    return ExprField(expr, n, singular)


def field_from_spec(spec, n: int) -> ScalarField:
    """Build a field from a scenario entry.

    Accepted shapes: a string or number (expression), ``{"poly": "..."}``,
    ``{"expr": "..."}``, ``{"maxaffine": [[a..., b], ...]}``,
    ``{"radial": {"kind": "phi_m", "m": m}}``, ``{"radial": {"kind": "norm"}}``,
    ``{"mollify": <spec>, "eps": e}``.
    """
    if isinstance(spec, (str, int, float)):
        return parse_field(spec, n)
    if not isinstance(spec, dict) or len(spec) == 0:
        raise ValueError(f"bad field spec {spec!r}")
    if "poly" in spec:
        f = parse_field(spec["poly"], n)
        if not isinstance(f, Polynomial):
            raise ValueError(f"{spec['poly']!r} is not a polynomial")
        return f
    if "expr" in spec:
        return parse_field(spec["expr"], n)
    if "maxaffine" in spec:
        rows = spec["maxaffine"]
        if any(len(r) != n + 1 for r in rows):
            raise ValueError("maxaffine rows must have n+1 entries")
        return MaxAffine.from_rows(rows)
    if "radial" in spec:
        r = spec["radial"]
        kind = r.get("kind")
        if kind == "phi_m":
            if int(r.get("n", n)) != n:
                raise ValueError("radial n does not match scenario dimension")
            return phi_m(n, int(r["m"]))
        if kind == "norm":
            return norm(n, r.get("center"))
        raise ValueError(f"unknown radial kind {kind!r}")
    if "mollify" in spec:
        return mollify(field_from_spec(spec["mollify"], n), float(spec["eps"]))
    raise ValueError(f"bad field spec {spec!r}")


def partial_derivative(f: ScalarField, i: int) -> ScalarField:
    return f.partial(i)

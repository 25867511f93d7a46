"""Built-in corpus: weights, model forms, submanifold and tropical currents, and named example currents."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import sympy

from .calculus import ddsharp
from .currents import SmoothCurrent, catenoid_current, plane_current, sphere_current, tropical_ddsharp
from .exterior import Superform, beta_power, power
from .fields import ExprField, MaxAffine, Polynomial, coordinate_symbols, phi_m
from .quadrature import AffineBox, TensorGrid, quad_params

__all__ = [
    "CATALOG",
    "Builtin",
    "list_builtins",
    "instantiate",
    "strip_counterexample",
    "strip_profiles",
    "sin_singularity",
    "sin_shell_regions",
    "sin_shell_exact_mass",
    "sin_shell_masses",
    "m_lelong_counterexample",
    "line_current",
]


def strip_profiles(power_: int = 6):
    """(f, g) with f = (1-t^2)^k, g = k(1-t^2)^(k-2) on |t| < 1, zero outside.

    Then 2g + f'' = 2k(2k-1) t^2 (1-t^2)^(k-2) >= 0, which is the convexity
    condition g dd#|x_2|^2 + dd# f >= 0 for the strip example.
    """
    k = power_
    t = sympy.Symbol("t", real=True)
    f = sympy.Piecewise(((1 - t**2) ** k, t**2 < 1), (0, True))
    g = sympy.Piecewise((k * (1 - t**2) ** (k - 2), t**2 < 1), (0, True))
    return t, f, g


def strip_counterexample(n: int = 2, power_: int = 6) -> SmoothCurrent:
    """T = f(x_2) dd#|x_1|^2 + g(x_2) |x_1|^2 dd#|x_2|^2 on R^2.

    Weakly positive and convex with support in |x_2| <= 1, yet nu_T(0, r)
    grows like r^2.
    """
    if n != 2:
        raise ValueError("the strip example lives in R^2")
    t, f, g = strip_profiles(power_)
    xs = coordinate_symbols(n)
    F = ExprField(f.subs(t, xs[1]), n, name="f(x2)")
    G = ExprField((g * xs[0] ** 2).subs(t, xs[1]), n, name="g(x2) x1^2")
    terms = {((1,), (1,)): F * 2, ((2,), (2,)): G * 2}
    return SmoothCurrent(Superform(n, 1, 1, terms), "strip_counterexample")


def sin_singularity() -> SmoothCurrent:
    """T = (1 - sin(1/(x1+x2)^2)) dx1 ^ dxi1 + (1 + sin(1/(x1+x2)^2)) dx2 ^ dxi2 on R^2."""
    x1, x2 = coordinate_symbols(2)
    s = sympy.sin(1 / (x1 + x2) ** 2)
    line = [[0.0, 0.0]]  # singular along x1 + x2 = 0; the origin is the flagged sample
    a = ExprField(1 - s, 2, line, name="1 - sin(1/(x1+x2)^2)")
    b = ExprField(1 + s, 2, line, name="1 + sin(1/(x1+x2)^2)")
    return SmoothCurrent(Superform(2, 1, 1, {((1,), (1,)): a, ((2,), (2,)): b}), "sin_singularity")


def sin_shell_regions(k: int):
    """The two pieces of {|x2| < 1, (2k pi + pi/4)^(-1/2) < |x1 + x2| < (2k pi)^(-1/2)}.

    Each piece is an AffineBox in the coordinates (s, x2) with x1 = s - x2.
    """
    if k < 1:
        raise ValueError("shell index starts at 1")
    a = 1 / math.sqrt(2 * k * math.pi + math.pi / 4)
    b = 1 / math.sqrt(2 * k * math.pi)
    M = np.array([[1.0, -1.0], [0.0, 1.0]])
    return [AffineBox(np.zeros(2), M, [lo, -1.0], [hi, 1.0]) for lo, hi in ((a, b), (-b, -a))]


def sin_shell_exact_mass(coefficients: int = 2) -> float:
    """Mass of dT on one shell: int |cos w| dw over [2k pi, 2k pi + pi/4] is sqrt(2)/2,
    times 2 for the x2-length and 2 for the two signs of x1 + x2, per coefficient."""
    return coefficients * 2 * math.sqrt(2)


def m_lelong_counterexample(n: int, m: int) -> SmoothCurrent:
    """-phi_m (dd# phi_m)^(m-1), an m-positive current whose scaled mass behaves like r^(2 - n/m)."""
    f = phi_m(n, m)
    form = power(ddsharp(f), m - 1).scale(-f) if m > 1 else Superform.scalar(n, -f)
    return SmoothCurrent(form, f"-phi_m(dd#phi_m)^{m - 1}")


def line_current(n: int = 2, axis: int = 1):
    """[x_axis-line]_s through the origin."""
    e = np.zeros((1, n))
    e[0, axis - 1] = 1.0
    return plane_current(n, np.zeros(n), e)


def _tropical(rows):
    return lambda n: tropical_ddsharp(MaxAffine.from_rows(_pad_rows(rows, n)))


def _pad_rows(rows, n):
    """Rows given for R^2-style [a1, a2, b]; keep the first n slopes, pad with zeros."""
    out = []
    for r in rows:
        a, b = list(r[:-1]), r[-1]
        a = (a + [0] * n)[:n]
        out.append(a + [b])
    return out


@dataclass(frozen=True)
class Builtin:
    name: str
    kind: str
    dims: Tuple[int, ...]
    description: str
    make: Callable


def _constant_psd(n):
    g = Polynomial.norm_squared(n) + Polynomial.constant(n, 1)
    return SmoothCurrent(beta_power(n, 1).scale(g), "(1+|x|^2) beta")


CATALOG: Dict[str, Builtin] = {b.name: b for b in [
    Builtin("phi_m", "field", (1, 2, 3, 4), "m-convex model weight, m = 1 (pass m for others)",
            lambda n, m=1: phi_m(n, m)),
    Builtin("norm_squared", "field", (1, 2, 3, 4), "|x|^2", lambda n: Polynomial.norm_squared(n)),
    Builtin("beta_power", "form", (1, 2, 3, 4), "beta^k, k = 1 by default", lambda n, k=1: beta_power(n, k)),
    Builtin("beta_current", "current", (2, 3, 4), "the closed current beta^(n-p) with p = n - 1",
            lambda n: SmoothCurrent(beta_power(n, 1), "beta")),
    Builtin("weighted_beta_current", "current", (2, 3, 4), "(1 + |x|^2) beta, convex", _constant_psd),
    Builtin("plane", "current", (2, 3, 4), "[coordinate line]_s", lambda n: line_current(n)),
    Builtin("sphere", "current", (3,), "[unit sphere]_s", lambda n: sphere_current()),
    Builtin("catenoid", "current", (3,), "[catenoid patch]_s, a minimal surface", lambda n: catenoid_current()),
    Builtin("tropical_hinge", "current", (1, 2, 3), "dd# max(0, x1)", _tropical([[0, 0, 0], [1, 0, 0]])),
    Builtin("tropical_abs", "current", (1, 2, 3), "dd# |x1|", _tropical([[1, 0, 0], [-1, 0, 0]])),
    Builtin("tropical_fan", "current", (2, 3), "dd# max(0, x1, x2)",
            _tropical([[0, 0, 0], [1, 0, 0], [0, 1, 0]])),
    Builtin("tropical_offset_fan", "current", (2, 3), "dd# max(0, x1 - 1, x2 - 1), vertex off the origin",
            _tropical([[0, 0, 0], [1, 0, -1], [0, 1, -1]])),
    Builtin("m_lelong_counterexample", "current", (3, 4), "-phi_m (dd# phi_m)^(m-1) with m = 1",
            lambda n, m=1: m_lelong_counterexample(n, m)),
    Builtin("paper_strip_counterexample", "current", (2,),
            "f(x2) dd#|x1|^2 + g(x2)|x1|^2 dd#|x2|^2: convex, in a strip, unbounded Lelong ratio",
            lambda n: strip_counterexample(n)),
    Builtin("paper_sin_singularity", "current", (2,),
            "(1 - sin(1/(x1+x2)^2)) dx1^dxi1 + (1 + sin(1/(x1+x2)^2)) dx2^dxi2; dT has infinite mass",
            lambda n: sin_singularity()),
]}


def list_builtins():
    return [{"name": b.name, "kind": b.kind, "dims": list(b.dims), "description": b.description}
            for b in CATALOG.values()]


def instantiate(name: str, n: int = None, **kw):
    try:
        b = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}") from None
    n = b.dims[0] if n is None else n
    if n not in b.dims:
        raise ValueError(f"{name} is defined for n in {b.dims}")
    return b.make(n, **kw)


def sin_shell_masses(count: int = 20, quad=None, T: Optional[SmoothCurrent] = None) -> dict:
    """Mass of dT on shells 1..count and the cumulative partial masses."""
    T = T or sin_singularity()
    dT = T.d()
    quad = quad or TensorGrid(24)
    per = []
    for k in range(1, count + 1):
        per.append(sum(dT.mass(reg, quad).value for reg in sin_shell_regions(k)))
    return {"per_shell": per, "partial": np.cumsum(per).tolist(), "exact_per_shell": sin_shell_exact_mass(),
            "quad": quad_params(quad)}

"""Lelong-Jensen terms, Lelong numbers for general weights, m-Lelong numbers and related checks.

Radii follow the weight: B(r) = {phi < r}.  For phi = |x - a|^2 this is the
Euclidean ball of radius sqrt(r), so nu_T(phi, r^2) equals the classical
r^(-p) int_{B(a, r)} T ^ beta^p.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from .calculus import alpha_matrix, boundary_flux, ddsharp, dsharp
from .currents import (
    Current,
    SmoothCurrent,
    SubmanifoldCurrent,
    TropicalCurrent,
    as_balls,
    default_quad,
)
from .exterior import Superform, beta_power, power, wedge
from .fields import Polynomial, PowerField, ScalarField
from .positivity import PositivityVerdict, form_is_weakly_positive, is_m_convex
from .quadrature import Ball, MeasureEstimate, MonteCarlo, Shell, Sublevel

__all__ = [
    "Weight",
    "LelongReport",
    "HypothesisError",
    "jensen_terms",
    "lelong_number",
    "classical_lelong",
    "m_lelong_number",
    "concave_lower_bound",
    "t5_integrability_diagnostic",
    "semicontinuity_check",
    "geometric_grid",
    "loglog_slope",
]

ATOM_SHIFT = 1e-6


class HypothesisError(ValueError):
    """A declared hypothesis failed a sampled spot-check; ``witness`` holds the evidence."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def geometric_grid(r_max: float = 1.0, points: int = 8, ratio: float = 0.5) -> List[float]:
    """Strictly decreasing grid r_max, r_max*ratio, ..."""
    return [r_max * ratio**k for k in range(points)]


def _check_grid(r_grid):
    r = [float(v) for v in r_grid]
    if not r or any(v <= 0 for v in r) or any(b >= a for a, b in zip(r, r[1:])):
        raise ValueError("r_grid must be strictly decreasing and positive")
    return r


def loglog_slope(r, v) -> float:
    """Least-squares slope of log|v| against log r."""
    r = np.asarray(r, dtype=float)
    v = np.abs(np.asarray(v, dtype=float))
    return float(np.polyfit(np.log(r), np.log(v), 1)[0])


class Weight:
    """A positive C^2 weight phi with omega = dd# phi and alpha = dd# phi^(1/2)."""

    def __init__(self, phi: ScalarField, box=None, name: Optional[str] = None):
        self.phi = phi
        self.n = phi.n
        self.box = box
        self.name = name or str(phi)
        self.omega = ddsharp(phi)
        self._grad = phi.gradient()
        self._hess = [[g.partial(j + 1) for j in range(self.n)] for g in self._grad]
        self._omega_powers = {}
        self.certificate: Optional[PositivityVerdict] = None

    @classmethod
    def euclidean(cls, n: int, center=None, scale=1) -> "Weight":
        """phi = scale * |x - center|^2."""
        phi = Polynomial.norm_squared(n, center)
        if scale != 1:
            phi = phi * Polynomial.constant(n, scale)
        return cls(phi, name=f"{scale}|x-a|^2")

    def scaled(self, c) -> "Weight":
        return Weight(self.phi * c, self.box, f"{c}*({self.name})")

    def ball(self, r: float):
        reg = Sublevel(self.phi, r, self.box)
        b = reg.as_ball()
        return b if b is not None else reg

    def shell(self, r1: float, r2: float):
        return Shell(self.phi, r1, r2, self.box)

    def omega_power(self, k: int) -> Superform:
        if k not in self._omega_powers:
            self._omega_powers[k] = power(self.omega, k) if k else Superform.scalar(self.n, 1)
        return self._omega_powers[k]

    def alpha_power(self, k: int, X) -> Superform:
        A = alpha_matrix(self.phi, X, self._grad, self._hess)
        a = Superform(self.n, 1, 1, {((i + 1,), (j + 1,)): A[:, i, j] for i in range(self.n) for j in range(self.n)})
        return power(a, k) if k else Superform.scalar(self.n, np.ones(len(X)))

    def certify_sqrt_convex(self, points) -> PositivityVerdict:
        """Sampled convexity of phi^(1/2) (F_k of its Hessian >= 0 for all k)."""
        v = is_m_convex(PowerField(self.phi, Fraction(1, 2)), points, self.n, scale=1e-7)
        self.certificate = v
        return v

    def describe(self):
        return {"phi": str(self.phi), "name": self.name}


def _scaled_form(F: Superform, factor):
    return F.map_coefficients(lambda c: c * factor)


def _mass_against(T: Current, S, region, quad) -> MeasureEstimate:
    """int_region T ^ S for a form S of complementary bidegree (or a callable)."""
    quad = quad or default_quad(region)
    return T.integrate_wedge(S, region, quad)


def ball_mass(T: Current, w: Weight, r: float, quad=None) -> MeasureEstimate:
    """int_{B(r)} T ^ omega^p."""
    return _mass_against(T, w.omega_power(T.p), w.ball(r), quad)


def nu(T: Current, w: Weight, r: float, quad=None) -> MeasureEstimate:
    """nu_T(phi, r) = int_{B(r)} T ^ omega^p / (2^p r^(p/2))."""
    p = T.p
    return ball_mass(T, w, r, quad).scale(1.0 / (2**p * r ** (p / 2)))


def _avoid_atoms(T: Current, w: Weight, r: float) -> float:
    """Shift r slightly when S(r) carries mass of a lower-dimensional current."""
    if isinstance(T, SubmanifoldCurrent):
        try:
            X, W = T.nodes(None)
        except (ValueError, TypeError):
            return r
        if len(X) and np.any(np.abs(w.phi.evaluate(X) - r) < 1e-9 * max(1.0, r)):
            return r * (1 + ATOM_SHIFT)
    return r


# -- Lelong-Jensen -----------------------------------------------------------


def _dd_current(T: Current, ddT="auto"):
    """dd#T; ``ddT`` overrides ("auto" derives it, None declares T closed)."""
    if not (isinstance(ddT, str) and ddT == "auto"):
        return ddT
    if isinstance(T, SmoothCurrent):
        return T.ddsharp()
    if isinstance(T, TropicalCurrent):
        return None  # dd# dd# f = 0
    raise ValueError("pass dd#T explicitly (or None for closed currents) for this representation")


def _is_zero_current(C) -> bool:
    return C is None or (isinstance(C, SmoothCurrent) and C.form.is_zero())


def _primitive_weight(p, r2):
    """W(a) = int_a^r2 (t^(-p/2) - r2^(-p/2)) / 2^p dt, vectorised in a."""

    def prim(t):
        if p == 2:
            return np.log(t)
        e = 1 - p / 2
        return t**e / e

    def W(a):
        a = np.asarray(a, dtype=float)
        return (prim(r2) - prim(a) - (r2 - a) * r2 ** (-p / 2)) / 2**p

    return W


@dataclass
class JensenTerms:
    r1: float
    r2: float
    normalized_mass_r1: float
    normalized_mass_r2: float
    shell: float
    dd_inner: float
    dd_outer: float
    stderr: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def lhs(self):
        return self.normalized_mass_r2 - self.normalized_mass_r1

    @property
    def rhs(self):
        return self.shell + self.dd_inner + self.dd_outer

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)

    @property
    def relative_residual(self):
        return self.residual / max(abs(self.lhs), 1e-300)

    def to_dict(self):
        return {"r1": self.r1, "r2": self.r2, "normalized_mass_r1": self.normalized_mass_r1,
                "normalized_mass_r2": self.normalized_mass_r2, "shell": self.shell, "dd_inner": self.dd_inner,
                "dd_outer": self.dd_outer, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "relative_residual": self.relative_residual, "stderr": self.stderr, **self.params}


def jensen_terms(T: Current, w: Weight, r1: float, r2: float, quad=None, ddT="auto") -> JensenTerms:
    """Every term of the Lelong-Jensen identity on B(r1) subset B(r2).

    The two dd#T terms, int_0^r1 dt int_{B(t)} ... and
    int_r1^r2 (...) dt int_{B(t)} ..., are rewritten with Fubini as single
    integrals over B(r1) and B(r2) of dd#T ^ omega^(p-1) times an explicit
    weight in phi(x).  ``ddT=None`` declares T closed.
    """
    if not r2 >= r1 > 0:
        raise ValueError("need r2 >= r1 > 0")
    p = T.p
    c = lambda r: 1.0 / (2**p * r ** (p / 2))  # noqa: E731
    if r2 == r1:
        m = ball_mass(T, w, _avoid_atoms(T, w, r1), quad)
        return JensenTerms(r1, r2, c(r1) * m.value, c(r1) * m.value, 0.0, 0.0, 0.0,
                           params={"weight": w.describe(), "p": p, "quad": (m.params or {})})
    r1, r2 = _avoid_atoms(T, w, r1), _avoid_atoms(T, w, r2)
    m1 = ball_mass(T, w, r1, quad)
    m2 = ball_mass(T, w, r2, quad)

    def alpha_p(X):
        return w.alpha_power(p, X)

    shell = _mass_against(T, alpha_p, w.shell(r1, r2), quad)
    D = _dd_current(T, ddT)
    if _is_zero_current(D) or p == 0:
        inner = outer = MeasureEstimate(0.0, 0.0, "exact-zero", 0)
    else:
        Om = w.omega_power(p - 1)
        W = _primitive_weight(p, r2)

        def inner_form(X):
            return _scaled_form(Om.evaluate(X), (c(r1) - c(r2)) * (r1 - w.phi.evaluate(X)))

        def outer_form(X):
            return _scaled_form(Om.evaluate(X), W(w.phi.evaluate(X)))

        inner = _mass_against(D, inner_form, w.ball(r1), quad)
        # the Fubini weight has a kink on S(r1): split B(r2) there
        core = _mass_against(D, Om, w.ball(r1), quad).scale(float(W(r1)))
        outer = core + _mass_against(D, outer_form, w.shell(r1, r2), quad)
    return JensenTerms(
        r1, r2, c(r1) * m1.value, c(r2) * m2.value, shell.value, inner.value, outer.value,
        stderr={"mass_r1": c(r1) * m1.stderr, "mass_r2": c(r2) * m2.stderr, "shell": shell.stderr,
                "dd_inner": inner.stderr, "dd_outer": outer.stderr},
        params={"weight": w.describe(), "p": p, "quad": (m1.params or {})},
    )


# -- Lelong numbers ----------------------------------------------------------


@dataclass
class LelongReport:
    r_grid: List[float]
    values: List[float]
    stderr: List[float]
    monotone_ok: bool
    limit_estimate: float
    bracket: tuple
    kind: str = "lelong"
    terms: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "r_grid": self.r_grid, "values": self.values, "stderr": self.stderr,
                "monotone_ok": self.monotone_ok, "limit_estimate": self.limit_estimate,
                "bracket": list(self.bracket), "terms": self.terms, **self.extra}

    def csv_rows(self):
        return [("r", "nu", "stderr")] + list(zip(self.r_grid, self.values, self.stderr))


def monotone_in_r(values, stderr, rel_tol=1e-12) -> bool:
    """Values listed along a decreasing r-grid must not increase (within 3 stderr)."""
    scale = max([abs(v) for v in values] + [1e-300])
    for a, b, sa, sb in zip(values, values[1:], stderr, stderr[1:]):
        if b > a + 3 * (sa + sb) + rel_tol * scale:
            return False
    return True


def _spot_check_positive(T: Current, points, seed=0):
    """Sampled weak positivity of a smooth current; returns a verdict or None."""
    if not isinstance(T, SmoothCurrent):
        return None
    for x in points:
        v = form_is_weakly_positive(T.form, x, samples=256, seed=seed)
        if not v.holds:
            return v
    return None


def _spot_check_convex(T: Current, w: Weight, points, sign=1):
    """Sampled sign of dd#(T ^ omega^(p-1)) for smooth T (sign=-1 for concavity)."""
    if not isinstance(T, SmoothCurrent) or T.p == 0:
        return None
    F = ddsharp(wedge(T.form, w.omega_power(T.p - 1)))
    if F.is_zero():
        return None
    for x in points:
        v = form_is_weakly_positive(F.map_coefficients(lambda c: c * sign), x, samples=256)
        if not v.holds:
            return v
    return None


def lelong_number(T: Current, w: Weight, r_grid=None, quad=None, hypotheses: Optional[dict] = None,
                  sample_points=None) -> LelongReport:
    """nu_T(phi, r) on a decreasing grid, with the monotonicity check of the convex case.

    ``hypotheses`` may declare ``{"convex": True}`` (T ^ omega^(p-1) convex) and
    ``{"positive": True}``; smooth currents are spot-checked at
    ``sample_points`` and a failed check raises :class:`HypothesisError`.
    The limit is reported as the smallest-r value with the bracket [0, nu(r_min)].
    """
    r = _check_grid(r_grid if r_grid is not None else geometric_grid())
    hyp = dict(hypotheses or {})
    if sample_points is not None:
        if hyp.get("positive"):
            bad = _spot_check_positive(T, sample_points)
            if bad is not None:
                raise HypothesisError("T is not weakly positive", bad.to_dict())
        if hyp.get("convex"):
            bad = _spot_check_convex(T, w, sample_points)
            if bad is not None:
                raise HypothesisError("T ^ omega^(p-1) is not convex", bad.to_dict())
        if w.certificate is None:
            w.certify_sqrt_convex(sample_points)
    vals, errs = [], []
    for rr in r:
        e = nu(T, w, _avoid_atoms(T, w, rr), quad)
        vals.append(e.value)
        errs.append(e.stderr)
    mono = monotone_in_r(vals, errs)
    return LelongReport(r, vals, errs, mono, vals[-1], (0.0, vals[-1]),
                        extra={"weight": w.describe(), "p": T.p, "hypotheses": hyp,
                               "sqrt_convex": None if w.certificate is None else w.certificate.status})


def _euclidean_mass(T: Current, a, r, quad):
    n = T.n
    return _mass_against(T, beta_power(n, T.p), Ball(np.asarray(a, dtype=float), r), quad)


def m_lelong_number(T: Current, a, m: int, p: Optional[int] = None, r_grid=None, quad=None,
                    slope_tol: float = 0.05) -> LelongReport:
    """r^(-(n/m)(m-n+p)) int_{B(a,r)} T ^ beta^p on a decreasing grid.

    Besides monotonicity the report carries the log-log slope of the scaled
    masses; a clearly negative slope means they blow up as r -> 0 and the
    limit is flagged as nonexistent.
    """
    n = T.n
    p = T.p if p is None else p
    if p != T.p:
        raise ValueError("p must be the bidimension of T")
    if m + p <= n:
        raise ValueError("m-Lelong numbers need m + p > n")
    r = _check_grid(r_grid if r_grid is not None else geometric_grid())
    expo = Fraction(n, m) * (m - n + p)
    vals, errs = [], []
    for rr in r:
        e = _euclidean_mass(T, a, rr, quad)
        s = rr ** (-float(expo))
        vals.append(e.value * s)
        errs.append(e.stderr * s)
    slope = loglog_slope(r, vals) if all(v != 0 for v in vals) else 0.0
    exists = slope > -slope_tol
    mono = monotone_in_r(vals, errs)
    return LelongReport(r, vals, errs, mono, vals[-1], (0.0, vals[-1]) if exists else (0.0, math.inf),
                        kind="m-lelong",
                        extra={"m": m, "p": p, "exponent": float(expo), "loglog_slope": slope,
                               "limit_exists": bool(exists), "center": list(map(float, a))})


def classical_lelong(T: Current, a, r_grid=None, quad=None) -> LelongReport:
    """r^(-p) int_{B(a, r)} T ^ beta^p (the m = n case)."""
    return m_lelong_number(T, a, T.n, T.p, r_grid, quad)


# -- concave corollary, integrability diagnostic, semicontinuity ----------------


def _classical_nu(T: Current, a, r, quad=None) -> MeasureEstimate:
    return _euclidean_mass(T, a, r, quad).scale(r ** (-T.p))


def concave_lower_bound(T: Current, a, r0: float, r_grid=None, quad=None, ddT="auto") -> dict:
    """Check nu_T(a, r) >= r nu_{dd#T}(a, r0) + c0 with c0 = min(0, Upsilon_T(r0)).

    Upsilon_T(r) = nu_T(a, r) - r nu_{dd#T}(a, r0).  T should be weakly
    negative and convex near a.
    """
    r = _check_grid(r_grid if r_grid is not None else geometric_grid(r0))
    if r[0] > r0 * (1 + 1e-12):
        raise ValueError("grid radii must not exceed r0")
    D = _dd_current(T, ddT)
    if _is_zero_current(D):
        dd0 = MeasureEstimate(0.0, 0.0, "exact-zero", 0)
    else:
        dd0 = _classical_nu(D, a, r0, quad)
    nu0 = _classical_nu(T, a, r0, quad)
    upsilon0 = nu0.value - r0 * dd0.value
    c0 = min(0.0, upsilon0)
    rows, ok = [], True
    for rr in r:
        lhs = _classical_nu(T, a, rr, quad)
        rhs = rr * dd0.value + c0
        tol = 3 * (lhs.stderr + rr * dd0.stderr + nu0.stderr) + 1e-12 * max(1.0, abs(rhs))
        good = lhs.value >= rhs - tol
        ok &= good
        rows.append({"r": rr, "nu_T": lhs.value, "bound": rhs, "margin": lhs.value - rhs, "ok": bool(good)})
    return {"ok": bool(ok), "c0": c0, "upsilon_r0": upsilon0, "nu_ddT_r0": dd0.value, "rows": rows}


def _nu_dd_flux(T: SmoothCurrent, w: Weight, t: float, points: int = 32) -> float:
    """nu_{dd#T}(phi, t) computed as a boundary flux over S(t) (captures point masses at the center)."""
    p = T.p
    region = w.ball(t)
    if not isinstance(region, Ball):
        raise ValueError("flux evaluation needs a round weight")
    Om = w.omega_power(p - 1)
    a = wedge(dsharp(T.form), Om)
    return boundary_flux(a, region, points) / (2 ** (p - 1) * t ** ((p - 1) / 2))


def t5_integrability_diagnostic(T: Current, w: Weight, r_grid=None, quad=None, mode="flux",
                                growth_tol: float = 0.1) -> dict:
    """Trapezoid estimate of int nu_{dd#T}(phi, t) / (2 t^(1/2)) dt on the grid and Lambda_T(r).

    Lambda_T(r) = nu_T(phi, r) + int_0^r ((t/r)^(p/2) - 1) nu_{dd#T}(phi, t) / (2 t^(1/2)) dt.
    Integrability near 0 is judged from the log-log slope s of the integrand:
    it is flagged divergent when s <= -1 + growth_tol.
    """
    r = _check_grid(r_grid if r_grid is not None else geometric_grid())
    if len(r) < 4:
        raise ValueError("need at least 4 grid points")
    p = T.p
    if isinstance(T, SmoothCurrent) and p >= 1:
        D = T.ddsharp()
        if D.form.is_zero():
            nud = [0.0] * len(r)
        elif mode == "flux":
            nud = [_nu_dd_flux(T, w, t) for t in r]
        else:
            nud = [nu(D, w, t, quad).value for t in r]
    elif isinstance(T, TropicalCurrent) or p == 0:
        nud = [0.0] * len(r)
    else:
        raise ValueError("dd#T is not evaluable for this representation")
    t = np.array(r[::-1])
    h = np.array(nud[::-1]) / (2 * np.sqrt(t))
    integral = float(trapezoid(h, t))
    nus = [nu(T, w, rr, quad).value for rr in r]
    nonzero = np.abs(h) > 1e-14 * max(1.0, float(np.max(np.abs(h))))
    slope = loglog_slope(t[nonzero], h[nonzero]) if np.count_nonzero(nonzero) >= 2 else 0.0
    integrable = bool(slope > -1 + growth_tol)
    lam = []
    for k, rr in enumerate(r):
        # the part of the t-integral resolved by the grid below rr
        mask = t <= rr
        tk, hk = t[mask], h[mask]
        tail = float(trapezoid(((tk / rr) ** (p / 2) - 1) * hk, tk)) if len(tk) > 1 else 0.0
        lam.append(nus[k] + tail)
    lam_increasing = all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(lam, lam[1:]))
    return {"integrable_estimate": integral, "integrand_loglog_slope": slope, "integrable": integrable,
            "nu_ddT": nud, "nu_T": nus, "Lambda": lam, "Lambda_increasing": lam_increasing, "r_grid": r}


def semicontinuity_check(T_seq, T_limit: Current, w: Weight, r_min: float, margin: float = 0.0,
                         tail_from: int = 0, quad=None) -> dict:
    """max_{k >= K} nu_{T_k}(phi, r_min) <= nu_T(phi, r_min + margin) + 3 stderr."""
    T_seq = list(T_seq)
    if not T_seq:
        raise ValueError("empty sequence")
    seq = [nu(Tk, w, r_min, quad) for Tk in T_seq]
    lim = nu(T_limit, w, r_min + margin, quad)
    tail = seq[tail_from:]
    worst = max(tail, key=lambda e: e.value)
    tol = 3 * (worst.stderr + lim.stderr) + 1e-9 * max(1.0, abs(lim.value))
    return {"ok": bool(worst.value <= lim.value + tol), "sequence": [e.value for e in seq],
            "limit_value": lim.value, "tail_max": worst.value, "r_min": r_min, "margin": margin}

"""Supercurrents: smooth forms, submanifold currents [M]_s and tropical dd# f.

Every current of bidimension (p, p) knows how to integrate ``T ^ S`` over a
region for a complementary (p, p)-form ``S``.  ``S`` can be a Superform with
field coefficients or a callable ``X -> Superform`` returning array
coefficients at the points ``X`` (used for alpha^p, mollified Hessians, ...).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, List, Optional

import numpy as np

from . import rules
from .calculus import d, ddsharp
from .exterior import Superform, beta_power, power, wedge, wedge_all
from .fields import MaxAffine, ScalarField, mollify
from .quadrature import (
    AffineBox,
    Ball,
    Box,
    MeasureEstimate,
    Region,
    Shell,
    Spherical,
    Sublevel,
    TensorGrid,
    integrate_density,
)

__all__ = [
    "Current",
    "SmoothCurrent",
    "SubmanifoldCurrent",
    "TropicalCurrent",
    "Facet",
    "NonGenericTieError",
    "tropical_ddsharp",
    "form_at",
    "form_support",
    "pair",
    "mass",
    "superhessian_product",
    "minimality_residual",
    "SuperHessianReport",
    "HessianCache",
    "richardson",
    "plane_current",
    "sphere_current",
    "catenoid_current",
]


class NonGenericTieError(ValueError):
    """Three or more affine pieces tie along a common hyperplane."""


def form_at(S, X, n: int):
    """Evaluate a form (or form-valued callable) at the points X (shape (N, n))."""
    if isinstance(S, Superform):
        return S.evaluate(X)
    out = S(X)
    if not isinstance(out, Superform):
        raise TypeError("form callable must return a Superform")
    return out


def _density_at(A: Superform, N: int):
    v = A.density()
    return np.broadcast_to(np.asarray(v, dtype=float), (N,))


def form_support(S) -> Optional[tuple]:
    """(center, radius) of a ball containing the supports of all coefficients, if known."""
    if not isinstance(S, Superform) or not S.terms:
        return None
    balls = []
    for c in S.terms.values():
        sup = getattr(c, "support", None)
        if sup is None:
            return None
        balls.append(sup)
    centers = np.array([b[0] for b in balls])
    c = centers.mean(axis=0)
    R = max(np.linalg.norm(b[0] - c) + b[1] for b in balls)
    return c, R


def default_quad(region):
    """Polar rules where the region is a (scaled) ball or annulus, a tensor grid otherwise.

    Orders shrink with the dimension to keep node counts near a million.
    """
    n = region.n
    round_ = (isinstance(region, Ball) or (isinstance(region, Sublevel) and region.as_ball() is not None)
              or (isinstance(region, Shell) and region.as_annulus() is not None))
    if round_:
        return {1: Spherical(24, 1), 2: Spherical(24, 24), 3: Spherical(24, 24), 4: Spherical(16, 12)}.get(
            n, Spherical(12, 6))
    return TensorGrid({1: 64, 2: 48, 3: 24, 4: 12}.get(n, 8))


def as_balls(region):
    """(center, r_inner, r_outer) for balls, round sublevel sets and round shells, else None."""
    if isinstance(region, Ball):
        return region.center, 0.0, region.radius
    if isinstance(region, Sublevel):
        b = region.as_ball()
        return None if b is None else (b.center, 0.0, b.radius)
    if isinstance(region, Shell):
        return region.as_annulus()
    return None


class Current:
    """Base class; a current of bidimension (p, p) on R^n x R^n."""

    n: int
    p: int

    @property
    def bidegree(self):
        return (self.n - self.p, self.n - self.p)

    def _check_test(self, S):
        if isinstance(S, Superform):
            if S.n != self.n:
                raise ValueError("dimension mismatch")
            if S.bidegree != (self.p, self.p):
                raise ValueError(f"test form must have bidegree ({self.p},{self.p}), got {S.bidegree}")

    def integrate_wedge(self, S, region: Optional[Region] = None, quad=None) -> MeasureEstimate:
        raise NotImplementedError

    def pair(self, S, quad=None) -> MeasureEstimate:
        """<T, S> for a compactly supported test form S."""
        self._check_test(S)
        sup = form_support(S)
        region = Ball(sup[0], sup[1]) if sup is not None else None
        return self.integrate_wedge(S, region, quad)

    def mass(self, region: Region, quad=None) -> MeasureEstimate:
        raise NotImplementedError


# -- smooth ----------------------------------------------------------------


class SmoothCurrent(Current):
    """A current given by a smooth (n-p, n-p) form (or any form with field coefficients)."""

    def __init__(self, form: Superform, name: str = "T"):
        self.form = form
        self.n = form.n
        self.p = form.n - form.p
        self.name = name

    def integrate_wedge(self, S, region=None, quad=None):
        if region is None:
            raise ValueError("smooth currents need a bounded region")
        if quad is None:
            quad = default_quad(region)
        self._check_test(S)

        def g(X):
            A = wedge(self.form.evaluate(X), form_at(S, X, self.n))
            return _density_at(A, len(X))

        return integrate_density(g, region, quad)

    def mass(self, region, quad=None):
        """sum_IJ int_region |T_IJ| dlambda."""
        if quad is None:
            quad = default_quad(region)
        terms = list(self.form.terms.values())

        def g(X):
            out = np.zeros(len(X))
            for c in terms:
                v = c.evaluate(X) if isinstance(c, ScalarField) else c
                out += np.abs(np.broadcast_to(np.asarray(v, dtype=float), (len(X),)))
            return out

        return integrate_density(g, region, quad)

    def d(self):
        return SmoothCurrent(d(self.form), f"d{self.name}")

    def ddsharp(self):
        return SmoothCurrent(ddsharp(self.form), f"dd#{self.name}")

    def scale(self, c):
        return SmoothCurrent(self.form.scale(c), f"{c}*{self.name}")

    def __repr__(self):
        return f"SmoothCurrent({self.name}, bidim=({self.p},{self.p}))"


# -- submanifolds ------------------------------------------------------------


def _one_form_J(n, V):
    terms = {}
    for i in range(n):
        for j in range(n):
            terms[((i + 1,), (j + 1,))] = V[:, i] * V[:, j]
    return Superform(n, 1, 1, terms)


def gram_schmidt_normals(grads: List[np.ndarray], tol: float = 1e-8):
    """Orthonormalise gradient fields (each (N, n)) in input order; abort on near-dependence."""
    out = []
    for g in grads:
        v = np.array(g, dtype=float)
        scale = np.linalg.norm(v, axis=1)
        for u in out:
            v = v - np.sum(v * u, axis=1)[:, None] * u
        norm = np.linalg.norm(v, axis=1)
        if np.any(norm <= tol * np.maximum(scale, 1.0)):
            raise ValueError("level-function gradients are (nearly) dependent on the mesh")
        out.append(v / norm[:, None])
    return out


class SubmanifoldCurrent(Current):
    """[M]_s = n_1 ^ n_1# ^ ... ^ n_k ^ n_k# * dS_M for M = {rho_1 = ... = rho_k = 0}.

    ``mesher(region)`` returns surface nodes and dS weights on M (restricted
    to ``region`` when the mesher can do so exactly); nodes outside the
    region are masked afterwards.
    """

    def __init__(self, n: int, p: int, levels: List[ScalarField], mesher: Callable, name: str = "[M]_s"):
        if len(levels) != n - p:
            raise ValueError("need n - p level functions")
        self.n, self.p = n, p
        self.levels = list(levels)
        self._grads = [f.gradient() for f in self.levels]
        self.mesher = mesher
        self.name = name

    def nodes(self, region=None):
        X, W = self.mesher(region)
        if region is not None and len(X):
            keep = region.contains(X) | getattr(self.mesher, "exact_region", lambda r: False)(region)
            X, W = X[keep], W[keep]
        return X, W

    def normals(self, X):
        grads = [np.stack([np.broadcast_to(np.asarray(gi.evaluate(X), dtype=float), (len(X),)) for gi in g], axis=1)
                 for g in self._grads]
        return gram_schmidt_normals(grads)

    def normal_form(self, X):
        if self.p == self.n:
            return Superform.scalar(self.n, np.ones(len(X)))
        return wedge_all(*[_one_form_J(self.n, nv) for nv in self.normals(X)])

    def integrate_wedge(self, S, region=None, quad=None):
        self._check_test(S)
        X, W = self.nodes(region)
        if len(X) == 0:
            return MeasureEstimate(0.0, 0.0, "surface", 0)
        A = wedge(self.normal_form(X), form_at(S, X, self.n))
        return MeasureEstimate(float(np.dot(_density_at(A, len(X)), W)), 0.0, "surface", len(X),
                               params={"mesh": getattr(self.mesher, "params", {})})

    def mass(self, region, quad=None):
        X, W = self.nodes(region)
        if len(X) == 0:
            return MeasureEstimate(0.0, 0.0, "surface", 0)
        N = self.normal_form(X)
        tot = sum(np.abs(np.broadcast_to(np.asarray(c, dtype=float), (len(X),))) for c in N.terms.values())
        return MeasureEstimate(float(np.dot(tot, W)), 0.0, "surface", len(X))

    def refined(self, factor: int = 2) -> "SubmanifoldCurrent":
        return SubmanifoldCurrent(self.n, self.p, self.levels, self.mesher.refined(factor), self.name)

    def __repr__(self):
        return f"SubmanifoldCurrent({self.name}, bidim=({self.p},{self.p}))"


class PlaneMesher:
    """Exact polar rules on plane discs and annuli {a + U t} cut out by round regions."""

    def __init__(self, point, U, radial=16, angular=16, extent=None):
        self.point = np.asarray(point, dtype=float)
        self.U = np.asarray(U, dtype=float)
        self.radial, self.angular = radial, angular
        self.extent = extent
        self.params = {"radial": radial, "angular": angular}

    def exact_region(self, region):
        return as_balls(region) is not None

    def __call__(self, region):
        p = self.U.shape[1]
        rb = as_balls(region) if region is not None else None
        if rb is None:
            if region is None and self.extent is None:
                raise ValueError("plane mesh needs a round region or an extent")
            if region is None:
                rb = (self.point, 0.0, float(self.extent))
            else:
                lo, hi = region.bbox()
                rb = (0.5 * (lo + hi), 0.0, 0.5 * float(np.linalg.norm(hi - lo)))
        c, R1, R2 = rb
        c = np.asarray(c, dtype=float)
        foot = self.point + self.U @ (self.U.T @ (c - self.point))
        h2 = float(np.sum((c - foot) ** 2))
        if h2 >= R2**2:
            return np.zeros((0, len(c))), np.zeros(0)
        rho2 = math.sqrt(R2**2 - h2)
        rho1 = math.sqrt(R1**2 - h2) if R1**2 > h2 else 0.0
        if rho1 == 0.0:
            Y, w = rules.ball_rule(p, self.radial, self.angular)
            return foot + rho2 * Y @ self.U.T, np.asarray(w) * rho2**p
        rho, wr = rules.gauss_interval(rho1, rho2, self.radial)
        wr = wr * rho ** (p - 1)
        V, wv = rules.sphere_rule(p, self.angular)
        Y = (rho[:, None, None] * V[None]).reshape(-1, p)
        return foot + Y @ self.U.T, (wr[:, None] * wv[None]).ravel()

    def refined(self, factor=2):
        return PlaneMesher(self.point, self.U, self.radial * factor, self.angular * factor, self.extent)


class ParamMesher:
    """Tensor rule on a parameter box (Gauss, or trapezoid on periodic axes)."""

    def __init__(self, param, lo, hi, periodic, points, jacobian=None, panels=1):
        self.param = param
        self.lo, self.hi = list(lo), list(hi)
        self.periodic = list(periodic)
        self.points = list(points)
        self.jacobian = jacobian
        self.panels = panels
        self.params = {"points": self.points, "panels": panels}

    def __call__(self, region):
        axes = []
        for a, b, per, m in zip(self.lo, self.hi, self.periodic, self.points):
            if per:
                t = a + (b - a) * (np.arange(m) + 0.5) / m
                axes.append((t, np.full(m, (b - a) / m)))
            else:
                axes.append(rules.composite_gauss_interval(a, b, self.panels, m))
        grids = np.meshgrid(*[t for t, _ in axes], indexing="ij")
        wg = np.meshgrid(*[w for _, w in axes], indexing="ij")
        T = np.stack([g.ravel() for g in grids], axis=1)
        Wp = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
        X = self.param(T)
        J = self.jacobian(T) if self.jacobian is not None else _fd_jacobian(self.param, T)
        area = np.sqrt(np.abs(np.linalg.det(np.einsum("nij,nik->njk", J, J))))
        return X, Wp * area

    def refined(self, factor=2):
        return ParamMesher(self.param, self.lo, self.hi, self.periodic, [m * factor for m in self.points],
                           self.jacobian, self.panels)


def _fd_jacobian(param, T, h=1e-6):
    cols = []
    for k in range(T.shape[1]):
        e = np.zeros(T.shape[1])
        e[k] = h
        cols.append((param(T + e) - param(T - e)) / (2 * h))
    return np.stack(cols, axis=2)


def plane_current(n: int, point, tangent, radial=16, angular=16) -> SubmanifoldCurrent:
    """[P]_s for the affine plane through ``point`` spanned by the rows of ``tangent``."""
    from .fields import Polynomial

    Tg = np.atleast_2d(np.asarray(tangent, dtype=float))
    p = Tg.shape[0]
    Q, _ = np.linalg.qr(np.concatenate([Tg.T, np.eye(n)], axis=1))
    U, normals = Q[:, :p], Q[:, p:n]
    a = np.asarray(point, dtype=float)
    levels = []
    for k in range(n - p):
        nu = normals[:, k]
        coeffs = {tuple(int(i == j) for i in range(n)): float(nu[j]) for j in range(n)}
        coeffs[(0,) * n] = -float(nu @ a)
        levels.append(Polynomial(n, coeffs))
    return SubmanifoldCurrent(n, p, levels, PlaneMesher(a, U, radial, angular), name=f"[plane dim {p}]_s")


def sphere_current(radius=1.0, center=(0.0, 0.0, 0.0), points=(24, 48)) -> SubmanifoldCurrent:
    from .fields import Polynomial

    c = np.asarray(center, dtype=float)
    rho = Polynomial.norm_squared(3, [float(v) for v in c]) - radius**2

    def param(T):
        th, ph = T[:, 0], T[:, 1]
        return c + radius * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    def jac(T):
        th, ph = T[:, 0], T[:, 1]
        dth = radius * np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
        dph = radius * np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), np.zeros_like(th)], axis=1)
        return np.stack([dth, dph], axis=2)

    mesher = ParamMesher(param, [0, 0], [np.pi, 2 * np.pi], [False, True], list(points), jac)
    return SubmanifoldCurrent(3, 2, [rho], mesher, name="[S^2]_s")


def catenoid_current(v_range=(-1.0, 1.0), points=(32, 16), panels=4) -> SubmanifoldCurrent:
    """Catenoid sqrt(x1^2 + x2^2) = cosh(x3), parametrised by (u, v) -> (cosh v cos u, cosh v sin u, v)."""
    from .fields import ExprField, coordinate_symbols
    import sympy

    x1, x2, x3 = coordinate_symbols(3)
    rho = ExprField(sympy.sqrt(x1**2 + x2**2) - sympy.cosh(x3), 3, name="catenoid")

    def param(T):
        u, v = T[:, 0], T[:, 1]
        return np.stack([np.cosh(v) * np.cos(u), np.cosh(v) * np.sin(u), v], axis=1)

    def jac(T):
        u, v = T[:, 0], T[:, 1]
        du = np.stack([-np.cosh(v) * np.sin(u), np.cosh(v) * np.cos(u), np.zeros_like(u)], axis=1)
        dv = np.stack([np.sinh(v) * np.cos(u), np.sinh(v) * np.sin(u), np.ones_like(u)], axis=1)
        return np.stack([du, dv], axis=2)

    mesher = ParamMesher(param, [0, v_range[0]], [2 * np.pi, v_range[1]], [True, False], list(points), jac, panels)
    return SubmanifoldCurrent(3, 2, [rho], mesher, name="[catenoid]_s")


# -- tropical ----------------------------------------------------------------


@dataclass
class Facet:
    i: int
    j: int
    g: np.ndarray
    weight: np.ndarray
    point: np.ndarray
    basis: np.ndarray  # (n, n-1) orthonormal basis of the facet hyperplane
    A: np.ndarray  # constraints A t <= b in facet coordinates
    b: np.ndarray


def _halfplane_clip(poly, a, b):
    """Clip a convex polygon (list of 2-vectors) by a . t <= b (Sutherland-Hodgman)."""
    out = []
    m = len(poly)
    for k in range(m):
        P, Q = poly[k], poly[(k + 1) % m]
        fp, fq = a @ P - b, a @ Q - b
        if fp <= 0:
            out.append(P)
        if fp * fq < 0:
            out.append(P + (Q - P) * (fp / (fp - fq)))
    return out


def _triangle_rule(P0, P1, P2, m):
    """Collapsed Gauss rule on a triangle (Duffy map)."""
    t, w = rules._legendre(m)
    s = 0.5 * (t + 1)
    ws = 0.5 * w
    U, V = np.meshgrid(s, s, indexing="ij")
    WU, WV = np.meshgrid(ws, ws, indexing="ij")
    a = U.ravel()
    b = (U * V).ravel()
    weights = (WU * WV).ravel() * U.ravel()
    E1, E2 = P1 - P0, P2 - P0
    area2 = abs(E1[0] * E2[1] - E1[1] * E2[0])
    pts = P0 + np.outer(a - b, E1) + np.outer(b, E2)
    return pts, weights * area2


def _line_annulus(x0, d_, center, r1, r2):
    """Parameter intervals of {x0 + t d : r1 < |x - center| < r2} for a unit vector d."""
    w = x0 - np.asarray(center, dtype=float)
    b = float(w @ d_)
    c = float(w @ w)

    def chord(r):
        disc = b * b - (c - r * r)
        if disc <= 0:
            return None
        s = math.sqrt(disc)
        return -b - s, -b + s

    outer = chord(r2)
    if outer is None:
        return []
    inner = chord(r1) if r1 > 0 else None
    if inner is None:
        return [outer]
    return [(outer[0], inner[0]), (inner[1], outer[1])]


def _graded_interval(a, b, t_star, h, m):
    """Gauss rule on [a, b] with panel breaks at t_star +- h 2^k."""
    h = max(h, 1e-3 * (b - a), 1e-12)
    offs = h * 2.0 ** np.arange(0, 64)
    cuts = np.concatenate([[t_star], t_star + offs, t_star - offs])
    cuts = np.unique(np.concatenate([[a, b], cuts[(cuts > a) & (cuts < b)]]))
    ts, ws = [], []
    for lo, hi in zip(cuts, cuts[1:]):
        t, w = rules.gauss_interval(lo, hi, m)
        ts.append(t)
        ws.append(w)
    return np.concatenate(ts), np.concatenate(ws)


class TropicalCurrent(Current):
    """dd# f for a max-affine f: facets F_ij with weights g g^T / |g| against H^(n-1)."""

    def __init__(self, f: MaxAffine, order: int = 16):
        self.f = f
        self.n = f.n
        self.p = f.n - 1
        self.order = order
        self.facets = self._facets()

    def _facets(self):
        A, B = self.f.slopes, self.f.offsets
        k, n = A.shape
        for i, j in combinations(range(k), 2):
            if np.allclose(A[i], A[j]) and np.isclose(B[i], B[j]):
                raise NonGenericTieError(f"pieces {i} and {j} coincide")
        facets = []
        for i, j in combinations(range(k), 2):
            g = A[i] - A[j]
            gn = np.linalg.norm(g)
            if gn == 0:
                continue  # parallel pieces never tie
            x0 = -(B[i] - B[j]) * g / gn**2
            Q, _ = np.linalg.qr(np.concatenate([g[:, None], np.eye(n)], axis=1))
            E = Q[:, 1:n]
            rows, rhs = [], []
            coincident = []
            for kk in range(k):
                if kk in (i, j):
                    continue
                # l_kk - l_i <= 0 on the facet, in coordinates x = x0 + E t
                a_ = (A[kk] - A[i]) @ E
                b_ = -((A[kk] - A[i]) @ x0 + (B[kk] - B[i]))
                if np.allclose(a_, 0) and abs(b_) < 1e-12:
                    coincident.append(kk)
                rows.append(a_)
                rhs.append(b_)
            Arr = np.array(rows, dtype=float).reshape(len(rows), n - 1)
            barr = np.array(rhs)
            if coincident:
                # a third piece equal to l_i on the whole hyperplane makes every facet there degenerate
                others = [kk for kk in range(k) if kk not in (i, j)]
                live = [r for r, kk in enumerate(others) if kk not in coincident]
                if self._nonempty(Arr[live], barr[live], n):
                    raise NonGenericTieError(f"pieces {i}, {j}, {coincident} tie on a common hyperplane")
                continue
            if not self._nonempty(Arr, barr, n):
                continue
            facets.append(Facet(i, j, g, np.outer(g, g) / gn, x0, E, Arr, barr))
        return facets

    @staticmethod
    def _nonempty(A, b, n):
        if n == 1:
            return bool(np.all(b >= -1e-12))
        from scipy.optimize import linprog

        # maximise the slack s subject to A t + s <= b; facet is (n-1)-dimensional iff s > 0
        m = A.shape[0]
        if m == 0:
            return True
        c = np.zeros(n)
        c[-1] = -1.0
        Aub = np.concatenate([A, np.ones((m, 1))], axis=1)
        bounds = [(-1e6, 1e6)] * (n - 1) + [(None, 1.0)]
        res = linprog(c, A_ub=Aub, b_ub=b, bounds=bounds, method="highs")
        return res.status == 0 and -res.fun > 1e-10

    def _facet_nodes(self, F: Facet, region):
        n = self.n
        if n == 1:
            X = F.point[None, :]
            W = np.ones(1)
        elif n == 2:
            lo, hi = -np.inf, np.inf
            for a_, b_ in zip(F.A[:, 0], F.b):
                if a_ > 0:
                    hi = min(hi, b_ / a_)
                elif a_ < 0:
                    lo = max(lo, b_ / a_)
            d_ = F.basis[:, 0]
            rb = as_balls(region)
            if rb is not None:
                pieces = _line_annulus(F.point, d_, *rb)
            else:
                blo, bhi = region.bbox()
                R = float(np.linalg.norm(np.maximum(np.abs(blo), np.abs(bhi)))) + float(np.linalg.norm(F.point))
                pieces = [(-R, R)]
            # panels grow geometrically away from the point closest to the region centre
            c_ = rb[0] if rb is not None else 0.5 * (blo + bhi)
            t_star = float((c_ - F.point) @ d_)
            h = float(np.linalg.norm(F.point + t_star * d_ - c_))
            ts, ws = [], []
            for a_, b_ in pieces:
                a_, b_ = max(a_, lo), min(b_, hi)
                if b_ > a_:
                    t, w = _graded_interval(a_, b_, t_star, h, self.order)
                    ts.append(t)
                    ws.append(w)
            if not ts:
                return np.zeros((0, n)), np.zeros(0)
            t, W = np.concatenate(ts), np.concatenate(ws)
            X = F.point + np.outer(t, d_)
            if rb is not None:
                return X, W
        elif n == 3:
            blo, bhi = region.bbox()
            c = 0.5 * (blo + bhi)
            R = 0.5 * float(np.linalg.norm(bhi - blo)) + 1e-9
            t0 = F.basis.T @ (c - F.point)
            poly = [t0 + R * np.array(v) for v in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
            for a_, b_ in zip(F.A, F.b):
                poly = _halfplane_clip(poly, a_, b_)
                if len(poly) < 3:
                    return np.zeros((0, n)), np.zeros(0)
            pts, ws = [], []
            for k in range(1, len(poly) - 1):
                P, W_ = _triangle_rule(poly[0], poly[k], poly[k + 1], self.order)
                pts.append(P)
                ws.append(W_)
            Tt = np.concatenate(pts)
            W = np.concatenate(ws)
            X = F.point + Tt @ F.basis.T
        else:
            raise NotImplementedError("tropical facets are implemented for n <= 3")
        if region is not None:
            keep = region.contains(X)
            X, W = X[keep], W[keep]
        return X, W


    def nodes(self, region):
        if region is None:
            raise ValueError("tropical currents need a bounded region")
        out = []
        for F in self.facets:
            X, W = self._facet_nodes(F, region)
            out.append((F, X, W))
        return out

    def integrate_wedge(self, S, region=None, quad=None):
        self._check_test(S)
        total, count = 0.0, 0
        for F, X, W in self.nodes(region):
            if len(X) == 0:
                continue
            Wf = Superform.from_matrix(self.n, F.weight.tolist())
            A = wedge(Wf, form_at(S, X, self.n))
            total += float(np.dot(_density_at(A, len(X)), W))
            count += len(X)
        return MeasureEstimate(total, 0.0, "facets", count)

    def mass(self, region, quad=None):
        total, count = 0.0, 0
        for F, X, W in self.nodes(region):
            total += float(np.sum(np.abs(F.weight))) * float(np.sum(W))
            count += len(X)
        return MeasureEstimate(total, 0.0, "facets", count)

    def __repr__(self):
        return f"TropicalCurrent(dd# {self.f!r}, {len(self.facets)} facets)"


def tropical_ddsharp(f: MaxAffine, order: int = 16) -> TropicalCurrent:
    return TropicalCurrent(f, order)


# -- generic helpers -----------------------------------------------------------


def pair(T: Current, S, quad=None) -> MeasureEstimate:
    return T.pair(S, quad)


def mass(T: Current, region: Region, quad=None) -> MeasureEstimate:
    lo, hi = region.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("mass needs a bounded region")
    return T.mass(region, quad)


# -- superHessian products -----------------------------------------------------


@dataclass
class SuperHessianReport:
    eps: List[float]
    values: List[float]
    extrapolated: float
    cauchy_ok: bool
    params: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.extrapolated

    def to_dict(self):
        return {"eps": self.eps, "values": self.values, "extrapolated": self.extrapolated,
                "cauchy_ok": self.cauchy_ok, **self.params}


def richardson(eps, values, order=2):
    """Extrapolate values(eps) = v0 + c eps^order + ... to eps = 0 from the last points."""
    e = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) == 1:
        return float(v[0])
    if len(v) == 2:
        r = (e[0] / e[1]) ** order
        return float((r * v[1] - v[0]) / (r - 1))
    e, v = e[-3:], v[-3:]
    M = np.stack([np.ones(3), e**order, e ** (2 * order)], axis=1)
    return float(np.linalg.solve(M, v)[0])


class HessianCache:
    """Hessian matrices of mollified fields at node sets, keyed by (field, eps, nodes)."""

    def __init__(self, maxsize: int = 32):
        self._store = {}
        self.maxsize = maxsize

    def get(self, u, eps, X):
        key = (id(u), float(eps), X.shape, hash(X.tobytes()))
        if key not in self._store:
            if len(self._store) >= self.maxsize:
                self._store.pop(next(iter(self._store)))
            self._store[key] = (u, mollify(u, eps).hessian_matrix(X))
        return self._store[key][1]


HESSIAN_CACHE = HessianCache()


def _matrix_form(n, H):
    return Superform(n, 1, 1, {((i + 1,), (j + 1,)): H[:, i, j] for i in range(n) for j in range(n)})


def _support_box(test, region):
    if region is not None:
        return region
    sup = form_support(test)
    if sup is None:
        raise ValueError("test form has no known support; pass a region")
    c, R = sup
    return Box(c - R, c + R)


def default_eps_quad(region, eps, points=4):
    """Composite Gauss grid with panels of width about eps/2 on the region's bounding box."""
    lo, hi = region.bbox()
    panels = int(np.ceil(float(np.max(hi - lo)) / (0.5 * eps)))
    return TensorGrid(points, max(panels, 1))


def superhessian_product(T: Current, m: int, u_list, test, eps_schedule=None, region=None, quad=None,
                         smooth: bool = False, check: bool = True, cache: Optional[HessianCache] = None,
                         seed: int = 0) -> SuperHessianReport:
    """<T ^ beta^(n-m) ^ dd# u_1^eps ^ ... ^ dd# u_q^eps, test> along an eps schedule.

    ``smooth=True`` uses dd# u_j directly.  Otherwise u_j^eps = u_j * rho_eps
    and the last three values are Richardson-extrapolated assuming an O(eps^2)
    error, which holds for symmetric kernels and piecewise smooth u_j.
    ``quad`` may be a callable ``eps -> quadrature``; by default a composite
    grid resolving the eps-scale is used.  ``T`` must be a SmoothCurrent.
    """
    if not isinstance(T, SmoothCurrent):
        raise TypeError("superhessian_product needs a smooth current T")
    n, p = T.n, T.p
    q = len(u_list)
    if q > p + m - n:
        raise ValueError(f"q = {q} exceeds p + m - n = {p + m - n}")
    if check:
        from .positivity import is_m_convex

        pts = np.random.default_rng(seed).uniform(-1, 1, size=(64, n))
        for u in u_list:
            if isinstance(u, MaxAffine):
                continue  # max of affine functions is convex
            if not is_m_convex(u, pts, m).holds:
                raise ValueError(f"{u!r} is not {m}-convex on the sample")
    cache = cache or HESSIAN_CACHE
    eps_schedule = list(eps_schedule) if eps_schedule is not None else [2.0**-k for k in range(3, 9)]
    reg = _support_box(test, region)
    Bm = beta_power(n, n - m)
    dd = [None if not smooth else ddsharp(u) for u in u_list]

    def value(eps):
        def g(X):
            parts = [T.form.evaluate(X), Bm]
            for u, D in zip(u_list, dd):
                parts.append(D.evaluate(X) if D is not None else _matrix_form(n, cache.get(u, eps, X)))
            parts.append(form_at(test, X, n))
            return _density_at(wedge_all(*parts), len(X))

        qd = quad(eps) if callable(quad) else quad
        if qd is None:
            qd = TensorGrid(24) if eps is None else default_eps_quad(reg, eps)
        return integrate_density(g, reg, qd).value

    if smooth:
        v = value(None)
        return SuperHessianReport([], [v], v, True, {"m": m, "q": q, "mode": "smooth"})
    values = [value(e) for e in eps_schedule]
    extrap = richardson(eps_schedule, values)
    diffs = np.abs(np.diff(values))
    cauchy = bool(len(diffs) < 2 or diffs[-1] <= diffs[-2] * 1.05 + 1e-12)
    return SuperHessianReport([float(e) for e in eps_schedule], values, extrap, cauchy,
                              {"m": m, "q": q, "mode": "mollified"})


# -- minimality ----------------------------------------------------------------


def minimality_residual(M: SubmanifoldCurrent, p: int, battery) -> float:
    """max over (0,1)-test forms psi of |<[M]_s ^ beta^(p-1), d psi>|.

    This vanishes for all psi exactly when [M]_s ^ beta^(p-1) is d-closed.
    """
    if p != M.p:
        raise ValueError("p must equal the dimension of M")
    n = M.n
    Bp = beta_power(n, p - 1)
    worst = 0.0
    for psi in battery:
        if psi.bidegree != (0, 1):
            raise ValueError("battery forms must have bidegree (0,1)")
        dpsi = d(psi)
        sup = form_support(psi)
        region = Ball(sup[0], sup[1]) if sup is not None else None

        def S(X, dpsi=dpsi):
            return wedge(Bp, dpsi.evaluate(X))

        val = M.integrate_wedge(S, region).value
        worst = max(worst, abs(val))
    return worst

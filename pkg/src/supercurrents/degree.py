"""Degree of currents at infinity, Lelong-class weights, comparison checks and strip experiments.

Partial degrees are accumulated over the annuli between consecutive break
radii, so for a positive integrand they are nondecreasing by construction
and each annulus gets its own polar rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import rules
from .calculus import alpha_matrix
from .currents import (
    HESSIAN_CACHE,
    Current,
    SmoothCurrent,
    SubmanifoldCurrent,
    TropicalCurrent,
    _density_at,
    _line_annulus,
    _matrix_form,
    default_quad,
)
from .exterior import Superform, beta_power, power, wedge, wedge_all
from .fields import Mollified, Polynomial, ScalarField, as_points, norm
from .lelong import HypothesisError, Weight, loglog_slope, nu
from .quadrature import Ball, MeasureEstimate, Shell, quad_params

__all__ = [
    "DegreeReport",
    "LelongClassFunction",
    "degree",
    "weighted_degree",
    "sigma_growth",
    "verify_comparison_local",
    "verify_comparison_infinity",
    "growth_link_check",
    "strip_experiment",
    "degree_semicontinuity_check",
    "tropical_origin_atom",
    "field_hessian",
]

EXCISION = 1e-6


# -- hessians of weights -------------------------------------------------------

_HESS = {}


def field_hessian(phi: ScalarField, X) -> np.ndarray:
    """Hessian matrices of phi at the points, shape (N, n, n)."""
    X, _ = as_points(X, phi.n)
    if isinstance(phi, Mollified):
        return phi.hessian_matrix(X)
    key = id(phi)
    if key not in _HESS:
        _HESS[key] = (phi, phi.hessian())  # keep phi alive so the id stays unique
    H = _HESS[key][1]
    n = phi.n
    out = np.empty((len(X), n, n))
    for i in range(n):
        for j in range(n):
            out[:, i, j] = np.broadcast_to(np.asarray(H[i][j].evaluate(X), dtype=float), (len(X),))
    return out


def _sampled_convex(phi: ScalarField, X, tol=1e-9):
    """Smallest Hessian eigenvalue (relative) over the points, with the worst point."""
    H = field_hessian(phi, X)
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
    w = np.linalg.eigvalsh(H)
    scale = np.maximum(1.0, np.max(np.abs(w), axis=1))
    rel = w[:, 0] / scale
    i = int(np.argmin(rel))
    return rel[i] >= -tol, {"eigenvalue": float(w[i, 0]), "point": X[i].tolist()}


def _sphere_samples(n, radii, count, seed, center=None):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((count, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return [c + r * U for r in radii]


# -- Lelong class -----------------------------------------------------------------


class LelongClassFunction:
    """A convex f with a growth certificate f(x) <= C|x| + D.

    Convexity is tested by midpoints, which needs no derivatives and so also
    covers max-affine functions.  When C or D is missing it is estimated from
    the outermost sample shells and then validated on the whole schedule.
    """

    def __init__(self, f: ScalarField, C: Optional[float] = None, D: Optional[float] = None,
                 radii: Sequence[float] = tuple(2.0**k for k in range(11)), samples: int = 256, seed: int = 0):
        self.f = f
        self.n = f.n
        self.radii = [float(r) for r in radii]
        shells = _sphere_samples(self.n, self.radii, samples, seed)
        vals = [np.asarray(f.evaluate(S), dtype=float) for S in shells]
        self._check_convex(samples, seed)
        if C is None:
            C = max(0.0, max(float(np.max(v)) / r for v, r in zip(vals[-2:], self.radii[-2:])))
        if D is None:
            f0 = float(np.asarray(f.evaluate(np.zeros((1, self.n))), dtype=float)[0])
            D = max([f0] + [float(np.max(v)) - C * r for v, r in zip(vals, self.radii)])
        self.C, self.D = float(C), float(D)
        for v, r, S in zip(vals, self.radii, shells):
            excess = v - (self.C * r + self.D)
            k = int(np.argmax(excess))
            if excess[k] > 1e-9 * max(1.0, abs(v[k])):
                raise HypothesisError("growth certificate fails", {"point": S[k].tolist(), "excess": float(excess[k])})

    def _check_convex(self, samples, seed):
        rng = np.random.default_rng(seed + 1)
        R = self.radii[-1]
        A = rng.uniform(-R, R, size=(samples, self.n))
        B = rng.uniform(-R, R, size=(samples, self.n))
        fa, fb = self.f.evaluate(A), self.f.evaluate(B)
        fm = self.f.evaluate(0.5 * (A + B))
        gap = np.asarray(fm - 0.5 * (fa + fb), dtype=float)
        k = int(np.argmax(gap))
        if gap[k] > 1e-9 * max(1.0, abs(float(fm[k]))):
            raise HypothesisError("midpoint convexity fails", {"a": A[k].tolist(), "b": B[k].tolist(),
                                                              "gap": float(gap[k])})

    def evaluate(self, X):
        return self.f.evaluate(X)

    def describe(self):
        return {"f": str(self.f), "C": self.C, "D": self.D, "radii": self.radii}


# -- degree -----------------------------------------------------------------------


@dataclass
class DegreeReport:
    R_grid: List[float]
    partials: List[float]
    stderr: List[float]
    converged: bool
    limit: float
    excision: float = 0.0
    origin_atom: Optional[float] = None
    weight: str = "|x|"
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"R_grid": self.R_grid, "partials": self.partials, "stderr": self.stderr,
                "converged": self.converged, "limit": self.limit, "excision": self.excision,
                "origin_atom": self.origin_atom, "weight": self.weight, "params": self.params}

    def csv_rows(self):
        return [("R", "partial", "stderr")] + list(zip(self.R_grid, self.partials, self.stderr))


def _check_R_grid(R_grid):
    R = [float(v) for v in R_grid]
    if not R or R[0] <= 0 or any(b <= a for a, b in zip(R, R[1:])):
        raise ValueError("R_grid must be positive and strictly increasing")
    return R


def _break_radii(R, excise):
    """excise, doubling radii up to R[0], then the grid with doublings in between."""
    out = [excise]
    while out[-1] * 2 < R[-1]:
        out.append(out[-1] * 2)
    return sorted(set([v for v in out if v < R[-1]] + R))


def tropical_origin_atom(T: TropicalCurrent, tol: float = 1e-12) -> float:
    """Mass of T ^ dd#|x| at the origin for a planar tropical current.

    Along a facet through 0 with weight |g|, the derivative of |x| in the
    facet direction jumps by 1 for each facet direction leaving the origin
    (2 for a full line, 1 for a ray ending there).
    """
    if T.n != 2:
        raise NotImplementedError("origin atoms are computed for planar tropical currents only")
    total = 0.0
    for F in T.facets:
        d_ = F.basis[:, 0]
        if abs(float(F.point @ np.array([-d_[1], d_[0]]))) > tol:
            continue  # the facet line misses 0
        t0 = float(-F.point @ d_)
        lo, hi = -np.inf, np.inf
        for a_, b_ in zip(F.A[:, 0], F.b):
            if a_ > 0:
                hi = min(hi, b_ / a_)
            elif a_ < 0:
                lo = max(lo, b_ / a_)
        if not lo - tol <= t0 <= hi + tol:
            continue
        sides = int(hi > t0 + tol) + int(lo < t0 - tol)
        total += sides * float(np.linalg.norm(F.g))
    return total


def _degree_core(T: Current, form_at_X, R, excise, quad, weight_name, params, atom=None, rtol=1e-2):
    radii = _break_radii(R, excise)
    partial, err2 = 0.0, 0.0
    partials, errs = [], []
    first_shell = None
    nodes = 0
    for a, b in zip(radii, radii[1:]):
        region = Shell(Polynomial.norm_squared(T.n), a * a, b * b)
        est = T.integrate_wedge(form_at_X, region, quad or default_quad(region))
        nodes += est.n_samples
        if first_shell is None:
            first_shell = est.value
        partial += est.value
        err2 += est.stderr**2
        if b in R:
            partials.append(partial)
            errs.append(math.sqrt(err2))
    n, p = T.n, T.p
    # mass in {|x| < excise} from the homogeneity |x|^(-p) of the weight density
    excision = abs(first_shell) / (2 ** (n - p) - 1) if n > p else float("nan")
    atom_v = 0.0 if atom is None else atom
    if len(partials) >= 2:
        diff = abs(partials[-1] - partials[-2])
        converged = bool(diff <= rtol * max(abs(partials[-1]), 1e-300) + 3 * errs[-1] + 1e-14)
    else:
        converged = False
    params = {**params, "excise": excise, "break_radii": len(radii), "nodes": nodes,
              "quad": quad_params(quad) if quad is not None else "default", "rtol": rtol}
    return DegreeReport(R, [v + atom_v for v in partials], errs, converged, partials[-1] + atom_v,
                        excision, atom, weight_name, params)


def degree(T: Current, R_grid, quad=None, excise: float = EXCISION, rtol: float = 1e-2,
           include_atom: bool = True) -> DegreeReport:
    """Partial degrees int_{excise < |x| < R} T ^ (dd#|x|)^p over the R grid.

    dd#|x| is evaluated as the alpha form of |x|^2.  For planar tropical
    currents through the origin the atom there is added (and reported) when
    ``include_atom`` is set; other currents are assumed to carry no mass at 0.
    """
    n, p = T.n, T.p
    if p >= n:
        raise ValueError(f"(dd#|x|)^{p} vanishes off the origin for p >= n = {n}")
    R = _check_R_grid(R_grid)
    w = Weight.euclidean(n)

    def S(X):
        return w.alpha_power(p, X)

    atom = None
    if include_atom and isinstance(T, TropicalCurrent) and n == 2:
        atom = tropical_origin_atom(T)
    return _degree_core(T, S, R, excise, quad, "|x|", {"p": p}, atom, rtol)


def weighted_degree(T: Current, phi: ScalarField, R_grid, quad=None, excise: float = EXCISION,
                    rtol: float = 1e-2, check: bool = True, samples: int = 128, seed: int = 0) -> DegreeReport:
    """Partial integrals of T ^ (dd# phi)^p over {excise < |x| < R}.

    The nodes depend only on the Euclidean annuli, so changing phi to
    lambda * phi changes every node value by lambda^p and nothing else.
    """
    n, p = T.n, T.p
    R = _check_R_grid(R_grid)
    if check:
        pts = np.concatenate(_sphere_samples(n, [R[0] / 2, R[-1] / 2, R[-1]], samples, seed))
        ok, wit = _sampled_convex(phi, pts)
        if not ok:
            raise HypothesisError("weight is not convex on the sample", wit)

    def S(X):
        return power(_matrix_form(n, field_hessian(phi, X)), p) if p else Superform.scalar(n, np.ones(len(X)))

    return _degree_core(T, S, R, excise, quad, str(phi), {"p": p}, None, rtol)


# -- sigma growth ------------------------------------------------------------------


def _support_samples(T: Optional[Current], n, rho, count, seed):
    """Points of Supp T on the sphere |x| = rho (all directions when T is None or smooth)."""
    if T is None or isinstance(T, SmoothCurrent):
        S = _sphere_samples(n, [rho], count, seed)[0]
        if T is None:
            return S
        vals = T.form.evaluate(S)
        nz = np.zeros(len(S), dtype=bool)
        for c in vals.terms.values():
            nz |= np.broadcast_to(np.asarray(c, dtype=float), (len(S),)) != 0
        return S[nz]
    if isinstance(T, TropicalCurrent) and n == 2:
        pts = []
        for F in T.facets:
            d_ = F.basis[:, 0]
            lo, hi = -np.inf, np.inf
            for a_, b_ in zip(F.A[:, 0], F.b):
                if a_ > 0:
                    hi = min(hi, b_ / a_)
                elif a_ < 0:
                    lo = max(lo, b_ / a_)
            for seg in _line_annulus(F.point, d_, np.zeros(2), 0.0, rho):
                for t in seg:
                    if lo - 1e-12 <= t <= hi + 1e-12:
                        pts.append(F.point + t * d_)
        return np.array(pts).reshape(-1, 2)
    # surface nodes in a thin shell just inside the sphere
    if isinstance(T, (SubmanifoldCurrent, TropicalCurrent)):
        shell = Shell(Polynomial.norm_squared(n), (0.95 * rho) ** 2, rho**2)
        if isinstance(T, TropicalCurrent):
            chunks = [X for _, X, _ in T.nodes(shell)]
            return np.concatenate(chunks) if chunks else np.zeros((0, n))
        return T.nodes(shell)[0]
    raise TypeError(f"cannot sample the support of {type(T).__name__}")


def sigma_growth(u, phi: Optional[ScalarField] = None, radii: Sequence[float] = tuple(2.0**k for k in range(1, 11)),
                 support: Optional[Current] = None, samples: int = 512, seed: int = 0) -> dict:
    """Per-radius maxima of u / phi on Supp T intersected with spheres |x| = rho.

    phi defaults to |x|.  The estimate is the value on the outermost sphere;
    the whole schedule is returned so an underestimated limsup is visible.
    """
    f = u.f if isinstance(u, LelongClassFunction) else u
    n = f.n
    phi = phi or norm(n)
    per, running = [], []
    best = -np.inf
    for k, rho in enumerate(radii):
        X = _support_samples(support, n, float(rho), samples, seed + k)
        if len(X) == 0:
            per.append(float("nan"))
            running.append(best)
            continue
        den = np.asarray(phi.evaluate(X), dtype=float)
        if np.any(np.abs(den) < 1e-300):
            raise ValueError("phi vanishes on the samples")
        m = float(np.max(np.asarray(f.evaluate(X), dtype=float) / den))
        per.append(m)
        best = max(best, m)
        running.append(best)
    finite = [v for v in per if not math.isnan(v)]
    if not finite:
        raise ValueError("no support samples on the schedule")
    return {"sigma": finite[-1], "per_radius": per, "running_max": running, "radii": [float(r) for r in radii]}


# -- comparison theorems -------------------------------------------------------------


def _ratio_limsup(T, phi_w: Weight, psi_w: Weight, center, radii, samples=256, seed=0):
    """Per-radius maxima of psi/phi on Supp T near phi^(-1)(0) = {center}."""
    n = phi_w.n
    out = []
    for k, rho in enumerate(radii):
        X = _support_samples(T, n, rho, samples, seed + k) if not isinstance(T, SubmanifoldCurrent) else None
        if X is None:
            shell = Shell(Polynomial.norm_squared(n, list(center)), (0.5 * rho) ** 2, rho**2)
            X = T.nodes(shell)[0]
        else:
            X = X + np.asarray(center, dtype=float)
        if len(X) == 0:
            continue
        out.append(float(np.max(psi_w.phi.evaluate(X) / phi_w.phi.evaluate(X))))
    return out


def verify_comparison_local(T: Current, phi: Weight, psi: Weight, l: Optional[float] = None, r_grid=None,
                            quad=None, exponent: Optional[float] = None, center=None, equality: bool = False,
                            rel_tol: float = 1e-2, check: bool = True) -> dict:
    """Compare nu_T(psi, r) with l^e nu_T(phi, r) at the smallest r of the grid.

    With the radius convention B(r) = {phi < r} and the r^(p/2) normalisation,
    nu_T(c phi, r) = c^(p/2) nu_T(phi, r / c), so the default exponent is p/2.
    The literal exponent p is evaluated as well and reported beside it.
    """
    n, p = T.n, T.p
    r_grid = [float(v) for v in (r_grid or [0.25, 0.125, 0.0625])]
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    e = p / 2 if exponent is None else float(exponent)
    hyp = {}
    if check:
        pts = _sphere_samples(n, [0.1, 0.5], 64, 0, center)
        for name, w in (("phi", phi), ("psi", psi)):
            v = w.certify_sqrt_convex(np.concatenate(pts))
            hyp[name] = v.status
            if not v.holds:
                raise HypothesisError(f"sqrt({name}) is not convex", v.witness)
    schedule = None
    if l is None:
        schedule = _ratio_limsup(T, phi, psi, center, [0.1 * 0.5**k for k in range(6)])
        l = schedule[-1]
    r = r_grid[-1]
    a = nu(T, psi, r, quad)
    b = nu(T, phi, r, quad)
    bound = l**e * b.value
    slack = 3 * math.hypot(a.stderr, l**e * b.stderr)
    rec = {"nu_psi": a.value, "nu_phi": b.value, "l": l, "exponent": e, "r": r,
           "holds": bool(a.value <= bound + slack + 1e-12 * abs(bound)),
           "literal_exponent": p, "literal_bound": l**p * b.value,
           "literal_holds": bool(a.value <= l**p * b.value + slack + 1e-12 * abs(bound)),
           "l_schedule": schedule, "hypotheses": hyp}
    if equality:
        rel = abs(a.value - bound) / abs(a.value) if a.value else abs(bound)
        rel_lit = abs(a.value - l**p * b.value) / abs(a.value) if a.value else abs(l**p * b.value)
        rec.update(relative_error=rel, equal=bool(rel <= rel_tol),
                   literal_relative_error=rel_lit, literal_equal=bool(rel_lit <= rel_tol))
    return rec


def _product_form(n, fields, eps):
    """X -> dd# f_1 ^ ... ^ dd# f_q, mollified at eps (eps None: exact Hessians)."""

    def S(X):
        mats = [_matrix_form(n, field_hessian(f, X) if eps is None else HESSIAN_CACHE.get(f, eps, X))
                for f in fields]
        return wedge_all(*mats) if mats else Superform.scalar(n, np.ones(len(X)))

    return S


def verify_comparison_infinity(T: Current, u_list, v_list=None, l_list=None, R: float = 64.0, eps: float = 0.5,
                               quad=None, R_grid=None, rtol: float = 1e-2) -> dict:
    """int T ^ dd#u_1 ^ ... ^ dd#u_p  <=  prod l_j * int T ^ dd#v_1 ^ ... ^ dd#v_p.

    Both sides are integrated over B(R) with u_j, v_j mollified at ``eps``.
    Without ``v_list`` the right side is the degree with l_j = sigma(u_j)
    sampled on Supp T.  A divergent degree raises ValueError.
    """
    n, p = T.n, T.p
    if len(u_list) != p:
        raise ValueError(f"need p = {p} functions")
    R_grid = R_grid or [R / 4, R / 2, R]
    region = Ball(np.zeros(n), R)
    lhs = T.integrate_wedge(_product_form(n, [getattr(u, "f", u) for u in u_list], eps), region, quad)
    sigmas = None
    if v_list is None:
        deg = degree(T, R_grid, rtol=rtol)
        if not deg.converged:
            raise ValueError(f"degree does not converge on the grid: {deg.partials}")
        if l_list is None:
            sigmas = [sigma_growth(u, support=T) for u in u_list]
            l_list = [s["sigma"] for s in sigmas]
        rhs_v, rhs_err = deg.limit, deg.stderr[-1]
    else:
        if l_list is None:
            raise ValueError("l_list is needed with v_list")
        rhs = T.integrate_wedge(_product_form(n, [getattr(v, "f", v) for v in v_list], eps), region, quad)
        rhs_v, rhs_err = rhs.value, rhs.stderr
    L = float(np.prod(l_list))
    bound = L * rhs_v
    slack = 3 * math.hypot(lhs.stderr, L * rhs_err)
    return {"lhs": lhs.value, "rhs": rhs_v, "l": list(map(float, l_list)), "bound": bound,
            "holds": bool(lhs.value <= bound + slack + 1e-9 * max(1.0, abs(bound))),
            "sigma": None if sigmas is None else [s["per_radius"] for s in sigmas], "R": R, "eps": eps}


# -- Lelong numbers at the origin with strip-aware quadrature ---------------------------


def strip_nodes(n: int, k: int, r: float, points: int = 24, panels: int = 4, radial: int = 24, angular: int = 24):
    """Nodes for B(0, r) intersected with {|x''|_inf <= 1}, x'' = (x_(k+1), ..., x_n).

    x'' runs over a composite Gauss grid, and for each x'' the slice of the
    ball in x' = (x_1, ..., x_k) gets a polar rule.
    """
    m = n - k
    h = min(1.0, r)
    U, wu = rules.gauss_box(-h * np.ones(m), h * np.ones(m), points, panels)
    rho2 = r * r - np.sum(U**2, axis=1)
    Xs, Ws = [], []
    for u, w, s2 in zip(U, wu, rho2):
        if s2 <= 0:
            continue
        Y, wy = rules.scaled_ball_rule(np.zeros(k), math.sqrt(s2), k, radial, angular)
        Xs.append(np.concatenate([Y, np.broadcast_to(u, (len(Y), m))], axis=1))
        Ws.append(w * wy)
    if not Xs:
        return np.zeros((0, n)), np.zeros(0)
    return np.concatenate(Xs), np.concatenate(Ws)


def _ball_mass(T: Current, r: float, k: Optional[int] = None, nodes=None) -> MeasureEstimate:
    """int_{B(0,r)} T ^ beta^p, with strip nodes for smooth currents when k is given."""
    S = beta_power(T.n, T.p)
    if isinstance(T, SmoothCurrent) and k is not None:
        X, W = strip_nodes(T.n, k, r, **(nodes or {}))
        A = wedge(T.form.evaluate(X), S)
        return MeasureEstimate(float(np.dot(_density_at(A, len(X)), W)), 0.0, "strip", len(X))
    return T.integrate_wedge(S, Ball(np.zeros(T.n), r))


def _classical_nu(T: Current, r: float, k=None, nodes=None) -> MeasureEstimate:
    return _ball_mass(T, r, k, nodes).scale(r ** (-T.p))


def _check_strip_support(T: Current, k: int, delta: float, r_max: float, samples: int = 4096, seed: int = 0):
    n = T.n

    def outside(X):
        return np.sum(np.abs(X[:, k:]) ** delta, axis=1) > 1 + 1e-9

    if isinstance(T, SmoothCurrent):
        X = np.random.default_rng(seed).uniform(-r_max, r_max, size=(samples, n))
        X = X[outside(X)]
        vals = T.form.evaluate(X)
        for c in vals.terms.values():
            c = np.broadcast_to(np.asarray(c, dtype=float), (len(X),))
            bad = np.nonzero(c != 0)[0]
            if len(bad):
                raise HypothesisError("support leaves the strip", {"point": X[bad[0]].tolist()})
        return
    if isinstance(T, TropicalCurrent):
        X = np.concatenate([Y for _, Y, _ in T.nodes(Ball(np.zeros(n), r_max))] or [np.zeros((0, n))])
    elif isinstance(T, SubmanifoldCurrent):
        X = T.nodes(Ball(np.zeros(n), r_max))[0]
    else:
        raise TypeError(f"cannot sample the support of {type(T).__name__}")
    bad = np.nonzero(outside(X))[0] if len(X) else []
    if len(bad):
        raise HypothesisError("support leaves the strip", {"point": X[bad[0]].tolist()})


def strip_experiment(T: Current, k: int, delta: float = 2, r_grid=None, rel_tol: float = 5e-2,
                     nodes: Optional[dict] = None, declared: str = "concave") -> dict:
    """nu_T(0, r) for growing r when Supp T lies in {sum_(j>k) |x_j|^delta <= 1}.

    The boundedness flag compares the last three values.  The growth
    exponent is the log-log slope over the upper half of the grid.
    """
    n, p = T.n, T.p
    if not 0 <= k <= n:
        raise ValueError("k must be in 0..n")
    if p < k:
        raise ValueError("the strip theorem needs p >= k")
    r_grid = [float(v) for v in (r_grid or [2.0**j for j in range(0, 7)])]
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be increasing")
    _check_strip_support(T, k, delta, r_grid[-1])
    vals = [_classical_nu(T, r, k, nodes).value for r in r_grid]
    last = np.abs(vals[-3:])
    top = float(np.max(last))
    bounded = bool(top == 0 or (top - float(np.min(last))) <= rel_tol * top)
    half = len(r_grid) // 2
    slope = loglog_slope(r_grid[half:], vals[half:]) if top > 0 else 0.0
    return {"r_grid": r_grid, "nu": vals, "bounded": bounded, "growth_exponent": slope,
            "fit_from": r_grid[half], "k": k, "delta": delta, "declared": declared}


def growth_link_check(T: Current, r_grid, ddT="auto", k: Optional[int] = None, declared: str = "concave",
                      nodes: Optional[dict] = None) -> dict:
    """Smallest c >= 0 with r nu_(dd#T)(0, r) >= -c nu_T(0, 2r) on the grid.

    Also reports max |r nu_(dd#T)(0, r)| / nu_T(0, 2r), the constant in the
    O-bound.  ``k`` switches to strip quadrature for currents in a strip.
    """
    if isinstance(ddT, str) and ddT == "auto":
        if not isinstance(T, SmoothCurrent):
            raise ValueError("dd#T is only derived for smooth currents; pass it explicitly")
        ddT = T.ddsharp()
    r_grid = [float(v) for v in r_grid]
    rows = []
    c, ratio = 0.0, 0.0
    violation = False
    for r in r_grid:
        a = 0.0 if ddT is None else r * _classical_nu(ddT, r, k, nodes).value
        b = _classical_nu(T, 2 * r, k, nodes).value
        rows.append({"r": r, "r_nu_ddT": a, "nu_T_2r": b})
        if b > 0:
            c = max(c, -a / b)
            ratio = max(ratio, abs(a) / b)
        elif a < -1e-12:
            violation = True
    return {"c": c, "ratio": ratio, "violation": violation, "rows": rows, "declared": declared}


def degree_semicontinuity_check(family, limit, R_grid, phi=False, T: Optional[Current] = None,
                                tail_from: int = 0, margin: float = 0.0, quad=None) -> dict:
    """delta(limit) <= min over the tail of delta(member) + 3 stderr.

    With ``phi=True`` the family and the limit are weights for the fixed
    current ``T``; otherwise they are currents and the weight is |x|.
    """
    family = list(family)
    if not family:
        raise ValueError("empty family")

    def deg(obj):
        if phi:
            return weighted_degree(T, obj, R_grid, quad, check=False)
        return degree(obj, R_grid, quad)

    reps = [deg(m) for m in family]
    lim = deg(limit)
    tail = reps[tail_from:]
    j = int(np.argmin([r.limit for r in tail]))
    floor = tail[j].limit
    # partials over B(R) are known only up to their tails; the last increment bounds each tail
    tails = [abs(r.partials[-1] - r.partials[-2]) if len(r.partials) > 1 else 0.0 for r in (lim, tail[j])]
    slack = 3 * math.hypot(lim.stderr[-1], tail[j].stderr[-1]) + sum(tails) + margin
    return {"limit": lim.limit, "members": [r.limit for r in reps], "tail_min": floor, "slack": slack,
            "holds": bool(lim.limit <= floor + slack + 1e-12 * max(1.0, abs(floor)))}

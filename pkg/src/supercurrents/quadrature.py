"""Regions, quadrature specifications and integration of densities.

Every integral is returned as a :class:`MeasureEstimate`.  Monte Carlo
results depend only on the seed: samples are drawn in fixed-size chunks,
each chunk from its own ``SeedSequence`` child, and chunk sums are reduced
in chunk order whatever the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rules
from .fields import Polynomial, ScalarField

MC_CHUNK = 1 << 16


@dataclass
class MeasureEstimate:
    value: float
    stderr: float = 0.0
    method: str = "exact"
    n_samples: int = 0
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.stderr = abs(float(self.stderr))

    def __add__(self, other):
        if not isinstance(other, MeasureEstimate):
            return MeasureEstimate(self.value + other, self.stderr, self.method, self.n_samples, self.seed, self.params)
        return MeasureEstimate(
            self.value + other.value,
            math.hypot(self.stderr, other.stderr),
            self.method,
            self.n_samples + other.n_samples,
            self.seed,
            self.params,
        )

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return MeasureEstimate(-self.value, self.stderr, self.method, self.n_samples, self.seed, self.params)

    def scale(self, c):
        return MeasureEstimate(c * self.value, abs(c) * self.stderr, self.method, self.n_samples, self.seed, self.params)

    def to_dict(self):
        return asdict(self)


# -- regions -------------------------------------------------------------


class Region:
    n: int

    def contains(self, X) -> np.ndarray:
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass
class Ball(Region):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))
        self.n = len(self.center)
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def contains(self, X):
        return np.sum((X - self.center) ** 2, axis=1) < self.radius**2

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def describe(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass
class Box(Region):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.n = len(self.lo)
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have hi > lo")

    def contains(self, X):
        return np.all((X > self.lo) & (X < self.hi), axis=1)

    def bbox(self):
        return self.lo, self.hi

    def describe(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass
class AffineBox(Region):
    """Image of the box [lo, hi] under u -> origin + matrix @ u."""

    origin: np.ndarray
    matrix: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.n = len(self.origin)
        self._inv = np.linalg.inv(self.matrix)

    def contains(self, X):
        U = (X - self.origin) @ self._inv.T
        return np.all((U > self.lo) & (U < self.hi), axis=1)

    def bbox(self):
        corners = np.array(np.meshgrid(*zip(self.lo, self.hi), indexing="ij")).reshape(self.n, -1).T
        P = self.origin + corners @ self.matrix.T
        return P.min(axis=0), P.max(axis=0)

    def describe(self):
        return {"type": "affine_box", "origin": self.origin.tolist(), "matrix": self.matrix.tolist(),
                "lo": self.lo.tolist(), "hi": self.hi.tolist()}


def _as_scaled_norm(phi: ScalarField):
    """Return (c, center) if phi == c |x - center|^2 exactly, else None."""
    if not isinstance(phi, Polynomial) or phi.degree() != 2:
        return None
    n = phi.n
    c = None
    for i in range(n):
        e = [0] * n
        e[i] = 2
        ci = phi.coeffs.get(tuple(e), 0)
        if c is None:
            c = ci
        if ci != c or ci <= 0:
            return None
    center = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        center.append(-phi.coeffs.get(tuple(e), 0) / (2 * c))
    ref = Polynomial.norm_squared(n, center) * Polynomial.constant(n, c)
    if ref != phi:
        return None
    return float(c), np.array([float(v) for v in center])


@dataclass
class Sublevel(Region):
    """{phi < r}; ``box`` bounds it for sampling."""

    phi: ScalarField
    r: float
    box: Optional[tuple] = None

    def __post_init__(self):
        self.n = self.phi.n

    def as_ball(self):
        m = _as_scaled_norm(self.phi)
        if m is None or self.r <= 0:
            return None
        c, center = m
        return Ball(center, math.sqrt(self.r / c))

    def contains(self, X):
        return self.phi.evaluate(X) < self.r

    def bbox(self):
        if self.box is not None:
            return np.asarray(self.box[0], dtype=float), np.asarray(self.box[1], dtype=float)
        ball = self.as_ball()
        if ball is None:
            raise ValueError("sublevel region needs a bounding box")
        return ball.bbox()

    def describe(self):
        return {"type": "sublevel", "phi": str(self.phi), "r": self.r}


@dataclass
class Shell(Region):
    """{r1 < phi < r2}."""

    phi: ScalarField
    r1: float
    r2: float
    box: Optional[tuple] = None

    def __post_init__(self):
        self.n = self.phi.n
        if not self.r2 > self.r1 > 0:
            raise ValueError("shell needs r2 > r1 > 0")

    def as_annulus(self):
        m = _as_scaled_norm(self.phi)
        if m is None:
            return None
        c, center = m
        return center, math.sqrt(self.r1 / c), math.sqrt(self.r2 / c)

    def contains(self, X):
        v = self.phi.evaluate(X)
        return (v > self.r1) & (v < self.r2)

    def bbox(self):
        if self.box is not None:
            return np.asarray(self.box[0], dtype=float), np.asarray(self.box[1], dtype=float)
        return Sublevel(self.phi, self.r2).bbox()

    def describe(self):
        return {"type": "shell", "phi": str(self.phi), "r1": self.r1, "r2": self.r2}


# -- quadrature specs ----------------------------------------------------


@dataclass(frozen=True)
class MonteCarlo:
    samples: int
    seed: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")


@dataclass(frozen=True)
class TensorGrid:
    """Tensor Gauss rule: ``points`` nodes per panel, ``panels`` equal panels per axis."""

    points: int
    panels: int = 1


@dataclass(frozen=True)
class Spherical:
    """Polar product rule for balls, shells and sublevel sets of c|x-a|^2.

    Deterministic and shared between related integrals, so identities that
    hold pointwise hold to rounding ("exact-density mode").
    """

    radial: int = 24
    angular: int = 24


def quad_params(quad) -> dict:
    return {"method": type(quad).__name__, **asdict(quad)}


def _annulus_rule(center, r1, r2, n, radial, angular):
    rho, wr = rules.gauss_interval(r1, r2, radial)
    wr = wr * rho ** (n - 1)
    U, wu = rules.sphere_rule(n, angular)
    X = center + (rho[:, None, None] * U[None]).reshape(-1, n)
    return X, (wr[:, None] * wu[None]).ravel()


def deterministic_nodes(region: Region, quad):
    """(X, W) for TensorGrid or Spherical quadrature of ``region``."""
    n = region.n
    if isinstance(quad, Spherical):
        if isinstance(region, Sublevel):
            ball = region.as_ball()
            if ball is None:
                raise ValueError("Spherical quadrature needs phi = c|x-a|^2")
            region = ball
        if isinstance(region, Ball):
            return rules.scaled_ball_rule(region.center, region.radius, n, quad.radial, quad.angular)
        if isinstance(region, Shell):
            ann = region.as_annulus()
            if ann is None:
                raise ValueError("Spherical quadrature needs phi = c|x-a|^2")
            return _annulus_rule(*ann, n, quad.radial, quad.angular)
        raise ValueError(f"Spherical quadrature does not apply to {type(region).__name__}")
    if isinstance(quad, TensorGrid):
        if isinstance(region, Box):
            return rules.gauss_box(region.lo, region.hi, quad.points, quad.panels)
        if isinstance(region, AffineBox):
            U, W = rules.gauss_box(region.lo, region.hi, quad.points, quad.panels)
            return region.origin + U @ region.matrix.T, W * abs(np.linalg.det(region.matrix))
        lo, hi = region.bbox()
        X, W = rules.gauss_box(lo, hi, quad.points, quad.panels)
        keep = region.contains(X)
        return X[keep], W[keep]
    raise TypeError(f"not a deterministic quadrature: {quad!r}")


def _mc_chunk(g, region, lo, hi, size, ss):
    rng = np.random.default_rng(ss)
    X = lo + (hi - lo) * rng.random((size, len(lo)))
    mask = region.contains(X)
    vals = np.zeros(size)
    if np.any(mask):
        vals[mask] = np.asarray(g(X[mask]), dtype=float)
    return vals.sum(), (vals**2).sum()


def integrate_density(g: Callable, region: Region, quad, jobs: int = 1) -> MeasureEstimate:
    """int_region g dlambda for a vectorised density ``g(X) -> (N,)``."""
    params = {"region": region.describe(), **quad_params(quad)}
    if isinstance(quad, MonteCarlo):
        lo, hi = region.bbox()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("unbounded region")
        vol = float(np.prod(hi - lo))
        sizes = [MC_CHUNK] * (quad.samples // MC_CHUNK)
        if quad.samples % MC_CHUNK:
            sizes.append(quad.samples % MC_CHUNK)
        children = np.random.SeedSequence(quad.seed).spawn(len(sizes))
        work = list(zip(sizes, children))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                parts = list(ex.map(lambda a: _mc_chunk(g, region, lo, hi, *a), work))
        else:
            parts = [_mc_chunk(g, region, lo, hi, *a) for a in work]
        s = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        N = quad.samples
        mean = s / N
        var = max(s2 / N - mean**2, 0.0)
        return MeasureEstimate(vol * mean, vol * math.sqrt(var / N), "montecarlo", N, quad.seed, params)
    X, W = deterministic_nodes(region, quad)
    value = float(np.dot(np.asarray(g(X), dtype=float), W)) if len(W) else 0.0
    err = 0.0
    if isinstance(quad, TensorGrid) and quad.points >= 4:
        X2, W2 = deterministic_nodes(region, TensorGrid(quad.points // 2, quad.panels))
        coarse = float(np.dot(np.asarray(g(X2), dtype=float), W2)) if len(W2) else 0.0
        err = abs(value - coarse)
    method = "tensorgrid" if isinstance(quad, TensorGrid) else "spherical"
    return MeasureEstimate(value, err, method, len(W), None, params)


# -- boundaries ------------------------------------------------------------


def boundary_nodes(region: Region, points: int):
    """Surface rule (X, W, normals) on the boundary of a Ball or Box."""
    n = region.n
    if isinstance(region, Ball):
        return rules.scaled_sphere_rule(region.center, region.radius, n, points)
    if isinstance(region, Box):
        Xs, Ws, Ns = [], [], []
        for i in range(n):
            others = [k for k in range(n) if k != i]
            if others:
                U, W = rules.gauss_box(region.lo[others], region.hi[others], points)
            else:
                U, W = np.zeros((1, 0)), np.ones(1)
            for side, val in ((-1.0, region.lo[i]), (1.0, region.hi[i])):
                X = np.empty((len(W), n))
                X[:, others] = U
                X[:, i] = val
                nu = np.zeros((len(W), n))
                nu[:, i] = side
                Xs.append(X)
                Ws.append(W)
                Ns.append(nu)
        return np.concatenate(Xs), np.concatenate(Ws), np.concatenate(Ns)
    raise ValueError(f"no boundary rule for {type(region).__name__}")

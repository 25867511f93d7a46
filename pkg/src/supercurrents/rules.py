"""Plain quadrature rules on intervals, boxes, spheres and balls.

All rules return ``(points, weights)`` with points of shape (M, n).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=64)
def _legendre(m: int):
    t, w = roots_legendre(m)
    return t, w


def gauss_interval(a: float, b: float, m: int):
    t, w = _legendre(m)
    h = 0.5 * (b - a)
    return a + h * (t + 1.0), h * w


def gauss_box(lo, hi, m, panels=1):
    """Tensor Gauss-Legendre rule with ``m`` points per panel and axis (int or per-axis list)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    ms = [m] * len(lo) if np.isscalar(m) else list(m)
    axes = [composite_gauss_interval(a, b, panels, k) for a, b, k in zip(lo, hi, ms)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return X, W


def composite_gauss_interval(a: float, b: float, panels: int, m: int):
    edges = np.linspace(a, b, panels + 1)
    xs, ws = zip(*(gauss_interval(edges[k], edges[k + 1], m) for k in range(panels)))
    return np.concatenate(xs), np.concatenate(ws)


@lru_cache(maxsize=64)
def sphere_rule(n: int, order: int):
    """Product rule on the unit sphere S^(n-1) in R^n; weights sum to its area.

    Exact for polynomials of degree < 2*order (n >= 3 polar factors are
    Gauss-Jacobi, the circle factor is the trapezoid rule with 2*order nodes).
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        M = 2 * order
        th = 2 * np.pi * (np.arange(M) + 0.5) / M
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(M, 2 * np.pi / M)
    a = 0.5 * (n - 3)
    t, w = roots_jacobi(order, a, a)
    U, wu = sphere_rule(n - 1, order)
    s = np.sqrt(1.0 - t**2)
    pts = np.concatenate([np.column_stack([np.full(len(U), ti), si * U]) for ti, si in zip(t, s)])
    wts = np.concatenate([wi * wu for wi in w])
    return pts, wts


@lru_cache(maxsize=64)
def radial_rule(n: int, order: int):
    """Nodes/weights for int_0^1 h(rho) rho^(n-1) d rho (Gauss-Jacobi)."""
    t, w = roots_jacobi(order, 0.0, n - 1.0)
    return 0.5 * (1.0 + t), w / 2.0**n


@lru_cache(maxsize=64)
def ball_rule(n: int, radial_order: int, angular_order: int):
    """Polar product rule on the unit ball of R^n."""
    rho, wr = radial_rule(n, radial_order)
    U, wu = sphere_rule(n, angular_order)
    pts = (rho[:, None, None] * U[None, :, :]).reshape(-1, n)
    wts = (wr[:, None] * wu[None, :]).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def scaled_ball_rule(center, radius, n, radial_order, angular_order):
    Y, w = ball_rule(n, radial_order, angular_order)
    return np.asarray(center, dtype=float) + radius * Y, w * radius**n


def scaled_sphere_rule(center, radius, n, order):
    """Rule for the surface measure of the sphere of given radius; also returns unit normals."""
    U, w = sphere_rule(n, order)
    return np.asarray(center, dtype=float) + radius * U, w * radius ** (n - 1), U


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) in R^n."""
    from math import gamma, pi

    return 2 * pi ** (n / 2) / gamma(n / 2)


def ball_volume(n: int) -> float:
    from math import gamma, pi

    return pi ** (n / 2) / gamma(n / 2 + 1)

"""Mollification by the radial kernel c*(1 - |y|^2)^4 on the unit ball."""
from __future__ import annotations

from functools import lru_cache
from math import gamma, pi

import numpy as np

from ..rules import ball_rule
from .base import ScalarField, as_points
from .polynomial import Polynomial

KERNEL_POWER = 4


class MollifierKernel:
    """rho(y) = c (1 - |y|^2)^4 for |y| < 1, with int rho = 1.

    The constant is the closed form of the radial integral,
    int_B (1-|y|^2)^k dy = pi^(n/2) k! / Gamma(n/2 + k + 1).
    """

    def __init__(self, n: int, power: int = KERNEL_POWER):
        self.n = n
        self.power = power
        k = power
        self.constant = gamma(n / 2 + k + 1) / (pi ** (n / 2) * gamma(k + 1))
        self.profile = (Polynomial.constant(n, 1) - Polynomial.norm_squared(n)).pow(k)

    @lru_cache(maxsize=None)
    def derivative(self, alpha: tuple) -> Polynomial:
        """Exact polynomial D^alpha of the unnormalised profile."""
        p = self.profile
        for axis, k in enumerate(alpha):
            for _ in range(k):
                p = p.partial(axis + 1)
        return p

    def evaluate(self, y, alpha=None):
        Y, single = as_points(y, self.n)
        alpha = alpha or (0,) * self.n
        vals = self.constant * self.derivative(tuple(alpha)).evaluate(Y)
        vals = np.where(np.sum(Y**2, axis=1) < 1.0, vals, 0.0)
        return vals[0] if single else vals

    def __hash__(self):
        return hash((self.n, self.power))

    def __eq__(self, other):
        return isinstance(other, MollifierKernel) and (self.n, self.power) == (other.n, other.power)


def default_orders(n: int):
    """(radial, angular) orders for the ball rule; enough for the affine identity at 1e-8."""
    return {1: (64, 1), 2: (16, 48), 3: (12, 24)}.get(n, (8, 10))


class Mollified(ScalarField):
    """D^alpha (f * rho_eps), evaluated by a polar product rule on the kernel support.

    D^alpha (f * rho_eps)(x) = eps^(-|alpha|) int f(x - eps y) (D^alpha rho)(y) dy.
    """

    def __init__(self, base: ScalarField, eps: float, alpha=None, orders=None, kernel=None, chunk=200_000):
        super().__init__(base.n)
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.base = base
        self.eps = float(eps)
        self.alpha = tuple(alpha) if alpha is not None else (0,) * base.n
        self.orders = tuple(orders) if orders is not None else default_orders(base.n)
        self.kernel = kernel or MollifierKernel(base.n)
        self.chunk = chunk

    def _rule(self, orders):
        Y, w = ball_rule(self.n, *orders)
        kv = self.kernel.evaluate(Y, self.alpha)
        keep = kv != 0
        return Y[keep], (w * kv)[keep]

    def _apply(self, X, orders):
        Y, wk = self._rule(orders)
        scale = self.eps ** (-sum(self.alpha))
        out = np.empty(X.shape[0])
        step = max(1, self.chunk // len(Y))
        for s in range(0, X.shape[0], step):
            Xs = X[s : s + step]
            P = (Xs[:, None, :] - self.eps * Y[None, :, :]).reshape(-1, self.n)
            vals = np.asarray(self.base.evaluate(P), dtype=float).reshape(len(Xs), len(Y))
            out[s : s + step] = scale * (vals @ wk)
        return out

    def hessian_matrix(self, x):
        """All second derivatives of f * rho_eps at the points, shape (N, n, n).

        The base field is sampled once per point and contracted against every
        second derivative of the kernel.
        """
        if any(self.alpha):
            raise ValueError("hessian_matrix expects an undifferentiated mollification")
        X, _ = as_points(x, self.n)
        n = self.n
        Y, w = ball_rule(n, *self.orders)
        inside = np.sum(Y**2, axis=1) < 1.0
        Y, w = Y[inside], w[inside]
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        K = np.empty((len(Y), len(pairs)))
        for c, (i, j) in enumerate(pairs):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            K[:, c] = w * self.kernel.evaluate(Y, tuple(alpha))
        out = np.empty((len(X), n, n))
        step = max(1, self.chunk // len(Y))
        for s in range(0, len(X), step):
            Xs = X[s : s + step]
            P = (Xs[:, None, :] - self.eps * Y[None, :, :]).reshape(-1, n)
            vals = np.asarray(self.base.evaluate(P), dtype=float).reshape(len(Xs), len(Y))
            block = (vals @ K) / self.eps**2
            for c, (i, j) in enumerate(pairs):
                out[s : s + step, i, j] = out[s : s + step, j, i] = block[:, c]
        return out

    def evaluate(self, x):
        X, single = as_points(x, self.n)
        out = self._apply(X, self.orders)
        return out[0] if single else out

    def evaluate_with_error(self, x):
        """Value and a crude error estimate from a rule of roughly half the order."""
        X, single = as_points(x, self.n)
        fine = self._apply(X, self.orders)
        coarse_orders = tuple(max(1, o // 2) for o in self.orders)
        err = np.abs(fine - self._apply(X, coarse_orders))
        return (fine[0], err[0]) if single else (fine, err)

    def partial(self, i):
        k = self._axis(i)
        alpha = list(self.alpha)
        alpha[k] += 1
        return Mollified(self.base, self.eps, alpha, self.orders, self.kernel, self.chunk)

    def __repr__(self):
        return f"Mollified({self.base!r}, eps={self.eps}, alpha={self.alpha})"


def mollify(f: ScalarField, eps: float, **kw) -> Mollified:
    return Mollified(f, eps, **kw)

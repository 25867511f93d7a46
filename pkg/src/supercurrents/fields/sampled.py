"""Fields known only on a rectilinear grid."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .base import ScalarField, as_points


class OutOfGridError(ValueError):
    pass


class Sampled(ScalarField):
    """Grid values with cubic (or linear) interpolation; derivatives by finite differences."""

    def __init__(self, axes, values, method="cubic"):
        axes = [np.asarray(a, dtype=float) for a in axes]
        super().__init__(len(axes))
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(len(a) for a in axes):
            raise ValueError("values shape does not match the grid")
        self.axes = axes
        self.values = values
        if method == "cubic" and min(len(a) for a in axes) < 4:
            method = "linear"
        self.method = method
        self._interp = RegularGridInterpolator(axes, values, method=method, bounds_error=True)

    @classmethod
    def from_field(cls, f: ScalarField, axes, method="cubic"):
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return cls(axes, np.asarray(f.evaluate(pts)).reshape(grids[0].shape), method)

    def evaluate(self, x):
        X, single = as_points(x, self.n)
        lo = np.array([a[0] for a in self.axes])
        hi = np.array([a[-1] for a in self.axes])
        if np.any(X < lo) or np.any(X > hi):
            raise OutOfGridError("evaluation point outside the sampling grid")
        out = self._interp(X)
        return out[0] if single else out

    def partial(self, i):
        k = self._axis(i)
        return Sampled(self.axes, np.gradient(self.values, self.axes[k], axis=k, edge_order=2), self.method)

    def __repr__(self):
        return f"Sampled(shape={self.values.shape})"

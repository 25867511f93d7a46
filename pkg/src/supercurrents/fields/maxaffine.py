"""Max-affine (tropical) convex functions."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .base import ScalarField, as_points


class MaxAffine(ScalarField):
    """f(x) = max_j (<a_j, x> + b_j).  Convex by construction.

    Symbolic differentiation is refused: the second derivative is a measure
    on the corner locus, see :func:`supercurrents.currents.tropical_ddsharp`.
    """

    def __init__(self, slopes, offsets=None):
        A = np.atleast_2d(np.asarray(slopes, dtype=float))
        super().__init__(A.shape[1])
        self.slopes = A
        self.offsets = np.zeros(A.shape[0]) if offsets is None else np.asarray(offsets, dtype=float)
        if self.offsets.shape != (A.shape[0],):
            raise ValueError("one offset per affine piece")
        # keep rational data for exact evaluation at rational points
        raw = [list(r) for r in np.atleast_2d(np.asarray(slopes, dtype=object))]
        offs = list(offsets) if offsets is not None else [0] * len(raw)
        rational = all(isinstance(v, (int, Fraction)) for v in sum(raw, []) + offs)
        self._exact = (raw, offs) if rational else None

    @classmethod
    def from_rows(cls, rows):
        """Rows ``[a_1, ..., a_n, b]`` as in scenario files."""
        rows = [list(r) for r in rows]
        return cls([r[:-1] for r in rows], [r[-1] for r in rows])

    @property
    def pieces(self):
        return len(self.offsets)

    def affine_values(self, x):
        X, _ = as_points(x, self.n)
        return X @ self.slopes.T + self.offsets

    def evaluate(self, x):
        if self._exact is not None and isinstance(x, (list, tuple)) and all(isinstance(v, (int, Fraction)) for v in x):
            rows, offs = self._exact
            return max(sum(a * v for a, v in zip(row, x)) + bj for row, bj in zip(rows, offs))
        X, single = as_points(x, self.n)
        # piecewise maximum; much faster than a reduction over a short axis
        out = X @ self.slopes[0] + self.offsets[0]
        for a, b in zip(self.slopes[1:], self.offsets[1:]):
            np.maximum(out, X @ a + b, out=out)
        return out[0] if single else out

    def active_piece(self, x):
        return np.argmax(self.affine_values(x), axis=1)

    def partial(self, i):
        raise TypeError("MaxAffine fields have no symbolic derivative; use tropical_ddsharp or mollify first")

    def __repr__(self):
        rows = ", ".join(f"<{list(a)},x>+{b}" for a, b in zip(self.slopes, self.offsets))
        return f"max({rows})"

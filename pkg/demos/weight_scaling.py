"""How nu_T(phi, r) responds to phi -> c phi.

With B(r) = {phi < r} and the r^(p/2) normalisation, scaling the weight
relabels the radius and rescales the normaliser, so
nu_T(c phi, r) = c^(p/2) nu_T(phi, r / c).  The exponent p does not fit.
"""
import numpy as np

from supercurrents.builtins import line_current
from supercurrents.currents import SmoothCurrent, plane_current
from supercurrents.exterior import Superform
from supercurrents.lelong import Weight, nu

cases = [
    ("line in R^2", line_current(2)),
    ("plane in R^3", plane_current(3, np.zeros(3), np.eye(3)[:2])),
    ("constant 1 in R^2", SmoothCurrent(Superform.scalar(2, 1))),
]

print(f"{'current':20s} {'c':>4s} {'nu(c phi)':>11s} {'c^(p/2) nu':>11s} {'c^p nu':>11s}")
for name, T in cases:
    w = Weight.euclidean(T.n)
    base = nu(T, w, 0.0625).value
    for c in (0.5, 2.0):
        v = nu(T, w.scaled(c), 0.0625).value
        print(f"{name:20s} {c:4.1f} {v:11.6f} {c ** (T.p / 2) * base:11.6f} {c ** T.p * base:11.6f}")

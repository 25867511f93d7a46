"""Tropical currents: facet weights, agreement with mollification, and degree at infinity."""
import math

import numpy as np

from supercurrents.builtins import instantiate
from supercurrents.currents import SmoothCurrent, superhessian_product, tropical_ddsharp
from supercurrents.degree import degree
from supercurrents.exterior import Superform
from supercurrents.fields import MaxAffine, bump
from supercurrents.quadrature import Box

f = MaxAffine.from_rows([[0, 0, 0], [1, 0, 0], [0, 1, 0]])  # max(0, x1, x2)
T = tropical_ddsharp(f)
for F in T.facets:
    print(f"facet between pieces {F.i},{F.j}: weight\n{np.round(F.weight, 4)}")

# pair against a bump test form and compare with dd# of mollifications
b = bump(2, [0.02, -0.03], 0.38)
S = Superform(2, 1, 1, {((1,), (1,)): b * 1.3, ((1,), (2,)): b * 0.4, ((2,), (1,)): b * 0.4, ((2,), (2,)): b * -0.7})
one = SmoothCurrent(Superform.scalar(2, 1))
rep = superhessian_product(one, 2, [f], S, eps_schedule=[2.0**-3, 2.0**-4, 2.0**-5],
                           region=Box(np.full(2, -0.45), np.full(2, 0.45)))
print("tropical pairing", T.pair(S).value)
print("mollified      ", rep.values, "->", rep.value)

# the fan through 0 has its whole degree at the vertex; moving the vertex spreads it out
print("fan at 0:", degree(T, [1.0, 10.0]).partials, "2 + sqrt 2 =", 2 + math.sqrt(2))
off = degree(instantiate("tropical_offset_fan", 2), [10.0, 100.0, 1000.0])
print("fan at (1,1):", off.partials)

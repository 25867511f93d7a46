"""Lelong numbers of a few model currents, and the m-Lelong counterexample."""
import numpy as np

from supercurrents.builtins import line_current, m_lelong_counterexample, strip_counterexample
from supercurrents.currents import SmoothCurrent
from supercurrents.degree import strip_experiment
from supercurrents.exterior import beta_power
from supercurrents.fields import Polynomial
from supercurrents.lelong import Weight, geometric_grid, jensen_terms, lelong_number, m_lelong_number

grid = geometric_grid(1.0, 8)

# smooth closed current: nu -> 0 like r^((n-p)/2)
rep = lelong_number(SmoothCurrent(beta_power(3, 1)), Weight.euclidean(3), grid)
print("beta in R^3:", np.round(rep.values, 5))

# Lelong-Jensen with a non-closed coefficient
T = SmoothCurrent(beta_power(3, 1).scale(Polynomial.norm_squared(3) + 1))
J = jensen_terms(T, Weight.euclidean(3), 0.25, 1.0)
print("Jensen terms:", {k: round(v, 6) for k, v in J.to_dict().items() if isinstance(v, float)})

# m-positive but the scaled mass blows up like r^(2 - n/m)
for n, m in [(3, 1), (5, 2)]:
    r = m_lelong_number(m_lelong_counterexample(n, m), np.zeros(n), m, r_grid=grid)
    print(f"n={n} m={m}: slope {r.extra['loglog_slope']:.4f} (expected {2 - n / m}), "
          f"limit exists: {r.extra['limit_exists']}")

# support in a strip: bounded for the line, quadratic growth for the convex counterexample
for name, C in [("line", line_current(2)), ("strip example", strip_counterexample())]:
    s = strip_experiment(C, 1)
    print(f"{name}: nu = {np.round(s['nu'], 2)}, exponent {s['growth_exponent']:.3f}")

import math

import numpy as np
import pytest

from supercurrents.builtins import (
    CATALOG,
    instantiate,
    list_builtins,
    sin_shell_exact_mass,
    sin_shell_masses,
    sin_shell_regions,
    sin_singularity,
    strip_counterexample,
    strip_profiles,
)
from supercurrents.currents import Current
from supercurrents.exterior import Superform
from supercurrents.fields import ScalarField
from supercurrents.positivity import form_is_weakly_positive

KINDS = {"field": ScalarField, "form": Superform, "current": Current}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_builtin_instantiates(name):
    b = CATALOG[name]
    for n in b.dims:
        if n > 4:
            continue
        obj = instantiate(name, n)
        assert isinstance(obj, KINDS[b.kind])
        assert obj.n == n


def test_instantiate_errors():
    with pytest.raises(KeyError):
        instantiate("no_such_thing")
    with pytest.raises(ValueError):
        instantiate("sphere", 2)


def test_listing_has_required_names():
    names = {b["name"] for b in list_builtins()}
    assert {"phi_m", "paper_strip_counterexample", "paper_sin_singularity"} <= names


def test_sin_singularity_coefficients():
    T = sin_singularity()
    X = np.array([[0.3, 0.1], [-0.2, 0.7], [1.0, 0.5]])
    s = np.sin(1 / (X[:, 0] + X[:, 1]) ** 2)
    F = T.form.evaluate(X)
    assert np.allclose(F[((1,), (1,))], 1 - s, atol=1e-14)
    assert np.allclose(F[((2,), (2,))], 1 + s, atol=1e-14)


def test_sin_shells_are_disjoint_and_shrink():
    # |x1 + x2| intervals move toward 0 with k and never overlap
    bounds = []
    for k in range(1, 6):
        lo, hi = (1 / math.sqrt(2 * k * math.pi + math.pi / 4), 1 / math.sqrt(2 * k * math.pi))
        bounds.append((lo, hi))
        assert len(sin_shell_regions(k)) == 2
    for (lo1, _), (_, hi2) in zip(bounds, bounds[1:]):
        assert hi2 < lo1
    with pytest.raises(ValueError):
        sin_shell_regions(0)


def test_sin_shell_mass_matches_closed_form():
    rep = sin_shell_masses(3)
    assert rep["exact_per_shell"] == pytest.approx(4 * math.sqrt(2))
    assert rep["per_shell"] == pytest.approx([sin_shell_exact_mass()] * 3, rel=1e-6)


def test_strip_profiles_convexity_condition():
    t, f, g = strip_profiles(6)
    ts = np.linspace(-0.999, 0.999, 401)
    import sympy

    expr = sympy.lambdify(t, 2 * g + sympy.diff(f, t, 2))
    assert np.min(expr(ts)) >= -1e-12


def test_strip_counterexample_weakly_positive_in_strip():
    T = strip_counterexample()
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(-5, 5, 30), rng.uniform(-0.99, 0.99, 30)])
    for x in X:
        assert form_is_weakly_positive(T.form, x).holds
    assert np.all(np.asarray(T.form.evaluate(np.array([[0.5, 1.5]]))[((1,), (1,))]) == 0)

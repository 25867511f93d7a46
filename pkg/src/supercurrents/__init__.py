"""Superforms and supercurrents on R^n x R^n: algebra, calculus, positivity, Lelong numbers and degrees."""

__version__ = "0.1.0"

from .calculus import alpha_form, d, ddsharp, dsharp, integrate, stokes_residual
from .currents import (
    SmoothCurrent,
    SubmanifoldCurrent,
    TropicalCurrent,
    minimality_residual,
    superhessian_product,
    tropical_ddsharp,
)
from .degree import DegreeReport, LelongClassFunction, degree, strip_experiment, weighted_degree
from .exterior import Superform, apply_J, beta, beta_power, dx, dxi, power, wedge
from .lelong import LelongReport, Weight, jensen_terms, lelong_number, m_lelong_number
from .positivity import check_eq1, form_is_m_positive, form_is_weakly_positive, is_m_convex

__all__ = [
    "Superform", "wedge", "apply_J", "beta", "beta_power", "dx", "dxi", "power",
    "d", "dsharp", "ddsharp", "alpha_form", "integrate", "stokes_residual",
    "check_eq1", "form_is_m_positive", "form_is_weakly_positive", "is_m_convex",
    "SmoothCurrent", "SubmanifoldCurrent", "TropicalCurrent", "tropical_ddsharp",
    "superhessian_product", "minimality_residual",
    "Weight", "LelongReport", "jensen_terms", "lelong_number", "m_lelong_number",
    "DegreeReport", "LelongClassFunction", "degree", "weighted_degree", "strip_experiment",
]

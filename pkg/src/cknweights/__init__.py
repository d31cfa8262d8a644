"""Numerical toolkit for p = 1 CKN-type inequalities with non-doubling weights."""

__version__ = "0.1.0"

from . import certify, envelope, functionals, ndc, weights  # noqa: E402
from .envelope import EnvelopeResult, Grid, compute_envelope, make_grid  # noqa: E402
from .weightlang import parse_weight  # noqa: E402
from .weights import WeightClass, WeightSpec, classify  # noqa: E402

__all__ = ["__version__", "certify", "envelope", "functionals", "ndc", "weights",
           "EnvelopeResult", "Grid", "compute_envelope", "make_grid", "parse_weight",
           "WeightClass", "WeightSpec", "classify"]

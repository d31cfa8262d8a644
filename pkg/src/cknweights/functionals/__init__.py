"""Test functions and the two sides of the 1D, polar and transformed inequalities."""
from .angular import AngularProfile, Constant, Mollified, SingularPower, Trig, mollified
from .counterexample import (CounterexampleTerm, make_counterexample_sequence, term_lhs,
                             term_rhs)
from .onedim import lhs_1d, rhs_1d
from .polar import PolarTestFunction, lhs_polar, rhs_polar, sphere_area
from .quadrature import QuadratureResult
from .testfunctions import Bump, PiecewiseLinear, TestFunction1D, make_localized_family

__all__ = [
    "AngularProfile", "Constant", "Mollified", "SingularPower", "Trig", "mollified",
    "CounterexampleTerm", "make_counterexample_sequence", "term_lhs", "term_rhs",
    "lhs_1d", "rhs_1d", "PolarTestFunction", "lhs_polar", "rhs_polar", "sphere_area",
    "QuadratureResult", "Bump", "PiecewiseLinear", "TestFunction1D", "make_localized_family",
]

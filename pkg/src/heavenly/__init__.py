"""Exact exponential-sum solutions of heavenly equations and their checks."""

from .errors import *  # noqa: F401,F403
from .expsum import ExpSumPotential, FrameId, Jet, evaluate, jet
from .families import FamilyId, build_solution, validate
from .geometry import MetricField, curvature, realify
from .pde import EquationId, residual, residual_suite
from .symmetry import theorem_applicability, verify_table

__all__ = [
    "EquationId",
    "ExpSumPotential",
    "FamilyId",
    "FrameId",
    "Jet",
    "MetricField",
    "build_solution",
    "curvature",
    "evaluate",
    "jet",
    "realify",
    "residual",
    "residual_suite",
    "theorem_applicability",
    "validate",
    "verify_table",
]

__version__ = "0.1.0"

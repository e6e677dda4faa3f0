"""Morrey-Lorentz function spaces on dyadic step functions.

Exact quasi-norms (Lorentz, Morrey-Lorentz, weak Morrey), maximal and
fractional-integral operators, the heat semigroup, atomic synthesis and a
constructive Calderon-Zygmund decomposition, plus a seeded verification
harness for the associated inequalities.
"""

from .dyadic import DyadicCube, ParseError, StepFunction
from .lorentz import INF, DomainError, LorentzParams, RatioReport, lorentz_norm, rearrangement, weak_norm
from .morrey import MorreyLorentzParams, indicator_norm, morrey_lorentz_norm, morrey_norm, weak_morrey_norm
from .operators import (
    FracIntegralParams,
    HeatParams,
    MaximalParams,
    dyadic_maximal,
    frac_integral,
    heat_extension,
    heat_maximal_norm,
    maximal,
)
from .atoms import Atom, AtomFamily, check_synthesis, decompose, synthesize, validate_atom

__version__ = "0.1.0"

__all__ = [
    "DyadicCube",
    "StepFunction",
    "ParseError",
    "INF",
    "DomainError",
    "LorentzParams",
    "RatioReport",
    "lorentz_norm",
    "rearrangement",
    "weak_norm",
    "MorreyLorentzParams",
    "indicator_norm",
    "morrey_lorentz_norm",
    "morrey_norm",
    "weak_morrey_norm",
    "MaximalParams",
    "FracIntegralParams",
    "HeatParams",
    "maximal",
    "dyadic_maximal",
    "frac_integral",
    "heat_extension",
    "heat_maximal_norm",
    "Atom",
    "AtomFamily",
    "validate_atom",
    "synthesize",
    "check_synthesis",
    "decompose",
]

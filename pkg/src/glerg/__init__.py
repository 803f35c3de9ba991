"""Generalized linear (bracket) functions, their torus representations, and
ergodic averages along GL-sequences of commuting transformations."""

from .errors import GlergError
from .number_field import IrrationalBasis, SymReal, standard_basis
from .glf import (Floor, Frac, GlfExpr, Linear, Scale, Sum, bound_interval, bounded_part,
                  eval_exact, eval_float, floor_, frac_, linear_part, normalize, to_text, var)
from .dsl import parse, parse_expr

__version__ = "0.1.0"

__all__ = [
    "GlergError", "IrrationalBasis", "SymReal", "standard_basis", "Floor", "Frac", "GlfExpr",
    "Linear", "Scale", "Sum", "bound_interval", "bounded_part", "eval_exact", "eval_float",
    "floor_", "frac_", "linear_part", "normalize", "to_text", "var", "parse", "parse_expr",
]

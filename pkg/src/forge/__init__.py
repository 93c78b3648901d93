"""Intertwining operators, Darboux steps and their verification."""

from .evaluation import DEFAULT_ZERO_TEST, Status, Verdict, ZeroTest, is_zero
from .expr import Expr, differentiate, simplify
from .intertwine import darboux_transform, factorize, lift_from_eigenfunction, match_coefficients, riccati_reduce
from .kleingordon import catalog, chain, kg_step, separated_solution, transform_solution, weber_solution
from .opring import D, DiffOp, op_apply, op_equal, op_mul
from .parse import ParseDiagnostic, parse_expr, print_expr

__version__ = "0.1.0"

__all__ = [
    "D",
    "DEFAULT_ZERO_TEST",
    "DiffOp",
    "Expr",
    "ParseDiagnostic",
    "Status",
    "Verdict",
    "ZeroTest",
    "catalog",
    "chain",
    "darboux_transform",
    "differentiate",
    "factorize",
    "is_zero",
    "kg_step",
    "lift_from_eigenfunction",
    "match_coefficients",
    "op_apply",
    "op_equal",
    "op_mul",
    "parse_expr",
    "print_expr",
    "riccati_reduce",
    "separated_solution",
    "simplify",
    "transform_solution",
    "weber_solution",
]

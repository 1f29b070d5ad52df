"""Front end: lexing, preprocessing, parsing, and pretty printing."""

from .ast import (And, Atom, BernoulliAst, BestSpec, BftiSpec, BftSpec,
                  BinOp, BoolLit, Call, ChbSpec, DiscreteAst,
                  DistributionAst, ExponentialAst, Expr, FALSE, Formula,
                  FUNCTION_ARITY, JumpAst, LaiSpec, Lit, ModeAst, ModelAst,
                  Neg, NormalAst, Not, NsamSpec, Or, RvDecl, SourceText,
                  SprtSpec, TestSpecAst, TRUE, UniformAst, Var, VarDecl)
from .errors import (CyclicMacroError, DslError, DuplicateModeError,
                     MissingGoalError, MissingInitError, ParameterRangeError,
                     ParseError, RedefinedMacroError, TestArityError,
                     TestOptionError, UnknownIdentifierError,
                     UnknownTestNameError)
from .options import parse_test_options
from .parser import (TIME_VARIABLE, parse_expression, parse_formula,
                     parse_model)
from .preprocess import preprocess
from .printer import format_expr, format_formula, pretty_print

__all__ = [
    "And", "Atom", "BernoulliAst", "BestSpec", "BftiSpec", "BftSpec",
    "BinOp", "BoolLit", "Call", "ChbSpec", "CyclicMacroError", "DiscreteAst",
    "DistributionAst", "DslError", "DuplicateModeError", "ExponentialAst",
    "Expr", "FALSE", "Formula", "FUNCTION_ARITY", "JumpAst", "LaiSpec",
    "Lit", "MissingGoalError", "MissingInitError", "ModeAst", "ModelAst",
    "Neg", "NormalAst", "Not", "NsamSpec", "Or", "ParameterRangeError",
    "ParseError", "RedefinedMacroError", "RvDecl", "SourceText", "SprtSpec",
    "TestArityError", "TestOptionError", "TestSpecAst", "TIME_VARIABLE",
    "TRUE", "UniformAst", "UnknownIdentifierError", "UnknownTestNameError",
    "Var", "VarDecl", "format_expr", "format_formula", "parse_expression",
    "parse_formula", "parse_model", "parse_test_options", "preprocess",
    "pretty_print",
]

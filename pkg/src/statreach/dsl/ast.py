"""AST node definitions for the hybrid-automaton input language.

Expression and formula nodes are frozen dataclasses so that parsed trees are
hashable, structurally comparable, and safe to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class SourceText:
    """Raw input text plus a label used in diagnostics."""

    content: str
    origin: str = "<string>"

    @classmethod
    def from_file(cls, path) -> "SourceText":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(fh.read(), origin=str(path))


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    primed: bool = False  # x' in jump resets


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str  # sin cos tan exp log sqrt abs min max
    args: tuple["Expr", ...]


Expr = Union[Lit, Var, Neg, BinOp, Call]

FUNCTION_ARITY = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1,
    "sqrt": 1, "abs": 1, "min": 2, "max": 2,
}


# --------------------------------------------------------------------------
# Formulas (quantifier-free)
# --------------------------------------------------------------------------

RELOPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class Atom:
    left: Expr
    op: str  # < <= = >= >
    right: Expr


@dataclass(frozen=True)
class And:
    terms: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    terms: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    term: "Formula"


@dataclass(frozen=True)
class BoolLit:
    """Constant truth value; appears only after constant folding."""

    value: bool


Formula = Union[Atom, And, Or, Not, BoolLit]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# --------------------------------------------------------------------------
# Distributions (surface syntax)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BernoulliAst:
    p: float


@dataclass(frozen=True)
class UniformAst:
    a: float
    b: float


@dataclass(frozen=True)
class NormalAst:
    mu: float
    sigma: float  # standard deviation


@dataclass(frozen=True)
class ExponentialAst:
    rate: float


@dataclass(frozen=True)
class DiscreteAst:
    # (value, probability expression); probabilities may reference
    # j-prefixed random variables and are folded at sampling time.
    items: tuple[tuple[float, Expr], ...]


DistributionAst = Union[BernoulliAst, UniformAst, NormalAst, ExponentialAst,
                        DiscreteAst]


# --------------------------------------------------------------------------
# Model structure
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RvDecl:
    name: str
    distribution: DistributionAst
    jump_flag: bool = False  # declared with a leading "j" on the kind


@dataclass(frozen=True)
class VarDecl:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class JumpAst:
    guard: Formula
    target_mode: int
    reset: Formula  # over unprimed and primed variables
    event_label: str | None = None


@dataclass
class ModeAst:
    id: int
    invariants: list[Formula]
    flows: dict[str, Expr]  # variable -> d/dt expression
    jumps: list[JumpAst]


@dataclass
class ModelAst:
    rv_decls: list[RvDecl]
    var_decls: list[VarDecl]  # includes the distinguished "time" variable
    modes: list[ModeAst]
    init: tuple[int, Formula]
    goals: list[tuple[int, Formula]]
    # Provenance only: expanded macro table. Excluded from structural
    # equality so pretty-print round trips compare equal.
    macros: dict[str, str] = field(default_factory=dict, compare=False)

    def mode_ids(self) -> list[int]:
        return [m.id for m in self.modes]

    def var_names(self) -> list[str]:
        return [v.name for v in self.var_decls]

    def rv_names(self) -> list[str]:
        return [r.name for r in self.rv_decls]


# --------------------------------------------------------------------------
# Statistical test options
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LaiSpec:
    theta: float
    cost_per_sample: float


@dataclass(frozen=True)
class BftSpec:
    theta: float
    ratio_threshold: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class BftiSpec:
    theta: float
    ratio_threshold: float
    alpha: float
    beta: float
    delta: float


@dataclass(frozen=True)
class SprtSpec:
    theta: float
    ratio_threshold: float
    delta: float


@dataclass(frozen=True)
class ChbSpec:
    delta1: float
    coverage: float


@dataclass(frozen=True)
class BestSpec:
    delta1: float
    coverage: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class NsamSpec:
    n: int
    # The option grammar has no confidence slot; the reported interval uses
    # this value, settable from the command line.
    confidence: float = 0.95


TestSpecAst = Union[LaiSpec, BftSpec, BftiSpec, SprtSpec, ChbSpec, BestSpec,
                    NsamSpec]

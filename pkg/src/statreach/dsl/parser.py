"""Recursive-descent parser for the hybrid-automaton model format.

A model file is a sequence of random-variable declarations, bounded variable
declarations, and mode blocks, followed by one init block and one goal block.
Relational atoms are infix; the connectives and/or/not are prefix
s-expressions; statement lists inside "invt:" are implicit conjunctions.

Operator precedence: ^ binds tightest (right-associative), then unary minus,
then * /, then + - (all left-associative).
"""

from __future__ import annotations

from .ast import (And, Atom, BernoulliAst, BinOp, Call, DiscreteAst,
                  DistributionAst, ExponentialAst, Expr, Formula,
                  FUNCTION_ARITY, JumpAst, Lit, ModeAst, ModelAst, Neg,
                  NormalAst, Not, Or, RvDecl, SourceText, UniformAst, Var,
                  VarDecl)
from .errors import (DuplicateModeError, MissingGoalError, MissingInitError,
                     ParseError, UnknownIdentifierError)
from .lexer import Tok, Token, tokenize
from .preprocess import extract_macros, substitute

RESERVED = {"mode", "invt", "flow", "jump", "init", "goal", "and", "or",
            "not"} | set(FUNCTION_ARITY)

_DIST_KINDS = {"B", "U", "N", "E", "DD"}
TIME_VARIABLE = "time"


class _Parser:
    def __init__(self, tokens: list[Token], origin: str):
        self.tokens = tokens
        self.pos = 0
        self.origin = origin

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not Tok.EOF:
            self.pos += 1
        return tok

    def accept(self, kind: Tok) -> Token | None:
        if self.peek().kind is kind:
            return self.advance()
        return None

    def expect(self, kind: Tok, what: str) -> Token:
        tok = self.peek()
        if tok.kind is not kind:
            self.error(f"expected {what}, found '{tok.text()}'", tok)
        return self.advance()

    def at_ident(self, name: str) -> bool:
        tok = self.peek()
        return tok.kind is Tok.IDENT and tok.value == name

    def expect_ident(self, name: str):
        tok = self.peek()
        if not self.at_ident(name):
            self.error(f"expected '{name}', found '{tok.text()}'", tok)
        self.advance()

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column, self.origin)

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self._additive()

    def _additive(self) -> Expr:
        node = self._multiplicative()
        while self.peek().kind in (Tok.PLUS, Tok.MINUS):
            op = "+" if self.advance().kind is Tok.PLUS else "-"
            node = BinOp(op, node, self._multiplicative())
        return node

    def _multiplicative(self) -> Expr:
        node = self._unary()
        while self.peek().kind in (Tok.STAR, Tok.SLASH):
            op = "*" if self.advance().kind is Tok.STAR else "/"
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self.accept(Tok.MINUS):
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._primary()
        if self.accept(Tok.CARET):
            return BinOp("^", base, self._unary())
        return base

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind is Tok.NUMBER:
            self.advance()
            return Lit(tok.value)
        if tok.kind is Tok.PRIMED_IDENT:
            self.advance()
            return Var(tok.value, primed=True)
        if tok.kind is Tok.IDENT:
            name = tok.value
            if name in FUNCTION_ARITY:
                self.advance()
                self.expect(Tok.LPAREN, "'(' after function name")
                args = [self.parse_expr()]
                while self.accept(Tok.COMMA):
                    args.append(self.parse_expr())
                self.expect(Tok.RPAREN, "')'")
                arity = FUNCTION_ARITY[name]
                if len(args) != arity:
                    self.error(f"'{name}' expects {arity} argument(s), "
                               f"got {len(args)}", tok)
                return Call(name, tuple(args))
            if name in RESERVED:
                self.error(f"reserved word '{name}' used as a variable", tok)
            self.advance()
            return Var(name)
        if tok.kind is Tok.LPAREN:
            self.advance()
            inner = self.parse_expr()
            self.expect(Tok.RPAREN, "')'")
            return inner
        self.error(f"expected an expression, found '{tok.text()}'", tok)

    # -- formulas ----------------------------------------------------------

    _RELOP = {Tok.LT: "<", Tok.LE: "<=", Tok.EQ: "=", Tok.GE: ">=",
              Tok.GT: ">"}

    def parse_formula(self) -> Formula:
        tok = self.peek()
        if tok.kind is Tok.LPAREN:
            nxt = self.peek(1)
            if nxt.kind is Tok.IDENT and nxt.value in ("and", "or", "not"):
                self.advance()
                kind = self.advance().value
                terms = [self.parse_formula()]
                while self.peek().kind is not Tok.RPAREN:
                    terms.append(self.parse_formula())
                self.expect(Tok.RPAREN, "')'")
                if kind == "not":
                    if len(terms) != 1:
                        self.error("'not' takes exactly one formula", tok)
                    return Not(terms[0])
                return And(tuple(terms)) if kind == "and" else Or(tuple(terms))
            # Either an atom whose left side starts with '(' or a
            # parenthesized formula; try the atom reading first.
            mark = self.pos
            try:
                return self._atom()
            except ParseError:
                self.pos = mark
            self.advance()
            inner = self.parse_formula()
            self.expect(Tok.RPAREN, "')'")
            return inner
        return self._atom()

    def _atom(self) -> Formula:
        left = self.parse_expr()
        tok = self.peek()
        op = self._RELOP.get(tok.kind)
        if op is None:
            self.error(f"expected a relational operator, found '{tok.text()}'",
                       tok)
        self.advance()
        right = self.parse_expr()
        return Atom(left, op, right)

    # -- declarations ------------------------------------------------------

    def _signed_number(self) -> float:
        # Bound positions admit constant expressions; fold immediately.
        expr = self.parse_expr()
        value = _fold_numeric(expr)
        if value is None:
            self.error("expected a numeric constant")
        return value

    def parse_rv_decl(self) -> RvDecl:
        tok = self.expect(Tok.IDENT, "distribution name")
        kind = tok.value
        jump_flag = False
        if kind.startswith("j") and kind[1:] in _DIST_KINDS:
            jump_flag = True
            kind = kind[1:]
        if kind not in _DIST_KINDS:
            self.error(f"unknown distribution '{tok.value}'", tok)
        self.expect(Tok.LPAREN, "'('")
        dist = self._distribution(kind, tok)
        self.expect(Tok.RPAREN, "')'")
        name_tok = self.expect(Tok.IDENT, "random-variable name")
        if name_tok.value in RESERVED:
            self.error(f"reserved word '{name_tok.value}' used as a name",
                       name_tok)
        self.expect(Tok.SEMI, "';'")
        return RvDecl(name_tok.value, dist, jump_flag)

    def _distribution(self, kind: str, at: Token) -> DistributionAst:
        if kind == "DD":
            items = []
            while True:
                value = self._signed_number()
                self.expect(Tok.COLON, "':' between value and probability")
                prob = self.parse_expr()
                items.append((value, prob))
                if not self.accept(Tok.COMMA):
                    break
            return DiscreteAst(tuple(items))
        params = [self._signed_number()]
        while self.accept(Tok.COMMA):
            params.append(self._signed_number())
        if kind == "B":
            if len(params) != 1:
                self.error("B takes one parameter", at)
            if not 0.0 <= params[0] <= 1.0:
                self.error("Bernoulli parameter must lie in [0, 1]", at)
            return BernoulliAst(params[0])
        if kind == "U":
            if len(params) != 2:
                self.error("U takes two parameters", at)
            if not params[0] < params[1]:
                self.error("Uniform requires a < b", at)
            return UniformAst(params[0], params[1])
        if kind == "N":
            if len(params) != 2:
                self.error("N takes two parameters", at)
            if params[1] < 0:
                self.error("Normal standard deviation must be >= 0", at)
            return NormalAst(params[0], params[1])
        if len(params) != 1:
            self.error("E takes one parameter", at)
        if params[0] <= 0:
            self.error("Exponential rate must be > 0", at)
        return ExponentialAst(params[0])

    def parse_var_decl(self) -> VarDecl:
        self.expect(Tok.LBRACKET, "'['")
        lower = self._signed_number()
        self.expect(Tok.COMMA, "','")
        upper = self._signed_number()
        self.expect(Tok.RBRACKET, "']'")
        name_tok = self.expect(Tok.IDENT, "variable name")
        name = name_tok.value
        if name in RESERVED:
            self.error(f"reserved word '{name}' used as a variable", name_tok)
        if lower > upper:
            self.error(f"variable '{name}' has lower bound above upper bound",
                       name_tok)
        self.expect(Tok.SEMI, "';'")
        return VarDecl(name, lower, upper)

    # -- modes -------------------------------------------------------------

    def parse_mode(self) -> ModeAst:
        self.expect(Tok.LBRACE, "'{'")
        self.expect_ident("mode")
        id_tok = self.expect(Tok.NUMBER, "mode id")
        mode_id = int(id_tok.value)
        if mode_id <= 0 or mode_id != id_tok.value:
            self.error("mode id must be a positive integer", id_tok)
        self.expect(Tok.SEMI, "';'")

        self.expect_ident("invt")
        self.expect(Tok.COLON, "':'")
        invariants: list[Formula] = []
        while not (self.at_ident("flow") and self.peek(1).kind is Tok.COLON):
            invariants.append(self.parse_formula())
            self.expect(Tok.SEMI, "';'")

        self.expect_ident("flow")
        self.expect(Tok.COLON, "':'")
        flows: dict[str, Expr] = {}
        while self.at_ident("d") and self.peek(1).kind is Tok.SLASH:
            var, expr = self._flow_stmt()
            if var in flows:
                self.error(f"duplicate flow for variable '{var}' in mode "
                           f"{mode_id}")
            flows[var] = expr

        self.expect_ident("jump")
        self.expect(Tok.COLON, "':'")
        jumps: list[JumpAst] = []
        while self.peek().kind is not Tok.RBRACE:
            jumps.append(self._jump_stmt())

        self.expect(Tok.RBRACE, "'}'")
        return ModeAst(mode_id, invariants, flows, jumps)

    def _flow_stmt(self) -> tuple[str, Expr]:
        self.expect_ident("d")
        self.expect(Tok.SLASH, "'/'")
        self.expect_ident("dt")
        self.expect(Tok.LBRACKET, "'['")
        var_tok = self.expect(Tok.IDENT, "variable name")
        self.expect(Tok.RBRACKET, "']'")
        self.expect(Tok.EQ, "'='")
        expr = self.parse_expr()
        self.expect(Tok.SEMI, "';'")
        return var_tok.value, expr

    def _jump_stmt(self) -> JumpAst:
        guard = self.parse_formula()
        self.expect(Tok.ARROW, "'==>'")
        self.expect(Tok.AT, "'@'")
        target_tok = self.expect(Tok.NUMBER, "target mode id")
        target = int(target_tok.value)
        if target <= 0 or target != target_tok.value:
            self.error("target mode must be a positive integer", target_tok)
        reset = self.parse_formula()
        self.expect(Tok.SEMI, "';'")
        return JumpAst(guard, target, reset)

    # -- whole model ---------------------------------------------------------

    def parse_model(self, macros: dict[str, str]) -> ModelAst:
        rv_decls: list[RvDecl] = []
        var_decls: list[VarDecl] = []
        modes: list[ModeAst] = []
        init: tuple[int, Formula] | None = None
        goals: list[tuple[int, Formula]] = []

        while self.peek().kind is not Tok.EOF:
            tok = self.peek()
            if tok.kind is Tok.LBRACKET:
                var_decls.append(self.parse_var_decl())
            elif tok.kind is Tok.LBRACE:
                modes.append(self.parse_mode())
            elif self.at_ident("init"):
                if init is not None:
                    self.error("more than one init block", tok)
                self.advance()
                self.expect(Tok.COLON, "':'")
                init = self._target_formula()
                self.accept(Tok.SEMI)
            elif self.at_ident("goal"):
                self.advance()
                self.expect(Tok.COLON, "':'")
                while self.peek().kind is Tok.AT:
                    goals.append(self._target_formula())
                    self.accept(Tok.SEMI)
                if not goals:
                    raise MissingGoalError("goal block has no entries",
                                           tok.line, tok.column, self.origin)
            elif tok.kind is Tok.IDENT:
                rv_decls.append(self.parse_rv_decl())
            else:
                self.error(f"unexpected '{tok.text()}' at top level", tok)

        eof = self.peek()
        if init is None:
            raise MissingInitError("model has no init block", eof.line,
                                   eof.column, self.origin)
        if not goals:
            raise MissingGoalError("model has no goal block", eof.line,
                                   eof.column, self.origin)

        model = ModelAst(rv_decls, var_decls, modes, init, goals,
                         macros=dict(macros))
        _check_model(model, self.origin)
        return model

    def _target_formula(self) -> tuple[int, Formula]:
        self.expect(Tok.AT, "'@'")
        mode_tok = self.expect(Tok.NUMBER, "mode id")
        mode_id = int(mode_tok.value)
        formula = self.parse_formula()
        return mode_id, formula


# --------------------------------------------------------------------------
# Static checks on the parsed model
# --------------------------------------------------------------------------

def _fold_numeric(expr: Expr):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Neg):
        inner = _fold_numeric(expr.operand)
        return None if inner is None else -inner
    if isinstance(expr, BinOp):
        left = _fold_numeric(expr.left)
        right = _fold_numeric(expr.right)
        if left is None or right is None:
            return None
        try:
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if expr.op == "/":
                return left / right
            return left ** right
        except (ZeroDivisionError, OverflowError, ValueError):
            return None
    return None


def _expr_vars(expr: Expr, out: set[str], primed: set[str]):
    if isinstance(expr, Var):
        (primed if expr.primed else out).add(expr.name)
    elif isinstance(expr, Neg):
        _expr_vars(expr.operand, out, primed)
    elif isinstance(expr, BinOp):
        _expr_vars(expr.left, out, primed)
        _expr_vars(expr.right, out, primed)
    elif isinstance(expr, Call):
        for a in expr.args:
            _expr_vars(a, out, primed)


def _formula_vars(f: Formula, out: set[str], primed: set[str]):
    if isinstance(f, Atom):
        _expr_vars(f.left, out, primed)
        _expr_vars(f.right, out, primed)
    elif isinstance(f, (And, Or)):
        for t in f.terms:
            _formula_vars(t, out, primed)
    elif isinstance(f, Not):
        _formula_vars(f.term, out, primed)


def _check_model(model: ModelAst, origin: str):
    declared = set(model.var_names()) | set(model.rv_names())
    names = model.var_names() + model.rv_names()
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ParseError(f"duplicate declaration of {sorted(dupes)}",
                         origin=origin)

    seen_modes: set[int] = set()
    for mode in model.modes:
        if mode.id in seen_modes:
            raise DuplicateModeError(f"duplicate mode id {mode.id}",
                                     origin=origin)
        seen_modes.add(mode.id)

    system_vars = {v.name for v in model.var_decls}

    def check_scope(f: Formula, where: str, allow_primed: bool = False):
        plain: set[str] = set()
        primed: set[str] = set()
        _formula_vars(f, plain, primed)
        unknown = (plain - declared) | (primed - system_vars)
        if unknown:
            raise UnknownIdentifierError(
                f"unknown identifier(s) {sorted(unknown)} in {where}",
                origin=origin)
        if primed and not allow_primed:
            raise ParseError(f"primed variable outside a jump reset in {where}",
                             origin=origin)

    for rv in model.rv_decls:
        dist = rv.distribution
        if isinstance(dist, DiscreteAst):
            for _, prob in dist.items:
                plain: set[str] = set()
                primed: set[str] = set()
                _expr_vars(prob, plain, primed)
                unknown = plain - declared
                if unknown or primed:
                    raise UnknownIdentifierError(
                        f"unknown identifier(s) in distribution of "
                        f"'{rv.name}'", origin=origin)

    for mode in model.modes:
        for inv in mode.invariants:
            check_scope(inv, f"invariant of mode {mode.id}")
        for var, expr in mode.flows.items():
            if var not in system_vars:
                raise UnknownIdentifierError(
                    f"flow defined for undeclared variable '{var}' in mode "
                    f"{mode.id}", origin=origin)
            if var == TIME_VARIABLE:
                raise ParseError(
                    f"the '{TIME_VARIABLE}' variable is the flow-duration "
                    f"bound and cannot have a flow", origin=origin)
            plain: set[str] = set()
            primed: set[str] = set()
            _expr_vars(expr, plain, primed)
            unknown = plain - declared
            if unknown or primed:
                raise UnknownIdentifierError(
                    f"unknown identifier(s) {sorted(unknown)} in flow of "
                    f"'{var}' in mode {mode.id}", origin=origin)
        for jump in mode.jumps:
            check_scope(jump.guard, f"jump guard in mode {mode.id}")
            check_scope(jump.reset, f"jump reset in mode {mode.id}",
                        allow_primed=True)

    check_scope(model.init[1], "init condition")
    for mode_id, goal in model.goals:
        check_scope(goal, f"goal at mode {mode_id}")


# --------------------------------------------------------------------------
# Public entry points
# --------------------------------------------------------------------------

def parse_model(src: SourceText) -> ModelAst:
    """Parse a model file into a validated AST.

    Macro expansion runs first when the text still contains #define lines
    (a second pass over already-expanded text is the identity).
    """
    stripped, macros = extract_macros(src)
    expanded = SourceText(substitute(stripped.content, macros), src.origin)
    tokens = tokenize(expanded.content, expanded.origin)
    return _Parser(tokens, expanded.origin).parse_model(macros)


def parse_expression(text: str) -> Expr:
    """Parse a standalone arithmetic expression (test/REPL convenience)."""
    tokens = tokenize(text)
    p = _Parser(tokens, "<expr>")
    expr = p.parse_expr()
    p.expect(Tok.EOF, "end of input")
    return expr


def parse_formula(text: str) -> Formula:
    """Parse a standalone formula (test/REPL convenience)."""
    tokens = tokenize(text)
    p = _Parser(tokens, "<formula>")
    f = p.parse_formula()
    p.expect(Tok.EOF, "end of input")
    return f

"""Pretty printer. Output reparses to a structurally equal ModelAst.

Expressions are printed with enough parentheses to make precedence explicit;
parentheses carry no AST nodes, so the round trip is exact.
"""

from __future__ import annotations

from .ast import (And, Atom, BernoulliAst, BinOp, BoolLit, Call, DiscreteAst,
                  ExponentialAst, Expr, Formula, JumpAst, Lit, ModeAst,
                  ModelAst, Neg, NormalAst, Not, Or, RvDecl, SourceText,
                  UniformAst, Var, VarDecl)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Lit):
        text = _num(expr.value)
        if expr.value < 0 and parent_prec > 0:
            return f"({text})"
        return text
    if isinstance(expr, Var):
        return expr.name + ("'" if expr.primed else "")
    if isinstance(expr, Neg):
        inner = format_expr(expr.operand, _NEG_PREC)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _NEG_PREC else text
    if isinstance(expr, BinOp):
        prec = _PREC[expr.op]
        # Left-associative chains reparse identically without parens; the
        # right operand needs them at equal precedence. ^ is the mirror case.
        if expr.op == "^":
            left = format_expr(expr.left, prec + 1)
            right = format_expr(expr.right, prec)
        else:
            left = format_expr(expr.left, prec)
            right = format_expr(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if parent_prec > prec else text
    if isinstance(expr, Call):
        args = ", ".join(format_expr(a) for a in expr.args)
        return f"{expr.func}({args})"
    raise TypeError(f"not an expression: {expr!r}")


def format_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return (f"({format_expr(f.left)} {f.op} {format_expr(f.right)})")
    if isinstance(f, And):
        return "(and " + " ".join(format_formula(t) for t in f.terms) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(format_formula(t) for t in f.terms) + ")"
    if isinstance(f, Not):
        return f"(not {format_formula(f.term)})"
    if isinstance(f, BoolLit):
        # The grammar has no boolean literals; emit an equivalent atom.
        return "(0 = 0)" if f.value else "(0 = 1)"
    raise TypeError(f"not a formula: {f!r}")


def _format_rv(decl: RvDecl) -> str:
    prefix = "j" if decl.jump_flag else ""
    d = decl.distribution
    if isinstance(d, BernoulliAst):
        body = f"B({_num(d.p)})"
    elif isinstance(d, UniformAst):
        body = f"U({_num(d.a)}, {_num(d.b)})"
    elif isinstance(d, NormalAst):
        body = f"N({_num(d.mu)}, {_num(d.sigma)})"
    elif isinstance(d, ExponentialAst):
        body = f"E({_num(d.rate)})"
    elif isinstance(d, DiscreteAst):
        items = ", ".join(f"{_num(v)}:{format_expr(p, 5)}" for v, p in d.items)
        body = f"DD({items})"
    else:
        raise TypeError(f"not a distribution: {d!r}")
    return f"{prefix}{body} {decl.name};"


def _format_mode(mode: ModeAst) -> list[str]:
    lines = ["{", f"  mode {mode.id};", "  invt:"]
    for inv in mode.invariants:
        lines.append(f"        {format_formula(inv)};")
    lines.append("  flow:")
    for var, expr in mode.flows.items():
        lines.append(f"        d/dt[{var}] = {format_expr(expr)};")
    lines.append("  jump:")
    for jump in mode.jumps:
        lines.append(f"        {format_formula(jump.guard)} ==> "
                     f"@{jump.target_mode} {format_formula(jump.reset)};")
    lines.append("}")
    return lines


def pretty_print(model: ModelAst) -> SourceText:
    lines: list[str] = []
    for decl in model.rv_decls:
        lines.append(_format_rv(decl))
    for v in model.var_decls:
        lines.append(f"[{_num(v.lower)}, {_num(v.upper)}] {v.name};")
    lines.append("")
    for mode in model.modes:
        lines.extend(_format_mode(mode))
    lines.append("init:")
    lines.append(f"@{model.init[0]} {format_formula(model.init[1])};")
    lines.append("goal:")
    for mode_id, goal in model.goals:
        lines.append(f"@{mode_id} {format_formula(goal)};")
    lines.append("")
    return SourceText("\n".join(lines), origin="<pretty-print>")

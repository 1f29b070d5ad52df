"""Structural transforms over expression and formula trees.

Substitution, constant folding, and free-variable collection are shared by
the semantic model (random-variable instantiation), the unfolding encoder
(step-variable renaming), and the decision engine.
"""

from __future__ import annotations

import math

from .dsl.ast import (And, Atom, BinOp, BoolLit, Call, Expr, FALSE, Formula,
                      Lit, Neg, Not, Or, TRUE, Var)


def free_vars(node) -> set[str]:
    """Unprimed variable names referenced by an expression or formula."""
    out: set[str] = set()
    _collect(node, out, primed=False)
    return out


def primed_vars(node) -> set[str]:
    out: set[str] = set()
    _collect(node, out, primed=True)
    return out


def _collect(node, out: set[str], primed: bool):
    if isinstance(node, Var):
        if node.primed == primed:
            out.add(node.name)
    elif isinstance(node, Neg):
        _collect(node.operand, out, primed)
    elif isinstance(node, BinOp):
        _collect(node.left, out, primed)
        _collect(node.right, out, primed)
    elif isinstance(node, Call):
        for a in node.args:
            _collect(a, out, primed)
    elif isinstance(node, Atom):
        _collect(node.left, out, primed)
        _collect(node.right, out, primed)
    elif isinstance(node, (And, Or)):
        for t in node.terms:
            _collect(t, out, primed)
    elif isinstance(node, Not):
        _collect(node.term, out, primed)


def rename_vars(node, plain: dict[str, str], primed: dict[str, str] | None = None):
    """Rename variable references; primed references resolve to plain names."""
    primed = primed or {}
    if isinstance(node, Var):
        table = primed if node.primed else plain
        if node.name in table:
            return Var(table[node.name])
        return node
    if isinstance(node, Lit):
        return node
    if isinstance(node, Neg):
        return Neg(rename_vars(node.operand, plain, primed))
    if isinstance(node, BinOp):
        return BinOp(node.op, rename_vars(node.left, plain, primed),
                     rename_vars(node.right, plain, primed))
    if isinstance(node, Call):
        return Call(node.func,
                    tuple(rename_vars(a, plain, primed) for a in node.args))
    if isinstance(node, Atom):
        return Atom(rename_vars(node.left, plain, primed), node.op,
                    rename_vars(node.right, plain, primed))
    if isinstance(node, And):
        return And(tuple(rename_vars(t, plain, primed) for t in node.terms))
    if isinstance(node, Or):
        return Or(tuple(rename_vars(t, plain, primed) for t in node.terms))
    if isinstance(node, Not):
        return Not(rename_vars(node.term, plain, primed))
    if isinstance(node, BoolLit):
        return node
    raise TypeError(f"cannot rename in {node!r}")


def _apply_binop(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    if op == "^":
        return a ** b
    raise ValueError(f"unknown operator {op!r}")


_CALLS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "abs": abs, "min": min, "max": max,
}


def eval_point(expr: Expr, env: dict[str, float]) -> float:
    """Evaluate an expression at a point assignment (all variables bound)."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        if expr.primed:
            raise ValueError(f"primed variable {expr.name}' in point evaluation")
        return env[expr.name]
    if isinstance(expr, Neg):
        return -eval_point(expr.operand, env)
    if isinstance(expr, BinOp):
        return _apply_binop(expr.op, eval_point(expr.left, env),
                            eval_point(expr.right, env))
    if isinstance(expr, Call):
        return _CALLS[expr.func](*(eval_point(a, env) for a in expr.args))
    raise TypeError(f"not an expression: {expr!r}")


def holds_at(f: Formula, env: dict[str, float]) -> bool:
    """Exact truth of a formula at a point assignment."""
    if isinstance(f, Atom):
        left = eval_point(f.left, env)
        right = eval_point(f.right, env)
        return {"<": left < right, "<=": left <= right, "=": left == right,
                ">=": left >= right, ">": left > right}[f.op]
    if isinstance(f, And):
        return all(holds_at(t, env) for t in f.terms)
    if isinstance(f, Or):
        return any(holds_at(t, env) for t in f.terms)
    if isinstance(f, Not):
        return not holds_at(f.term, env)
    if isinstance(f, BoolLit):
        return f.value
    raise TypeError(f"not a formula: {f!r}")


def fold_expr(expr: Expr, env: dict[str, float]) -> Expr:
    """Substitute ``env`` values for variables and fold constant subtrees."""
    if isinstance(expr, Lit):
        return expr
    if isinstance(expr, Var):
        if not expr.primed and expr.name in env:
            return Lit(env[expr.name])
        return expr
    if isinstance(expr, Neg):
        inner = fold_expr(expr.operand, env)
        if isinstance(inner, Lit):
            return Lit(-inner.value)
        return Neg(inner)
    if isinstance(expr, BinOp):
        left = fold_expr(expr.left, env)
        right = fold_expr(expr.right, env)
        if isinstance(left, Lit) and isinstance(right, Lit):
            try:
                return Lit(_apply_binop(expr.op, left.value, right.value))
            except (ZeroDivisionError, OverflowError, ValueError):
                pass
        return BinOp(expr.op, left, right)
    if isinstance(expr, Call):
        args = tuple(fold_expr(a, env) for a in expr.args)
        if all(isinstance(a, Lit) for a in args):
            try:
                return Lit(float(_CALLS[expr.func](*(a.value for a in args))))
            except (OverflowError, ValueError):
                pass
        return Call(expr.func, args)
    raise TypeError(f"not an expression: {expr!r}")


def fold_formula(f: Formula, env: dict[str, float]) -> Formula:
    """Substitute and simplify; constant atoms collapse to BoolLit."""
    if isinstance(f, Atom):
        left = fold_expr(f.left, env)
        right = fold_expr(f.right, env)
        if isinstance(left, Lit) and isinstance(right, Lit):
            return BoolLit(holds_at(Atom(left, f.op, right), {}))
        return Atom(left, f.op, right)
    if isinstance(f, And):
        terms = []
        for t in f.terms:
            folded = fold_formula(t, env)
            if isinstance(folded, BoolLit):
                if not folded.value:
                    return FALSE
                continue
            terms.append(folded)
        if not terms:
            return TRUE
        return terms[0] if len(terms) == 1 else And(tuple(terms))
    if isinstance(f, Or):
        terms = []
        for t in f.terms:
            folded = fold_formula(t, env)
            if isinstance(folded, BoolLit):
                if folded.value:
                    return TRUE
                continue
            terms.append(folded)
        if not terms:
            return FALSE
        return terms[0] if len(terms) == 1 else Or(tuple(terms))
    if isinstance(f, Not):
        inner = fold_formula(f.term, env)
        if isinstance(inner, BoolLit):
            return BoolLit(not inner.value)
        return Not(inner)
    if isinstance(f, BoolLit):
        return f
    raise TypeError(f"not a formula: {f!r}")

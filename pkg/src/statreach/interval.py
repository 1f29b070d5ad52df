"""Outward-rounded interval arithmetic, interval evaluation of expressions
and formulas over boxes, and the HC4 forward-backward contractor.

Directed rounding is not portably controllable from Python, so every
inexact operation widens its result by two ulps per endpoint. Containment
(the true range is always inside the computed interval) is the invariant
everything downstream relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dsl.ast import (And, Atom, BinOp, BoolLit, Call, Expr, Formula, Lit,
                      Neg, Not, Or, Var)

INF = math.inf

# ulp-widening steps applied after every inexact operation
_WIDEN_STEPS = 2


class DomainError(ArithmeticError):
    """The whole box maps outside a partial function's domain."""


def _down(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    for _ in range(_WIDEN_STEPS):
        x = math.nextafter(x, -INF)
    return x


def _up(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    for _ in range(_WIDEN_STEPS):
        x = math.nextafter(x, INF)
    return x


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def is_empty(self) -> bool:
        return self.lo > self.hi

    def width(self) -> float:
        if self.is_empty():
            return 0.0
        return self.hi - self.lo

    def mid(self) -> float:
        if math.isinf(self.lo) and math.isinf(self.hi):
            return 0.0
        if math.isinf(self.lo):
            return self.hi
        if math.isinf(self.hi):
            return self.lo
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else EMPTY

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty():
            return other
        if other.is_empty():
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __repr__(self) -> str:
        if self.is_empty():
            return "[empty]"
        return f"[{self.lo}, {self.hi}]"


EMPTY = Interval(INF, -INF)
ENTIRE = Interval(-INF, INF)
ZERO = Interval(0.0, 0.0)


def point(x: float) -> Interval:
    return Interval(x, x)


def _widened(lo: float, hi: float) -> Interval:
    return Interval(_down(lo), _up(hi))


# --------------------------------------------------------------------------
# Arithmetic
# --------------------------------------------------------------------------

def iadd(a: Interval, b: Interval) -> Interval:
    if a.is_empty() or b.is_empty():
        return EMPTY
    return _widened(a.lo + b.lo, a.hi + b.hi)


def isub(a: Interval, b: Interval) -> Interval:
    if a.is_empty() or b.is_empty():
        return EMPTY
    return _widened(a.lo - b.hi, a.hi - b.lo)


def ineg(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    return Interval(-a.hi, -a.lo)  # exact


def imul(a: Interval, b: Interval) -> Interval:
    if a.is_empty() or b.is_empty():
        return EMPTY
    products = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            p = x * y
            if math.isnan(p):  # 0 * inf
                p = 0.0
            products.append(p)
    return _widened(min(products), max(products))


def idiv(a: Interval, b: Interval) -> Interval:
    """Division; a divisor interval containing 0 yields the whole line
    (splitting is the search's job, not the kernel's)."""
    if a.is_empty() or b.is_empty():
        return EMPTY
    if b.lo == 0.0 and b.hi == 0.0:
        raise DomainError("division by an interval that is exactly zero")
    if b.lo <= 0.0 <= b.hi:
        return ENTIRE
    quotients = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            q = x / y
            if math.isnan(q):
                q = 0.0
            quotients.append(q)
    return _widened(min(quotients), max(quotients))


def ipow(a: Interval, n_exp: float) -> Interval:
    if a.is_empty():
        return EMPTY
    if n_exp == int(n_exp):
        n = int(n_exp)
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return idiv(Interval(1.0, 1.0), ipow(a, -n))
        if n % 2 == 1:
            return _widened(a.lo ** n, a.hi ** n)
        lo_p, hi_p = abs(a.lo) ** n, abs(a.hi) ** n
        if a.lo <= 0.0 <= a.hi:
            return _widened(0.0, max(lo_p, hi_p))
        return _widened(min(lo_p, hi_p), max(lo_p, hi_p))
    # Real exponent: defined for nonnegative bases only.
    clipped = a.intersect(Interval(0.0, INF))
    if clipped.is_empty():
        raise DomainError(f"negative base for real exponent {n_exp}")
    return _widened(clipped.lo ** n_exp, clipped.hi ** n_exp)


def isqrt(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    clipped = a.intersect(Interval(0.0, INF))
    if clipped.is_empty():
        raise DomainError("sqrt of a wholly negative interval")
    lo = math.sqrt(clipped.lo)
    hi = math.sqrt(clipped.hi) if not math.isinf(clipped.hi) else INF
    return _widened(lo, hi).intersect(Interval(0.0, INF))


def iexp(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    try:
        lo = math.exp(a.lo) if not math.isinf(a.lo) else (0.0 if a.lo < 0 else INF)
    except OverflowError:
        lo = INF
    try:
        hi = math.exp(a.hi) if not math.isinf(a.hi) else (0.0 if a.hi < 0 else INF)
    except OverflowError:
        hi = INF
    return _widened(lo, hi).intersect(Interval(0.0, INF))


def ilog(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    clipped = a.intersect(Interval(0.0, INF))
    if clipped.is_empty() or clipped.hi == 0.0:
        raise DomainError("log of a wholly nonpositive interval")
    lo = -INF if clipped.lo <= 0.0 else math.log(clipped.lo)
    hi = math.log(clipped.hi) if not math.isinf(clipped.hi) else INF
    return _widened(lo, hi)


def iabs(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return ineg(a)
    return Interval(0.0, max(-a.lo, a.hi))


def imin(a: Interval, b: Interval) -> Interval:
    if a.is_empty() or b.is_empty():
        return EMPTY
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi))


def imax(a: Interval, b: Interval) -> Interval:
    if a.is_empty() or b.is_empty():
        return EMPTY
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi))


_TWO_PI = 2.0 * math.pi


def isin(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    if a.width() >= _TWO_PI or math.isinf(a.lo) or math.isinf(a.hi):
        return Interval(-1.0, 1.0)
    # Conservative: sample endpoints, then check whether an extremum of sin
    # (at pi/2 + k*pi) lies inside the (slightly widened) argument range.
    lo, hi = _down(a.lo), _up(a.hi)
    vals = [math.sin(lo), math.sin(hi)]
    k = math.floor((lo - math.pi / 2.0) / math.pi)
    while True:
        crit = math.pi / 2.0 + k * math.pi
        if crit > hi:
            break
        if crit >= lo:
            vals.append(1.0 if k % 2 == 0 else -1.0)
        k += 1
    return _widened(min(vals), max(vals)).intersect(Interval(-1.0, 1.0))


def icos(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    return isin(iadd(a, point(math.pi / 2.0)))


def itan(a: Interval) -> Interval:
    if a.is_empty():
        return EMPTY
    if math.isinf(a.lo) or math.isinf(a.hi) or a.width() >= math.pi:
        return ENTIRE
    # Pole at pi/2 + k*pi. tan is increasing between consecutive poles.
    k_lo = math.floor((a.lo + math.pi / 2.0) / math.pi)
    k_hi = math.floor((a.hi + math.pi / 2.0) / math.pi)
    if k_lo != k_hi:
        if a.lo == a.hi:
            raise DomainError("tan at a pole")
        return ENTIRE
    return _widened(math.tan(a.lo), math.tan(a.hi))


# --------------------------------------------------------------------------
# Boxes
# --------------------------------------------------------------------------

class Box:
    """Mapping from variable names to intervals; the search state."""

    __slots__ = ("vals",)

    def __init__(self, vals: dict[str, Interval]):
        self.vals = vals

    def __getitem__(self, name: str) -> Interval:
        return self.vals[name]

    def __contains__(self, name: str) -> bool:
        return name in self.vals

    def __iter__(self):
        return iter(self.vals)

    def __eq__(self, other) -> bool:
        return isinstance(other, Box) and self.vals == other.vals

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.vals.items())
        return f"Box({inner})"

    def copy(self) -> "Box":
        return Box(dict(self.vals))

    def set(self, name: str, ival: Interval) -> None:
        self.vals[name] = ival

    def is_empty(self) -> bool:
        return any(v.is_empty() for v in self.vals.values())

    def width(self) -> float:
        if not self.vals:
            return 0.0
        return max(v.width() for v in self.vals.values())

    def widest_var(self) -> str:
        return max(self.vals, key=lambda k: self.vals[k].width())

    def midpoint(self) -> dict[str, float]:
        return {k: v.mid() for k, v in self.vals.items()}

    def split(self, name: str) -> tuple["Box", "Box"]:
        ival = self.vals[name]
        m = ival.mid()
        left = self.copy()
        right = self.copy()
        left.set(name, Interval(ival.lo, m))
        right.set(name, Interval(m, ival.hi))
        return left, right


EMPTY_BOX = Box({})


def empty_like(box: Box) -> Box:
    return Box({k: EMPTY for k in box.vals})


# --------------------------------------------------------------------------
# Expression evaluation over boxes
# --------------------------------------------------------------------------

def eval_expr(expr: Expr, box: Box) -> Interval:
    """Interval enclosure of an expression's range over a box."""
    if isinstance(expr, Lit):
        return point(expr.value)
    if isinstance(expr, Var):
        if expr.primed:
            raise KeyError(f"primed variable {expr.name}' is not in the box")
        return box[expr.name]
    if isinstance(expr, Neg):
        return ineg(eval_expr(expr.operand, box))
    if isinstance(expr, BinOp):
        left = eval_expr(expr.left, box)
        right = eval_expr(expr.right, box)
        if expr.op == "+":
            return iadd(left, right)
        if expr.op == "-":
            return isub(left, right)
        if expr.op == "*":
            return imul(left, right)
        if expr.op == "/":
            return idiv(left, right)
        if isinstance(expr.right, Lit):
            return ipow(left, expr.right.value)
        if right.lo == right.hi:
            return ipow(left, right.lo)
        # variable exponent: x^y = exp(y * log x)
        return iexp(imul(right, ilog(left)))
    if isinstance(expr, Call):
        args = [eval_expr(a, box) for a in expr.args]
        fn = {"sin": isin, "cos": icos, "tan": itan, "exp": iexp,
              "log": ilog, "sqrt": isqrt, "abs": iabs}.get(expr.func)
        if fn is not None:
            return fn(args[0])
        if expr.func == "min":
            return imin(args[0], args[1])
        if expr.func == "max":
            return imax(args[0], args[1])
    raise TypeError(f"not an expression: {expr!r}")


# --------------------------------------------------------------------------
# Three-valued formula evaluation
# --------------------------------------------------------------------------

class Tri(Enum):
    TRUE = 1
    FALSE = 0
    UNKNOWN = -1


def _atom_tri(atom: Atom, box: Box) -> Tri:
    try:
        left = eval_expr(atom.left, box)
        right = eval_expr(atom.right, box)
    except DomainError:
        return Tri.UNKNOWN
    if left.is_empty() or right.is_empty():
        return Tri.FALSE
    op = atom.op
    if op == "<":
        if left.hi < right.lo:
            return Tri.TRUE
        if left.lo >= right.hi:
            return Tri.FALSE
    elif op == "<=":
        if left.hi <= right.lo:
            return Tri.TRUE
        if left.lo > right.hi:
            return Tri.FALSE
    elif op == ">":
        if left.lo > right.hi:
            return Tri.TRUE
        if left.hi <= right.lo:
            return Tri.FALSE
    elif op == ">=":
        if left.lo >= right.hi:
            return Tri.TRUE
        if left.hi < right.lo:
            return Tri.FALSE
    elif op == "=":
        if (left.lo == left.hi == right.lo == right.hi):
            return Tri.TRUE
        if left.hi < right.lo or left.lo > right.hi:
            return Tri.FALSE
    return Tri.UNKNOWN


def eval_formula(f: Formula, box: Box) -> Tri:
    """certainly-true / certainly-false / unknown over every point of box."""
    if isinstance(f, Atom):
        return _atom_tri(f, box)
    if isinstance(f, BoolLit):
        return Tri.TRUE if f.value else Tri.FALSE
    if isinstance(f, And):
        saw_unknown = False
        for t in f.terms:
            r = eval_formula(t, box)
            if r is Tri.FALSE:
                return Tri.FALSE
            if r is Tri.UNKNOWN:
                saw_unknown = True
        return Tri.UNKNOWN if saw_unknown else Tri.TRUE
    if isinstance(f, Or):
        saw_unknown = False
        for t in f.terms:
            r = eval_formula(t, box)
            if r is Tri.TRUE:
                return Tri.TRUE
            if r is Tri.UNKNOWN:
                saw_unknown = True
        return Tri.UNKNOWN if saw_unknown else Tri.FALSE
    if isinstance(f, Not):
        r = eval_formula(f.term, box)
        if r is Tri.TRUE:
            return Tri.FALSE
        if r is Tri.FALSE:
            return Tri.TRUE
        return Tri.UNKNOWN
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# HC4-revise: forward-backward contraction through one relational atom
# --------------------------------------------------------------------------

_HC4_MAX_PASSES = 50
_HC4_REL_TOL = 1e-12


class _Node:
    """Expression tree decorated with per-node intervals for HC4."""

    __slots__ = ("expr", "children", "ival")

    def __init__(self, expr: Expr):
        self.expr = expr
        if isinstance(expr, Neg):
            self.children = [_Node(expr.operand)]
        elif isinstance(expr, BinOp):
            self.children = [_Node(expr.left), _Node(expr.right)]
        elif isinstance(expr, Call):
            self.children = [_Node(a) for a in expr.args]
        else:
            self.children = []
        self.ival = ENTIRE


def _forward(node: _Node, box: Box) -> Interval:
    expr = node.expr
    if isinstance(expr, Lit):
        node.ival = point(expr.value)
    elif isinstance(expr, Var):
        node.ival = box[expr.name]
    else:
        for c in node.children:
            _forward(c, box)
        kids = [c.ival for c in node.children]
        if isinstance(expr, Neg):
            node.ival = ineg(kids[0])
        elif isinstance(expr, BinOp):
            op = expr.op
            if op == "+":
                node.ival = iadd(kids[0], kids[1])
            elif op == "-":
                node.ival = isub(kids[0], kids[1])
            elif op == "*":
                node.ival = imul(kids[0], kids[1])
            elif op == "/":
                node.ival = idiv(kids[0], kids[1])
            else:
                if isinstance(expr.right, Lit):
                    node.ival = ipow(kids[0], expr.right.value)
                elif kids[1].lo == kids[1].hi:
                    node.ival = ipow(kids[0], kids[1].lo)
                else:
                    node.ival = iexp(imul(kids[1], ilog(kids[0])))
        else:  # Call
            fn = {"sin": isin, "cos": icos, "tan": itan, "exp": iexp,
                  "log": ilog, "sqrt": isqrt, "abs": iabs}.get(expr.func)
            if fn is not None:
                node.ival = fn(kids[0])
            elif expr.func == "min":
                node.ival = imin(kids[0], kids[1])
            else:
                node.ival = imax(kids[0], kids[1])
    return node.ival


def _even_root(target: Interval, n: int) -> Interval:
    """Hull of both preimage branches of x^n (n even) over target."""
    nn = target.intersect(Interval(0.0, INF))
    if nn.is_empty():
        return EMPTY
    hi_root = nn.hi ** (1.0 / n) if not math.isinf(nn.hi) else INF
    return _widened(-hi_root, hi_root)


def _backward(node: _Node, box: Box) -> bool:
    """Push node.ival down to the leaves; returns False on an empty cut."""
    expr = node.expr
    if isinstance(expr, Lit):
        return not node.ival.is_empty()
    if isinstance(expr, Var):
        cut = box[expr.name].intersect(node.ival)
        box.set(expr.name, cut)
        return not cut.is_empty()

    kids = node.children
    out = node.ival
    try:
        if isinstance(expr, Neg):
            kids[0].ival = kids[0].ival.intersect(ineg(out))
        elif isinstance(expr, BinOp):
            a, b = kids[0].ival, kids[1].ival
            op = expr.op
            if op == "+":
                kids[0].ival = a.intersect(isub(out, b))
                kids[1].ival = b.intersect(isub(out, kids[0].ival))
            elif op == "-":
                kids[0].ival = a.intersect(iadd(out, b))
                kids[1].ival = b.intersect(isub(kids[0].ival, out))
            elif op == "*":
                if not (b.lo <= 0.0 <= b.hi):
                    kids[0].ival = a.intersect(idiv(out, b))
                if not (kids[0].ival.lo <= 0.0 <= kids[0].ival.hi):
                    kids[1].ival = b.intersect(idiv(out, kids[0].ival))
            elif op == "/":
                kids[0].ival = a.intersect(imul(out, b))
                if not (out.lo <= 0.0 <= out.hi):
                    kids[1].ival = b.intersect(idiv(kids[0].ival, out))
            else:  # ^
                if isinstance(expr.right, Lit) and expr.right.value == int(expr.right.value):
                    n = int(expr.right.value)
                    if n > 0:
                        if n % 2 == 1:
                            root = _widened(
                                math.copysign(abs(out.lo) ** (1.0 / n), out.lo)
                                if not math.isinf(out.lo) else -INF,
                                math.copysign(abs(out.hi) ** (1.0 / n), out.hi)
                                if not math.isinf(out.hi) else INF)
                            kids[0].ival = a.intersect(root)
                        else:
                            branch = _even_root(out, n)
                            if a.lo >= 0.0:
                                branch = branch.intersect(Interval(0.0, INF))
                            elif a.hi <= 0.0:
                                branch = branch.intersect(Interval(-INF, 0.0))
                            kids[0].ival = a.intersect(branch)
                # other exponents: no narrowing (sound)
        elif isinstance(expr, Call):
            a = kids[0].ival
            if expr.func == "exp":
                nn = out.intersect(Interval(0.0, INF))
                if nn.is_empty():
                    kids[0].ival = EMPTY
                elif nn.hi > 0.0:
                    kids[0].ival = a.intersect(
                        ilog(Interval(max(nn.lo, 5e-324), nn.hi)))
            elif expr.func == "log":
                kids[0].ival = a.intersect(iexp(out))
            elif expr.func == "sqrt":
                nn = out.intersect(Interval(0.0, INF))
                if nn.is_empty():
                    kids[0].ival = EMPTY
                else:
                    kids[0].ival = a.intersect(
                        _widened(nn.lo * nn.lo,
                                 nn.hi * nn.hi if not math.isinf(nn.hi) else INF))
            elif expr.func == "abs":
                nn = out.intersect(Interval(0.0, INF))
                if nn.is_empty():
                    kids[0].ival = EMPTY
                else:
                    sym = Interval(-nn.hi, nn.hi)
                    if a.lo >= 0.0:
                        sym = Interval(nn.lo, nn.hi)
                    elif a.hi <= 0.0:
                        sym = Interval(-nn.hi, -nn.lo)
                    kids[0].ival = a.intersect(sym)
            elif expr.func == "min":
                b = kids[1].ival
                kids[0].ival = a.intersect(Interval(out.lo, INF))
                kids[1].ival = b.intersect(Interval(out.lo, INF))
                if kids[1].ival.lo > out.hi:
                    kids[0].ival = kids[0].ival.intersect(out)
                if kids[0].ival.lo > out.hi:
                    kids[1].ival = kids[1].ival.intersect(out)
            elif expr.func == "max":
                b = kids[1].ival
                kids[0].ival = a.intersect(Interval(-INF, out.hi))
                kids[1].ival = b.intersect(Interval(-INF, out.hi))
                if kids[1].ival.hi < out.lo:
                    kids[0].ival = kids[0].ival.intersect(out)
                if kids[0].ival.hi < out.lo:
                    kids[1].ival = kids[1].ival.intersect(out)
            # sin/cos/tan: no backward narrowing (identity is sound)
    except DomainError:
        return True  # give up narrowing this node, keep soundness

    for c in kids:
        if c.ival.is_empty():
            return False
        if not _backward(c, box):
            return False
    return True


def hc4_revise(atom: Atom, box: Box) -> Box:
    """Contract ``box`` with one relational atom; never removes a solution.

    The atom must be normalized to ``t <op> c`` with a constant right side
    (op in <, <=, =, >=, >). Returns the contracted box, or an all-empty box
    when the atom is certainly false on the input.
    """
    if not isinstance(atom.right, Lit):
        raise ValueError("hc4_revise expects a constant right-hand side")
    c = atom.right.value
    target = {
        "<": Interval(-INF, c), "<=": Interval(-INF, c),
        ">": Interval(c, INF), ">=": Interval(c, INF),
        "=": Interval(c, c),
    }[atom.op]

    out = box.copy()
    root = _Node(atom.left)
    for _ in range(_HC4_MAX_PASSES):
        try:
            rng = _forward(root, out)
        except DomainError:
            return empty_like(box)
        cut = rng.intersect(target)
        if cut.is_empty():
            return empty_like(box)
        root.ival = cut
        before = {k: out[k] for k in out}
        if not _backward(root, out):
            return empty_like(box)
        change = 0.0
        for k in out:
            b, a = before[k], out[k]
            if a.is_empty():
                return empty_like(box)
            scale = max(1.0, abs(b.lo) if not math.isinf(b.lo) else 1.0,
                        abs(b.hi) if not math.isinf(b.hi) else 1.0)
            lo_moved = 0.0 if b.lo == a.lo else (
                INF if math.isinf(b.lo) else abs(a.lo - b.lo))
            hi_moved = 0.0 if b.hi == a.hi else (
                INF if math.isinf(b.hi) else abs(a.hi - b.hi))
            change = max(change, lo_moved / scale, hi_moved / scale)
        if change < _HC4_REL_TOL:
            break
    return out

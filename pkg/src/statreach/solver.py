"""The built-in delta-decision engine.

Deciding a k-step unfolding combines three pieces:

* delta-weakening: every atom, normalized to ``t > 0`` or ``t >= 0``, is
  relaxed to ``t > -delta`` (resp. ``>=``); equalities split into a pair of
  opposite inequalities first. The exact formula implies its weakening.

* validated flow enclosures: a first-order tube per step. For each tile of
  length h an a-priori bound B is found by Picard iteration with inflation
  (B must contain init + [0,h] * f(B)); the tile box init + [0,h] * f(B)
  then contains every trajectory on the tile, and init + h * f(B) contains
  the states at the tile's end.

* branch and prune: contract with the exact constraints (HC4 per atom plus
  flow/invariant pruning), certify a box as delta-sat when every weakened
  algebraic constraint is certainly true on it and the weakened invariant
  tube check passes, otherwise bisect the widest variable. Unsat only when
  every branch was refuted by exact reasoning.
"""

from __future__ import annotations

import math
import subprocess
import tempfile
from dataclasses import dataclass

from .dsl.ast import (And, Atom, BinOp, BoolLit, Expr, FALSE, Formula, Lit,
                      Neg, Not, Or, TRUE, Var)
from .encoder import UnfoldedProblem, post_var, pre_var, time_var
from .interval import (Box, EMPTY, ENTIRE, Interval, Tri, eval_formula,
                       hc4_revise, point)
from .model import ConcreteModel

_CONTRACT_PASSES = 20
_CONTRACT_TOL = 1e-10


@dataclass(frozen=True)
class DeltaConfig:
    delta: float = 1e-3
    min_box_width: float = 1e-4
    max_branch_nodes: int = 20000
    ode_step_max: float = 0.1
    picard_iterations: int = 30

    def __post_init__(self):
        if min(self.delta, self.min_box_width, self.ode_step_max) <= 0:
            raise ValueError("delta, min_box_width and ode_step_max must be "
                             "positive")
        if self.max_branch_nodes < 1 or self.picard_iterations < 1:
            raise ValueError("budgets must be positive")

    def warn_if_coarse(self) -> str | None:
        if self.min_box_width >= self.delta:
            return ("min_box_width >= delta: the search may stop on boxes "
                    "wider than the weakening can absorb")
        return None


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class DeltaSat:
    witness: Box | None


@dataclass(frozen=True)
class BudgetExhausted:
    diagnostic: str
    nodes: int = 0
    min_width: float = math.inf


Verdict = Unsat | DeltaSat | BudgetExhausted


class EnclosureBlowup(Exception):
    """Picard iteration could not certify an a-priori bound inside the
    declared variable bounds."""


# --------------------------------------------------------------------------
# Normalization and delta-weakening
# --------------------------------------------------------------------------

def _negate_atom(atom: Atom) -> Formula:
    flip = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}
    if atom.op == "=":
        return Or((Atom(atom.left, "<", atom.right),
                   Atom(atom.left, ">", atom.right)))
    return Atom(atom.left, flip[atom.op], atom.right)


def _nnf(f: Formula, neg: bool = False) -> Formula:
    if isinstance(f, Atom):
        return _negate_atom(f) if neg else f
    if isinstance(f, BoolLit):
        return BoolLit(f.value != neg)
    if isinstance(f, Not):
        return _nnf(f.term, not neg)
    if isinstance(f, And):
        terms = tuple(_nnf(t, neg) for t in f.terms)
        return Or(terms) if neg else And(terms)
    if isinstance(f, Or):
        terms = tuple(_nnf(t, neg) for t in f.terms)
        return And(terms) if neg else Or(terms)
    raise TypeError(f"not a formula: {f!r}")


def _diff(left: Expr, right: Expr) -> Expr:
    if isinstance(right, Lit) and right.value == 0.0:
        return left
    if isinstance(left, Lit) and left.value == 0.0:
        return Neg(right)
    return BinOp("-", left, right)


def normalize(f: Formula) -> Formula:
    """Negation normal form with every atom as ``t > 0`` or ``t >= 0``
    (constant zero right-hand side); equalities split into two >= atoms."""
    f = _nnf(f)

    def norm(g: Formula) -> Formula:
        if isinstance(g, Atom):
            if g.op == ">":
                return Atom(_diff(g.left, g.right), ">", Lit(0.0))
            if g.op == ">=":
                return Atom(_diff(g.left, g.right), ">=", Lit(0.0))
            if g.op == "<":
                return Atom(_diff(g.right, g.left), ">", Lit(0.0))
            if g.op == "<=":
                return Atom(_diff(g.right, g.left), ">=", Lit(0.0))
            return And((Atom(_diff(g.left, g.right), ">=", Lit(0.0)),
                        Atom(_diff(g.right, g.left), ">=", Lit(0.0))))
        if isinstance(g, And):
            return And(tuple(norm(t) for t in g.terms))
        if isinstance(g, Or):
            return Or(tuple(norm(t) for t in g.terms))
        if isinstance(g, BoolLit):
            return g
        raise TypeError(f"unexpected node after NNF: {g!r}")

    return norm(f)


def delta_weaken(f: Formula, delta: float) -> Formula:
    """Relax every normalized atom by delta: t > 0 becomes t > -delta."""
    if isinstance(f, Atom):
        if not (isinstance(f.right, Lit) and f.op in (">", ">=")):
            raise ValueError("delta_weaken expects normalized atoms "
                             "(t > c or t >= c)")
        return Atom(f.left, f.op, Lit(f.right.value - delta))
    if isinstance(f, And):
        return And(tuple(delta_weaken(t, delta) for t in f.terms))
    if isinstance(f, Or):
        return Or(tuple(delta_weaken(t, delta) for t in f.terms))
    if isinstance(f, BoolLit):
        return f
    raise TypeError(f"formula not normalized: {f!r}")


# --------------------------------------------------------------------------
# Validated flow enclosures
# --------------------------------------------------------------------------

@dataclass
class FlowEnclosure:
    tiles: list[tuple[Interval, Box]]  # (time range, state tube box)
    terminal: Box                      # states at exactly sup T

    def box_at(self, t_range: Interval) -> Box:
        """Hull over tiles whose time range meets ``t_range``."""
        names = list(self.terminal.vals)
        hull = {name: EMPTY for name in names}
        for rng, box in self.tiles:
            if rng.hi < t_range.lo or rng.lo > t_range.hi:
                continue
            for name in names:
                hull[name] = hull[name].hull(box[name])
        return Box(hull)

    def time_support(self, state: Box) -> Interval:
        """Hull of tile time ranges whose tube box meets ``state``."""
        support = EMPTY
        for rng, box in self.tiles:
            if all(not box[n].intersect(state[n]).is_empty() for n in state):
                support = support.hull(rng)
        return support


def _derivative_box(flows: dict[str, Expr], names: list[str],
                    box: Box) -> dict[str, Interval]:
    from .interval import eval_expr
    out = {}
    for name in names:
        expr = flows.get(name)
        out[name] = eval_expr(expr, box) if expr is not None else point(0.0)
    return out


def enclose_flow(flows: dict[str, Expr], init: Box, t_sup: float,
                 cfg: DeltaConfig,
                 bounds: dict[str, tuple[float, float]] | None = None,
                 ) -> FlowEnclosure:
    """First-order tube over [0, t_sup] from the initial box.

    Variables missing from ``flows`` have derivative zero. Raises
    EnclosureBlowup when no a-priori bound can be certified within the
    declared variable bounds.
    """
    names = list(init.vals)
    bounds = bounds or {}
    tiles: list[tuple[Interval, Box]] = []
    cur = init.copy()
    t = 0.0
    if t_sup <= 0.0:
        return FlowEnclosure([(point(0.0), init.copy())], init.copy())
    while t < t_sup:
        h = min(cfg.ode_step_max, t_sup - t)
        apriori = _picard_bound(flows, names, cur, h, cfg, bounds)
        deriv = _derivative_box(flows, names, apriori)
        span = Interval(0.0, h)
        tile = Box({n: cur[n].hull(_add_scaled(cur[n], span, deriv[n]))
                    for n in names})
        nxt = Box({n: _add_scaled(cur[n], point(h), deriv[n]) for n in names})
        tiles.append((Interval(t, t + h), tile))
        cur = nxt
        t += h
    return FlowEnclosure(tiles, cur)


def _add_scaled(base: Interval, scale: Interval, deriv: Interval) -> Interval:
    from .interval import iadd, imul
    return iadd(base, imul(scale, deriv))


def _picard_bound(flows, names, init: Box, h: float, cfg: DeltaConfig,
                  bounds: dict[str, tuple[float, float]]) -> Box:
    """Inflate until B contains init + [0,h] * f(B) (trajectory containment)."""
    span = Interval(0.0, h)
    cand = Box({n: _inflate(init[n]) for n in names})
    for _ in range(cfg.picard_iterations):
        deriv = _derivative_box(flows, names, cand)
        img = Box({n: init[n].hull(_add_scaled(init[n], span, deriv[n]))
                   for n in names})
        if all(_inside(img[n], cand[n]) for n in names):
            return cand
        grown = {}
        for n in names:
            merged = _inflate(cand[n].hull(img[n]))
            if n in bounds:
                lo, hi = bounds[n]
                slack = 0.05 * max(1.0, hi - lo)
                merged = merged.intersect(Interval(lo - slack, hi + slack))
            grown[n] = merged
        cand = Box(grown)
    # Final containment check before giving up.
    deriv = _derivative_box(flows, names, cand)
    img = Box({n: init[n].hull(_add_scaled(init[n], span, deriv[n]))
               for n in names})
    if all(_inside(img[n], cand[n]) for n in names):
        return cand
    raise EnclosureBlowup(
        f"no a-priori bound within declared bounds for step of length {h}")


def _inflate(iv: Interval) -> Interval:
    pad = 1e-12 + 0.1 * iv.width()
    return Interval(iv.lo - pad, iv.hi + pad)


def _inside(inner: Interval, outer: Interval) -> bool:
    return inner.lo >= outer.lo and inner.hi <= outer.hi


def check_invariant(enc: FlowEnclosure, inv: Formula, delta: float) -> Tri:
    """Three-valued invariant check over a whole tube.

    certainly-true when every tile satisfies the delta-weakened invariant;
    certainly-false when some tile certainly violates the exact invariant.
    """
    weakened = delta_weaken(normalize(inv), delta)
    exact = normalize(inv)
    all_true = True
    for _, box in enc.tiles:
        if eval_formula(exact, box) is Tri.FALSE:
            return Tri.FALSE
        if eval_formula(weakened, box) is not Tri.TRUE:
            all_true = False
    return Tri.TRUE if all_true else Tri.UNKNOWN


# --------------------------------------------------------------------------
# Constraint preparation
# --------------------------------------------------------------------------

def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for t in f.terms:
            out.extend(_conjuncts(t))
        return out
    if isinstance(f, BoolLit) and f.value:
        return []
    return [f]


@dataclass
class _Prepared:
    exact: list[Formula]       # normalized conjuncts: Atom or Or-tree
    weakened: list[Formula]
    flow_links: list           # FlowLink list from the problem
    problem: UnfoldedProblem


def _prepare(problem: UnfoldedProblem, cfg: DeltaConfig) -> _Prepared:
    exact: list[Formula] = []
    for _, f in problem.algebraic:
        exact.extend(_conjuncts(normalize(f)))
    weakened = [delta_weaken(c, cfg.delta) for c in exact]
    return _Prepared(exact, weakened, problem.flow_links, problem)


def _contract_formula(f: Formula, box: Box) -> Box:
    """Contract with one normalized conjunct. Disjunctions contract as the
    hull of the branch contractions."""
    if isinstance(f, Atom):
        return hc4_revise(f, box)
    if isinstance(f, Or):
        hulls: dict[str, Interval] = {name: EMPTY for name in box}
        for t in f.terms:
            sub = _contract_formula(t, box)
            if sub.is_empty():
                continue
            for name in box:
                hulls[name] = hulls[name].hull(sub[name])
        return Box(hulls)
    if isinstance(f, And):
        cur = box
        for t in f.terms:
            cur = _contract_formula(t, cur)
            if cur.is_empty():
                return cur
        return cur
    if isinstance(f, BoolLit):
        return box if f.value else Box({name: EMPTY for name in box})
    raise TypeError(f"cannot contract with {f!r}")


# --------------------------------------------------------------------------
# The branch-and-prune loop
# --------------------------------------------------------------------------

class _BranchRefuted(Exception):
    pass


class _InconclusiveFlow(Exception):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"flow enclosure blew up at step {step}")


def _prune_flows(prep: _Prepared, box: Box, cfg: DeltaConfig,
                 bounds: dict[str, tuple[float, float]],
                 out_encs: dict[int, FlowEnclosure] | None = None) -> Box:
    """Realize each step's flow constraint from the current box: intersect
    the post-flow copies with the tube hull over the dwell range, prune the
    dwell time against the post-flow states, and refute on certain
    invariant violations."""
    problem = prep.problem
    names = problem.state_names
    for link in prep.flow_links:
        i = link.step
        tname = time_var(i)
        t_range = box[tname]
        init_box = Box({n: box[pre_var(n, i)] for n in names})
        try:
            enc = enclose_flow(link.flows, init_box, t_range.hi, cfg, bounds)
        except EnclosureBlowup:
            raise _InconclusiveFlow(i)
        if out_encs is not None:
            out_encs[i] = enc
        # invariant refutation: a tile starting at or before every
        # admissible dwell time whose box certainly violates the invariant
        # kills the branch
        exact_inv = normalize(link.invariant)
        for rng, tile in enc.tiles:
            if rng.lo <= t_range.lo and eval_formula(exact_inv, tile) is Tri.FALSE:
                raise _BranchRefuted()
        reach = enc.box_at(t_range)
        for n in names:
            key = post_var(n, i)
            cut = box[key].intersect(reach[n])
            if cut.is_empty():
                raise _BranchRefuted()
            box.set(key, cut)
        state = Box({n: box[post_var(n, i)] for n in names})
        support = enc.time_support(state)
        if support.is_empty():
            raise _BranchRefuted()
        cut_t = t_range.intersect(support)
        if cut_t.is_empty():
            raise _BranchRefuted()
        box.set(tname, cut_t)
    return box


def _total_width(box: Box) -> float:
    total = 0.0
    for iv in box.vals.values():
        w = iv.width()
        if not math.isinf(w):
            total += w
    return total


def _contract(prep: _Prepared, box: Box, cfg: DeltaConfig,
              bounds: dict[str, tuple[float, float]],
              out_encs: dict[int, FlowEnclosure] | None = None) -> Box:
    """Fixed point of HC4 over all exact conjuncts plus flow pruning."""
    for _ in range(_CONTRACT_PASSES):
        before = _total_width(box)
        for c in prep.exact:
            box = _contract_formula(c, box)
            if box.is_empty():
                return box
        box = _prune_flows(prep, box, cfg, bounds, out_encs)
        if box.is_empty():
            return box
        if before - _total_width(box) < _CONTRACT_TOL:
            break
    return box


def _certify(prep: _Prepared, box: Box, cfg: DeltaConfig,
             bounds: dict[str, tuple[float, float]],
             encs: dict[int, FlowEnclosure] | None = None) -> bool:
    """Delta-sat certificate: every weakened algebraic constraint certainly
    true, and the weakened invariant tube check passes for every step.

    Enclosures from the final pruning pass may be reused: they were built
    from a box at least as wide as the current one, so passing the check on
    them is conservative."""
    for w in prep.weakened:
        if eval_formula(w, box) is not Tri.TRUE:
            return False
    names = prep.problem.state_names
    for link in prep.flow_links:
        enc = encs.get(link.step) if encs else None
        if enc is None:
            t_range = box[time_var(link.step)]
            init_box = Box({n: box[pre_var(n, link.step)] for n in names})
            try:
                enc = enclose_flow(link.flows, init_box, t_range.hi, cfg,
                                   bounds)
            except EnclosureBlowup:
                return False
        if check_invariant(enc, link.invariant, cfg.delta) is not Tri.TRUE:
            return False
    return True


def recheck_witness(problem: UnfoldedProblem, witness: Box,
                    cfg: DeltaConfig) -> bool:
    """Independent re-evaluation of the weakened algebraic constraints on a
    witness box (used by the acceptance suite and as a final guard)."""
    prep = _prepare(problem, cfg)
    return all(eval_formula(w, witness) is Tri.TRUE for w in prep.weakened)


def icp_solve(problem: UnfoldedProblem, cfg: DeltaConfig) -> Verdict:
    """Branch-and-prune decision for one unfolded path."""
    prep = _prepare(problem, cfg)
    bounds = {name: problem.variables[pre_var(name, 0)]
              for name in problem.state_names}
    root = Box({name: Interval(lo, hi)
                for name, (lo, hi) in problem.variables.items()})

    stack = [root]
    nodes = 0
    min_width = math.inf
    inconclusive = 0

    while stack:
        if nodes >= cfg.max_branch_nodes:
            return BudgetExhausted("branch budget exhausted", nodes, min_width)
        nodes += 1
        box = stack.pop()
        encs: dict[int, FlowEnclosure] = {}
        try:
            box = _contract(prep, box, cfg, bounds, encs)
        except _BranchRefuted:
            continue
        except _InconclusiveFlow:
            inconclusive += 1
            continue
        if box.is_empty():
            continue
        min_width = min(min_width, box.width())
        if _certify(prep, box, cfg, bounds, encs):
            return DeltaSat(box)
        if box.width() <= cfg.min_box_width:
            # Too small to split further but not certified: the precision
            # floor is too coarse for this problem; never report Unsat.
            inconclusive += 1
            continue
        name = box.widest_var()
        left, right = box.split(name)
        stack.append(right)
        stack.append(left)

    if inconclusive:
        return BudgetExhausted(
            f"{inconclusive} box(es) reached the width floor without a "
            f"certificate", nodes, min_width)
    return Unsat()


# --------------------------------------------------------------------------
# External solver adapter (disabled unless a command is configured)
# --------------------------------------------------------------------------

def solve_external(model: ConcreteModel, k: int, delta: float,
                   command: str, timeout: float = 600.0) -> Verdict:
    """Write the concrete model in the input format, invoke ``command`` with
    (file, k, delta), and map stdout containing delta-sat / unsat."""
    from .dsl.printer import pretty_print
    from .modelio import model_to_ast

    ast = model_to_ast(model)
    text = pretty_print(ast).content
    with tempfile.NamedTemporaryFile("w", suffix=".pdrh", delete=False) as fh:
        fh.write(text)
        path = fh.name
    proc = subprocess.run([command, path, str(k), str(delta)],
                          capture_output=True, text=True, timeout=timeout)
    out = (proc.stdout or "") + (proc.stderr or "")
    lowered = out.lower()
    if "delta-sat" in lowered or "delta_sat" in lowered:
        return DeltaSat(None)
    if "unsat" in lowered:
        return Unsat()
    return BudgetExhausted(
        f"external solver gave no verdict (exit {proc.returncode})")

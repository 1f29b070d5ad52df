"""Semantic domain: hybrid automata with random parameters, probabilistic
guarded commands and their rewriting into plain jumps, and instantiation of
a sampled concrete automaton.

A probabilistic guarded command  g -> p1:u1 + ... + pm:um  is rewritten into
m plain jumps guarded by a fresh discrete selector random variable r with
Pr(r = i) = p_i; branch probabilities may be expressions over previously
drawn (j-flagged) random variables.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dsl.ast import (And, Atom, BernoulliAst, BoolLit, DiscreteAst,
                      ExponentialAst, Expr, Formula, JumpAst, Lit, ModeAst,
                      ModelAst, NormalAst, RvDecl, TRUE, UniformAst, Var)
from .dsl.parser import TIME_VARIABLE
from .symbolic import fold_expr, fold_formula, free_vars, primed_vars

PROB_SUM_TOL = 1e-9


class ModelError(Exception):
    pass


class CyclicRvDependenceError(ModelError):
    pass


class ProbabilityValidationError(ModelError):
    """A sampled branch-probability vector left [0,1] or does not sum to 1."""


# --------------------------------------------------------------------------
# Distributions and random variables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Bernoulli:
    p: float


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float


@dataclass(frozen=True)
class Exponential:
    rate: float


@dataclass(frozen=True)
class Discrete:
    items: tuple[tuple[float, Expr], ...]  # (value, probability expression)

    def is_constant(self) -> bool:
        return all(isinstance(p, Lit) for _, p in self.items)

    def constant_probs(self) -> list[float]:
        return [p.value for _, p in self.items]  # type: ignore[union-attr]


Distribution = Bernoulli | Uniform | Normal | Exponential | Discrete


@dataclass(frozen=True)
class RandomVariable:
    name: str
    distribution: Distribution
    jump_flag: bool = False
    synthetic: bool = False  # introduced by command rewriting

    def support_contains(self, x: float) -> bool:
        d = self.distribution
        if isinstance(d, Bernoulli):
            return x in (0.0, 1.0)
        if isinstance(d, Uniform):
            return d.a <= x <= d.b
        if isinstance(d, Normal):
            return True
        if isinstance(d, Exponential):
            return x >= 0.0
        return any(x == v for v, _ in d.items)


def _dist_from_ast(dist) -> Distribution:
    if isinstance(dist, BernoulliAst):
        return Bernoulli(dist.p)
    if isinstance(dist, UniformAst):
        return Uniform(dist.a, dist.b)
    if isinstance(dist, NormalAst):
        return Normal(dist.mu, dist.sigma)
    if isinstance(dist, ExponentialAst):
        return Exponential(dist.rate)
    if isinstance(dist, DiscreteAst):
        d = Discrete(tuple((v, fold_expr(p, {})) for v, p in dist.items))
        if d.is_constant():
            _check_prob_vector(d.constant_probs(), "discrete distribution")
        return d
    raise TypeError(f"not a distribution: {dist!r}")


def _check_prob_vector(probs: list[float], what: str):
    if any(p < -PROB_SUM_TOL or p > 1.0 + PROB_SUM_TOL for p in probs):
        raise ProbabilityValidationError(
            f"{what}: probability outside [0, 1]: {probs}")
    total = sum(probs)
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ProbabilityValidationError(
            f"{what}: probabilities sum to {total}, expected 1")


# --------------------------------------------------------------------------
# Automaton structure
# --------------------------------------------------------------------------

@dataclass
class Mode:
    id: int
    invariant: Formula
    flows: dict[str, Expr]


@dataclass(frozen=True)
class Jump:
    source: int
    guard: Formula
    target: int
    reset: Formula
    label: str | None = None


@dataclass(frozen=True)
class Branch:
    prob: Expr
    target: int
    reset: Formula


@dataclass(frozen=True)
class GuardedCommand:
    source_mode: int
    guard: Formula
    branches: tuple[Branch, ...]


@dataclass
class HybridModel:
    """Hybrid automaton with random parameters and guarded commands.

    After ``desugar_pha`` the commands list is empty; after ``instantiate``
    the random-variable list is empty too and every formula is closed over
    the system variables (a concrete automaton).
    """

    modes: list[Mode]
    jumps: list[Jump]
    commands: list[GuardedCommand]
    variables: list[tuple[str, float, float]]  # (name, lower, upper)
    time_bound: float
    rvs: list[RandomVariable]
    init: tuple[int, Formula]
    goals: list[tuple[int, Formula]]

    def mode(self, mode_id: int) -> Mode:
        for m in self.modes:
            if m.id == mode_id:
                return m
        raise KeyError(f"no mode {mode_id}")

    def mode_ids(self) -> list[int]:
        return [m.id for m in self.modes]

    def var_names(self) -> list[str]:
        return [name for name, _, _ in self.variables]

    def var_bounds(self, name: str) -> tuple[float, float]:
        for n, lo, hi in self.variables:
            if n == name:
                return lo, hi
        raise KeyError(name)

    def rv_names(self) -> set[str]:
        return {rv.name for rv in self.rvs}

    @property
    def is_concrete(self) -> bool:
        return not self.rvs and not self.commands


# `ConcreteModel` in the interfaces below is a HybridModel with no random
# variables and no commands left.
ConcreteModel = HybridModel


def from_ast(ast: ModelAst) -> HybridModel:
    """Build the semantic model from a parsed AST (commands stay empty; the
    surface syntax encodes probabilistic jumps through discrete random
    variables referenced in guards)."""
    variables = [(v.name, v.lower, v.upper) for v in ast.var_decls
                 if v.name != TIME_VARIABLE]
    time_bound = 0.0
    for v in ast.var_decls:
        if v.name == TIME_VARIABLE:
            time_bound = v.upper
    modes = []
    jumps: list[Jump] = []
    for mode_ast in ast.modes:
        inv = _conjunction(mode_ast.invariants)
        modes.append(Mode(mode_ast.id, inv, dict(mode_ast.flows)))
        for j in mode_ast.jumps:
            jumps.append(Jump(mode_ast.id, j.guard, j.target_mode, j.reset,
                              j.event_label))
    rvs = [RandomVariable(d.name, _dist_from_ast(d.distribution), d.jump_flag)
           for d in ast.rv_decls]
    return HybridModel(modes, jumps, [], variables, time_bound, rvs,
                       ast.init, list(ast.goals))


def _conjunction(formulas: list[Formula]) -> Formula:
    if not formulas:
        return TRUE
    if len(formulas) == 1:
        return formulas[0]
    return And(tuple(formulas))


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------

def extract_rvs(model: HybridModel) -> list[RandomVariable]:
    """All random variables, ordered so that every variable referenced by a
    discrete distribution's probability expressions is drawn first."""
    by_name = {rv.name: rv for rv in model.rvs}
    deps: dict[str, set[str]] = {}
    for rv in model.rvs:
        needed: set[str] = set()
        if isinstance(rv.distribution, Discrete):
            for _, p in rv.distribution.items:
                needed |= free_vars(p) & set(by_name)
        deps[rv.name] = needed

    ordered: list[RandomVariable] = []
    done: set[str] = set()
    remaining = [rv.name for rv in model.rvs]
    while remaining:
        progressed = False
        for name in list(remaining):
            if deps[name] <= done:
                ordered.append(by_name[name])
                done.add(name)
                remaining.remove(name)
                progressed = True
        if not progressed:
            raise CyclicRvDependenceError(
                f"cyclic dependency among random variables {sorted(remaining)}")
    return ordered


def desugar_pha(model: HybridModel) -> HybridModel:
    """Rewrite every guarded command into plain jumps over a fresh discrete
    selector random variable. Identity on command-free models."""
    if not model.commands:
        return model
    taken = set(model.var_names()) | model.rv_names()
    jumps = list(model.jumps)
    rvs = list(model.rvs)
    for idx, cmd in enumerate(model.commands):
        name = f"_sel{idx}"
        while name in taken:
            name = "_" + name
        taken.add(name)
        items = tuple((float(i + 1), branch.prob)
                      for i, branch in enumerate(cmd.branches))
        selector = RandomVariable(name, Discrete(items), synthetic=True)
        rvs.append(selector)
        for i, branch in enumerate(cmd.branches):
            guard = And((cmd.guard, Atom(Var(name), "=", Lit(float(i + 1)))))
            jumps.append(Jump(cmd.source_mode, guard, branch.target,
                              branch.reset))
    return replace(model, jumps=jumps, commands=[], rvs=rvs)


def instantiate(model: HybridModel, sample: dict[str, float]) -> ConcreteModel:
    """Substitute sampled values for every random variable and fold constants.

    Jumps whose guards fold to false (unselected command branches) are
    dropped. Raises ProbabilityValidationError when the sample makes some
    discrete distribution's folded probabilities invalid.
    """
    if model.commands:
        raise ModelError("instantiate requires a desugared model "
                         "(run desugar_pha first)")
    missing = model.rv_names() - set(sample)
    if missing:
        raise ModelError(f"sample is missing values for {sorted(missing)}")

    for rv in model.rvs:
        if isinstance(rv.distribution, Discrete):
            probs = []
            for _, p in rv.distribution.items:
                folded = fold_expr(p, sample)
                if not isinstance(folded, Lit):
                    raise ModelError(
                        f"probability of '{rv.name}' does not fold to a "
                        f"constant under the sample")
                probs.append(folded.value)
            _check_prob_vector(probs, f"distribution of '{rv.name}'")

    env = dict(sample)
    modes = [Mode(m.id, fold_formula(m.invariant, env),
                  {v: fold_expr(e, env) for v, e in m.flows.items()})
             for m in model.modes]
    jumps = []
    for j in model.jumps:
        guard = fold_formula(j.guard, env)
        if guard == BoolLit(False):
            continue
        jumps.append(Jump(j.source, guard, j.target,
                          fold_formula(j.reset, env), j.label))
    init = (model.init[0], fold_formula(model.init[1], env))
    goals = [(m, fold_formula(g, env)) for m, g in model.goals]
    return HybridModel(modes, jumps, [], list(model.variables),
                       model.time_bound, [], init, goals)


def validate(model: HybridModel) -> list[str]:
    """Statically checkable consistency diagnostics (never raises)."""
    diags: list[str] = []
    mode_ids = set(model.mode_ids())
    declared = set(model.var_names()) | model.rv_names()

    if model.init[0] not in mode_ids:
        diags.append(f"init mode {model.init[0]} is not declared")
    for mode_id, _ in model.goals:
        if mode_id not in mode_ids:
            diags.append(f"goal mode {mode_id} is not declared")
    for j in model.jumps:
        if j.source not in mode_ids:
            diags.append(f"jump from undeclared mode {j.source}")
        if j.target not in mode_ids:
            diags.append(f"jump targets undeclared mode {j.target}")

    def check_scope(f: Formula, where: str, allow_primed: bool = False):
        unknown = free_vars(f) - declared
        if unknown:
            diags.append(f"{where} references unknown {sorted(unknown)}")
        primes = primed_vars(f)
        bad_primes = primes - set(model.var_names())
        if bad_primes:
            diags.append(f"{where} primes undeclared {sorted(bad_primes)}")
        if primes and not allow_primed:
            diags.append(f"{where} uses primed variables")

    for m in model.modes:
        check_scope(m.invariant, f"invariant of mode {m.id}")
        for v, e in m.flows.items():
            unknown = free_vars(e) - declared
            if unknown:
                diags.append(f"flow of '{v}' in mode {m.id} references "
                             f"unknown {sorted(unknown)}")
    for j in model.jumps:
        check_scope(j.guard, f"guard of jump {j.source}->{j.target}")
        check_scope(j.reset, f"reset of jump {j.source}->{j.target}",
                    allow_primed=True)
    check_scope(model.init[1], "init condition")
    for mode_id, g in model.goals:
        check_scope(g, f"goal at mode {mode_id}")

    for cmd in model.commands:
        check_scope(cmd.guard, f"guard of command at mode {cmd.source_mode}")
        if all(isinstance(b.prob, Lit) for b in cmd.branches):
            probs = [b.prob.value for b in cmd.branches]  # type: ignore
            try:
                _check_prob_vector(probs, "command probabilities")
            except ProbabilityValidationError as exc:
                diags.append(str(exc))
        for b in cmd.branches:
            check_scope(b.reset,
                        f"reset of command branch at mode {cmd.source_mode}",
                        allow_primed=True)
            if b.target not in mode_ids:
                diags.append(f"command branch targets undeclared mode "
                             f"{b.target}")

    for rv in model.rvs:
        if isinstance(rv.distribution, Discrete):
            for _, p in rv.distribution.items:
                refs = free_vars(p) & model.rv_names()
                non_j = {r for r in refs
                         if not _rv_by_name(model, r).jump_flag}
                if non_j:
                    diags.append(
                        f"distribution of '{rv.name}' references non-j-flagged "
                        f"random variables {sorted(non_j)}")
    return diags


def _rv_by_name(model: HybridModel, name: str) -> RandomVariable:
    for rv in model.rvs:
        if rv.name == name:
            return rv
    raise KeyError(name)

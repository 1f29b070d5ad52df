"""Bounded-reachability unfolding for a concrete automaton.

A k-step problem introduces, per step i, a pre-flow copy x_i of every state
variable, a post-flow copy x_i^t, and a dwell time t_i in [0, M]. Mode
choices are enumerated as explicit paths (init mode, k jump edges, final
mode carrying a goal), which is equivalent to the Boolean mode-selection
encoding: each admissible assignment of the selection variables corresponds
to exactly one path, and the disjunction over assignments is satisfiable iff
some path's conjunctive unfolding is.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dsl.ast import Atom, Expr, Formula, Or, Var
from .dsl.printer import format_expr, format_formula
from .model import ConcreteModel, Jump
from .symbolic import free_vars, primed_vars, rename_vars


@dataclass(frozen=True)
class ReachQuery:
    k: int
    time_bound: float  # per-step dwell bound M
    delta: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("unfolding depth must be >= 0")
        if self.time_bound <= 0:
            raise ValueError("per-step time bound must be > 0")
        if self.delta <= 0:
            raise ValueError("precision must be > 0")


@dataclass(frozen=True)
class PathTemplate:
    modes: tuple[int, ...]       # length k+1
    jumps: tuple[Jump, ...]      # length k; edge chosen at each step

    @property
    def depth(self) -> int:
        return len(self.modes) - 1


def pre_var(name: str, step: int) -> str:
    return f"{name}@{step}"


def post_var(name: str, step: int) -> str:
    return f"{name}@{step}t"


def time_var(step: int) -> str:
    # '@' prefix keeps dwell times clear of user variables (identifiers
    # cannot contain '@').
    return f"@t{step}"


@dataclass
class FlowLink:
    """Step i's continuous flow: from the x_i copies over t_i to x_i^t."""

    step: int
    mode_id: int
    flows: dict[str, Expr]  # over original variable names
    invariant: Formula      # over original variable names


@dataclass
class UnfoldedProblem:
    path: PathTemplate
    variables: dict[str, tuple[float, float]]  # step variable -> bounds
    algebraic: list[tuple[str, Formula]]       # (label, step-renamed formula)
    flow_links: list[FlowLink]
    state_names: list[str]  # original state variable names, declared order

    def var_count(self) -> int:
        return len(self.variables)

    def dump(self) -> str:
        lines = [f"path: {' -> '.join(str(m) for m in self.path.modes)}"]
        for name, (lo, hi) in self.variables.items():
            lines.append(f"var {name} in [{lo}, {hi}]")
        for label, f in self.algebraic:
            lines.append(f"{label}: {format_formula(f)}")
        for link in self.flow_links:
            for v, e in link.flows.items():
                lines.append(f"flow step {link.step} mode {link.mode_id}: "
                             f"d/dt[{v}] = {format_expr(e)}")
            lines.append(f"invariant step {link.step} mode {link.mode_id}: "
                         f"{format_formula(link.invariant)}")
        return "\n".join(lines)


def enumerate_paths(model: ConcreteModel, k: int) -> list[PathTemplate]:
    """All mode sequences of length k+1 that start at the init mode, follow
    jump edges, and end at a goal mode. Deterministic order: lexicographic
    by mode ids, jump-declaration order breaking ties."""
    if model.rvs or model.commands:
        raise ValueError("enumerate_paths requires a concrete model")
    init_mode = model.init[0]
    goal_modes = {m for m, _ in model.goals}
    if init_mode not in set(model.mode_ids()):
        return []

    out_edges: dict[int, list[Jump]] = {}
    for j in model.jumps:
        out_edges.setdefault(j.source, []).append(j)
    for edges in out_edges.values():
        edges.sort(key=lambda j: j.target)

    results: list[PathTemplate] = []

    def extend(modes: list[int], jumps: list[Jump]):
        if len(modes) == k + 1:
            if modes[-1] in goal_modes:
                results.append(PathTemplate(tuple(modes), tuple(jumps)))
            return
        for edge in out_edges.get(modes[-1], []):
            extend(modes + [edge.target], jumps + [edge])

    extend([init_mode], [])
    return results


def _goal_formula(model: ConcreteModel, mode_id: int) -> Formula:
    formulas = [g for m, g in model.goals if m == mode_id]
    if len(formulas) == 1:
        return formulas[0]
    return Or(tuple(formulas))


def unfold(model: ConcreteModel, path: PathTemplate,
           query: ReachQuery) -> UnfoldedProblem:
    """Build the constraint system for one path template.

    Constraints: init on the x_0 copies, per-step flow links, jump guard on
    x_i^t, reset linking x_i^t to x_{i+1} (identity for variables the reset
    does not mention), goal on x_k^t, and one invariant obligation per step.
    """
    k = path.depth
    names = model.var_names()
    n = len(names)

    variables: dict[str, tuple[float, float]] = {}
    for i in range(k + 1):
        for name in names:
            lo, hi = model.var_bounds(name)
            variables[pre_var(name, i)] = (lo, hi)
            variables[post_var(name, i)] = (lo, hi)
        variables[time_var(i)] = (0.0, query.time_bound)
    assert len(variables) == 2 * (k + 1) * n + (k + 1)

    algebraic: list[tuple[str, Formula]] = []
    pre_map_0 = {name: pre_var(name, 0) for name in names}
    algebraic.append(("init", rename_vars(model.init[1], pre_map_0)))

    flow_links: list[FlowLink] = []
    for i, mode_id in enumerate(path.modes):
        mode = model.mode(mode_id)
        flow_links.append(FlowLink(i, mode_id, dict(mode.flows),
                                   mode.invariant))

    for i, edge in enumerate(path.jumps):
        post_map = {name: post_var(name, i) for name in names}
        next_map = {name: pre_var(name, i + 1) for name in names}
        algebraic.append((f"guard step {i}",
                          rename_vars(edge.guard, post_map)))
        algebraic.append((f"reset step {i}",
                          rename_vars(edge.reset, post_map, primed=next_map)))
        mentioned = primed_vars(edge.reset)
        for name in names:
            if name not in mentioned:
                algebraic.append(
                    (f"reset step {i} identity {name}",
                     Atom(Var(pre_var(name, i + 1)), "=",
                          Var(post_var(name, i)))))

    post_map_k = {name: post_var(name, k) for name in names}
    algebraic.append(("goal",
                      rename_vars(_goal_formula(model, path.modes[-1]),
                                  post_map_k)))

    for label, f in algebraic:
        refs = free_vars(f)
        unknown = refs - set(variables)
        assert not unknown, f"{label} references undeclared {unknown}"

    return UnfoldedProblem(path, variables, algebraic, flow_links,
                           list(names))

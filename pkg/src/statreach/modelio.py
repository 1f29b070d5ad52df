"""Conversion from the semantic model back to the surface AST, used when
handing a concrete automaton to an external solver command."""

from __future__ import annotations

from .dsl.ast import (And, Formula, JumpAst, ModeAst, ModelAst, RvDecl,
                      BernoulliAst, DiscreteAst, ExponentialAst, NormalAst,
                      UniformAst, VarDecl)
from .dsl.parser import TIME_VARIABLE
from .model import (Bernoulli, Discrete, Exponential, HybridModel, Normal,
                    Uniform)


def _dist_to_ast(dist):
    if isinstance(dist, Bernoulli):
        return BernoulliAst(dist.p)
    if isinstance(dist, Uniform):
        return UniformAst(dist.a, dist.b)
    if isinstance(dist, Normal):
        return NormalAst(dist.mu, dist.sigma)
    if isinstance(dist, Exponential):
        return ExponentialAst(dist.rate)
    if isinstance(dist, Discrete):
        return DiscreteAst(tuple(dist.items))
    raise TypeError(f"not a distribution: {dist!r}")


def _invariant_list(inv: Formula) -> list[Formula]:
    if isinstance(inv, And):
        return list(inv.terms)
    return [inv]


def model_to_ast(model: HybridModel) -> ModelAst:
    if model.commands:
        raise ValueError("desugar guarded commands before serializing")
    rv_decls = [RvDecl(rv.name, _dist_to_ast(rv.distribution), rv.jump_flag)
                for rv in model.rvs]
    var_decls = [VarDecl(name, lo, hi) for name, lo, hi in model.variables]
    var_decls.append(VarDecl(TIME_VARIABLE, 0.0, model.time_bound))
    modes = []
    for m in model.modes:
        jumps = [JumpAst(j.guard, j.target, j.reset, j.label)
                 for j in model.jumps if j.source == m.id]
        modes.append(ModeAst(m.id, _invariant_list(m.invariant),
                             dict(m.flows), jumps))
    return ModelAst(rv_decls, var_decls, modes, model.init,
                    list(model.goals))

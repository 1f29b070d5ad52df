"""Seeded sampling of random-variable assignments.

Streams are counter-based and split by sample index: the stream for index i
is a pure function of (seed, i), so sequential and parallel runs see the
same sample at the same index. Philox (a counter-based generator) keyed
through numpy's SeedSequence provides the splitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsl.ast import Lit
from .model import (Bernoulli, Discrete, Distribution, Exponential,
                    HybridModel, Normal, RandomVariable, Uniform,
                    _check_prob_vector)
from .symbolic import fold_expr

DEFAULT_SEED = 1729


class UnfoldedDiscreteExpressionError(Exception):
    """draw() was handed a discrete distribution whose probabilities are
    still expressions; fold them against already-drawn values first."""


@dataclass
class RandomStream:
    """Single-consumer stream of unit draws with a draw counter."""

    gen: np.random.Generator
    draws: int = 0

    def unit(self) -> float:
        self.draws += 1
        return float(self.gen.random())

    def gauss(self) -> float:
        self.draws += 1
        return float(self.gen.standard_normal())


def stream_for(seed: int, index: int, salt: tuple[int, ...] = ()) -> RandomStream:
    """Independent stream for one sample index (pure in (seed, salt, index))."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(*salt, index))
    return RandomStream(np.random.Generator(np.random.Philox(seq)))


def draw(dist: Distribution, rs: RandomStream) -> float:
    """One value from ``dist``; always inside the distribution's support."""
    if isinstance(dist, Bernoulli):
        value = 1.0 if rs.unit() < dist.p else 0.0
    elif isinstance(dist, Uniform):
        value = dist.a + (dist.b - dist.a) * rs.unit()
        value = min(max(value, dist.a), dist.b)
    elif isinstance(dist, Normal):
        value = dist.mu + dist.sigma * rs.gauss()
    elif isinstance(dist, Exponential):
        value = -np.log1p(-rs.unit()) / dist.rate
    elif isinstance(dist, Discrete):
        if not dist.is_constant():
            raise UnfoldedDiscreteExpressionError(
                "discrete distribution has unfolded probability expressions")
        probs = dist.constant_probs()
        _check_prob_vector(probs, "discrete distribution")
        u = rs.unit()
        acc = 0.0
        value = dist.items[-1][0]
        for (v, _), p in zip(dist.items, probs):
            acc += p
            if u < acc:
                value = v
                break
    else:
        raise TypeError(f"not a distribution: {dist!r}")
    return float(value)


def sample_all(rvs: list[RandomVariable], model: HybridModel | None,
               rs: RandomStream) -> dict[str, float]:
    """Draw every random variable in (topological) order.

    Discrete probability expressions are folded against the values drawn so
    far before their own draw, so j-flagged variables feeding a discrete
    distribution must precede it in ``rvs`` (extract_rvs guarantees this).
    """
    sample: dict[str, float] = {}
    for rv in rvs:
        dist = rv.distribution
        if isinstance(dist, Discrete) and not dist.is_constant():
            items = []
            for v, p in dist.items:
                folded = fold_expr(p, sample)
                if not isinstance(folded, Lit):
                    raise UnfoldedDiscreteExpressionError(
                        f"probability of '{rv.name}' references undrawn "
                        f"variables")
                items.append((v, folded))
            probs = [p.value for _, p in items]
            _check_prob_vector(probs, f"distribution of '{rv.name}'")
            dist = Discrete(tuple(items))
        value = draw(dist, rs)
        assert rv.support_contains(value), \
            f"draw for '{rv.name}' left the distribution support"
        sample[rv.name] = value
    return sample

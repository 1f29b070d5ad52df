"""Sequential statistical procedures over a Bernoulli verdict stream.

Each test is an incremental state machine: init() builds a fresh state,
update() folds in one boolean verdict and reports whether to continue,
which hypothesis was decided, or which estimate to return.

Hypothesis tests
  LAI   generalized-likelihood-ratio test with a constant stopping boundary
        ln(1/cost); decides the side of theta the empirical mean fell on.
  BFT   Bayes factor of H0: p >= theta against H1: p < theta under a Beta
        prior; stops when the factor leaves [1/T, T].
  BFTI  Bayes factor with an indifference region: H0: p >= theta + delta
        against H1: p <= theta - delta; the region's posterior mass counts
        for neither hypothesis.
  SPRT  Wald's test of theta0 = theta - delta against theta1 = theta + delta
        with thresholds A = 1/T, B = T on the likelihood ratio.

Estimation procedures
  CHB   fixed sample size N = ceil(ln(2/(1-coverage)) / (2 delta1^2)), then
        the empirical mean with a +/- delta1 interval.
  BEST  Beta-posterior interval of half-width delta1 (shifted to stay inside
        [0,1]); stops when its posterior mass reaches the coverage target.
  NSAM  fixed sample count; CLT interval at a configurable confidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy import special as _sp

from .dsl.ast import (BestSpec, BftiSpec, BftSpec, ChbSpec, LaiSpec,
                      NsamSpec, SprtSpec, TestSpecAst)


class UpdateAfterStopError(Exception):
    pass


@dataclass(frozen=True)
class Continue:
    pass


@dataclass(frozen=True)
class Decided:
    hypothesis: str  # "H0" or "H1"


@dataclass(frozen=True)
class Estimate:
    point: float
    interval: tuple[float, float]
    confidence: float


Outcome = Continue | Decided | Estimate

CONTINUE = Continue()


@dataclass(frozen=True)
class TestState:
    spec: TestSpecAst
    succ: int = 0
    n: int = 0
    log_ratio: float = 0.0  # SPRT accumulator; recomputable from (succ, n)
    target_n: int = 0       # CHB/NSAM precomputed stop size
    done: bool = False


# --------------------------------------------------------------------------
# Special functions
# --------------------------------------------------------------------------

def beta_posterior_mass(alpha: float, beta: float, lo: float,
                        hi: float) -> float:
    """Probability a Beta(alpha, beta) variable lies in [lo, hi]."""
    if lo > hi:
        raise ValueError("lo must not exceed hi")
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    return float(_sp.betainc(alpha, beta, hi) - _sp.betainc(alpha, beta, lo))


def beta_mean(alpha: float, beta: float) -> float:
    return alpha / (alpha + beta)


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("quantile argument must be in (0, 1)")
    return float(_sp.ndtri(p))


def chb_sample_size(delta1: float, coverage: float) -> int:
    """Samples needed so the empirical mean is within delta1 of the true
    probability with the requested coverage (Hoeffding bound)."""
    return math.ceil(math.log(2.0 / (1.0 - coverage)) / (2.0 * delta1 ** 2))


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), q in (0,1)."""
    if p <= 0.0:
        return math.log(1.0 / (1.0 - q))
    if p >= 1.0:
        return math.log(1.0 / q)
    return (p * math.log(p / q)
            + (1.0 - p) * math.log((1.0 - p) / (1.0 - q)))


# --------------------------------------------------------------------------
# State machine
# --------------------------------------------------------------------------

def init(spec: TestSpecAst) -> TestState:
    if isinstance(spec, ChbSpec):
        return TestState(spec, target_n=chb_sample_size(spec.delta1,
                                                        spec.coverage))
    if isinstance(spec, NsamSpec):
        return TestState(spec, target_n=spec.n)
    return TestState(spec)


def update(state: TestState, sat: bool) -> tuple[TestState, Outcome]:
    """Fold one verdict; returns the new state and the stop/continue outcome."""
    if state.done:
        raise UpdateAfterStopError("test already stopped")
    spec = state.spec
    succ = state.succ + (1 if sat else 0)
    n = state.n + 1

    if isinstance(spec, SprtSpec):
        theta0 = spec.theta - spec.delta
        theta1 = spec.theta + spec.delta
        step = (math.log(theta1 / theta0) if sat
                else math.log((1.0 - theta1) / (1.0 - theta0)))
        log_ratio = state.log_ratio + step
        log_t = math.log(spec.ratio_threshold)
        new = TestState(spec, succ, n, log_ratio)
        if log_ratio > log_t:
            return replace(new, done=True), Decided("H1")
        if log_ratio < -log_t:
            return replace(new, done=True), Decided("H0")
        return new, CONTINUE

    if isinstance(spec, BftSpec):
        new = TestState(spec, succ, n)
        factor = _bayes_factor(spec.alpha, spec.beta, succ, n,
                               h0_lo=spec.theta, h1_hi=spec.theta)
        if factor > spec.ratio_threshold:
            return replace(new, done=True), Decided("H0")
        if factor < 1.0 / spec.ratio_threshold:
            return replace(new, done=True), Decided("H1")
        return new, CONTINUE

    if isinstance(spec, BftiSpec):
        new = TestState(spec, succ, n)
        factor = _bayes_factor(spec.alpha, spec.beta, succ, n,
                               h0_lo=spec.theta + spec.delta,
                               h1_hi=spec.theta - spec.delta)
        if factor > spec.ratio_threshold:
            return replace(new, done=True), Decided("H0")
        if factor < 1.0 / spec.ratio_threshold:
            return replace(new, done=True), Decided("H1")
        return new, CONTINUE

    if isinstance(spec, LaiSpec):
        new = TestState(spec, succ, n)
        p_hat = succ / n
        stat = n * bernoulli_kl(p_hat, spec.theta)
        if stat >= math.log(1.0 / spec.cost_per_sample):
            decided = "H1" if p_hat >= spec.theta else "H0"
            return replace(new, done=True), Decided(decided)
        return new, CONTINUE

    if isinstance(spec, ChbSpec):
        new = TestState(spec, succ, n, target_n=state.target_n)
        if n < state.target_n:
            return new, CONTINUE
        p_hat = succ / n
        lo = max(0.0, p_hat - spec.delta1)
        hi = min(1.0, p_hat + spec.delta1)
        return replace(new, done=True), Estimate(p_hat, (lo, hi),
                                                 spec.coverage)

    if isinstance(spec, BestSpec):
        new = TestState(spec, succ, n)
        a = spec.alpha + succ
        b = spec.beta + (n - succ)
        mean = beta_mean(a, b)
        lo = mean - spec.delta1
        hi = mean + spec.delta1
        if lo < 0.0:
            lo, hi = 0.0, 2.0 * spec.delta1
        elif hi > 1.0:
            lo, hi = 1.0 - 2.0 * spec.delta1, 1.0
        mass = beta_posterior_mass(a, b, lo, hi)
        if mass >= spec.coverage:
            return replace(new, done=True), Estimate(mean, (lo, hi), mass)
        return new, CONTINUE

    if isinstance(spec, NsamSpec):
        new = TestState(spec, succ, n, target_n=state.target_n)
        if n < state.target_n:
            return new, CONTINUE
        p_hat = succ / n
        eps = nsam_error(p_hat, n, spec.confidence)
        lo = max(0.0, p_hat - eps)
        hi = min(1.0, p_hat + eps)
        return replace(new, done=True), Estimate(p_hat, (lo, hi),
                                                 spec.confidence)

    raise TypeError(f"not a test specification: {spec!r}")


def nsam_error(p_hat: float, n: int, confidence: float) -> float:
    """CLT half-width at the given confidence for a sample of size n."""
    return (normal_quantile((confidence + 1.0) / 2.0)
            * math.sqrt(p_hat * (1.0 - p_hat) / n))


def _bayes_factor(alpha: float, beta: float, succ: int, n: int,
                  h0_lo: float, h1_hi: float) -> float:
    """Posterior odds over prior odds of H0: p >= h0_lo vs H1: p <= h1_hi."""
    post0 = beta_posterior_mass(alpha + succ, beta + n - succ, h0_lo, 1.0)
    post1 = beta_posterior_mass(alpha + succ, beta + n - succ, 0.0, h1_hi)
    prior0 = beta_posterior_mass(alpha, beta, h0_lo, 1.0)
    prior1 = beta_posterior_mass(alpha, beta, 0.0, h1_hi)
    if prior0 <= 0.0 or prior1 <= 0.0:
        raise ValueError("prior assigns zero mass to a hypothesis")
    post_odds_num = post0 * prior1
    post_odds_den = post1 * prior0
    if post_odds_den == 0.0:
        return math.inf
    return post_odds_num / post_odds_den


def run_to_completion(spec: TestSpecAst, verdicts) -> tuple[TestState, Outcome]:
    """Fold a verdict iterable until the test stops (testing convenience)."""
    state = init(spec)
    outcome: Outcome = CONTINUE
    for v in verdicts:
        state, outcome = update(state, bool(v))
        if not isinstance(outcome, Continue):
            break
    return state, outcome

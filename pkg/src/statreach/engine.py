"""The sampling loop: draw an assignment for every random variable, decide
bounded reachability of the sampled concrete automaton, and fold verdicts
into a sequential statistical test until it stops.

Per-sample verdicts are cached on the exact sampled value tuple, which pays
off when the sample space is small (discrete selectors for probabilistic
jumps). A budget-exhausted decision counts as reachable: overapproximating
keeps the estimate on the safe side.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from . import sampler, stats
from .dsl.ast import TestSpecAst
from .encoder import ReachQuery, enumerate_paths, unfold
from .model import (ConcreteModel, HybridModel, ProbabilityValidationError,
                    desugar_pha, extract_rvs, instantiate)
from .solver import (BudgetExhausted, DeltaConfig, DeltaSat, Verdict,
                     icp_solve, solve_external)


@dataclass(frozen=True)
class RunConfig:
    k: int = 0
    delta: float = 1e-3
    seed: int = sampler.DEFAULT_SEED
    workers: int = 1  # >1 selects the parallel mode
    solver: DeltaConfig | None = None
    external_command: str | None = None
    max_samples: int | None = None
    use_cache: bool = True
    dump_unfolding: bool = False

    def solver_config(self) -> DeltaConfig:
        if self.solver is not None:
            return self.solver
        return DeltaConfig(delta=self.delta)


class VerdictCache:
    """Exact-value verdict cache with atomic get-or-record semantics."""

    def __init__(self):
        self._data: dict[tuple[float, ...], bool] = {}
        self._lock = threading.Lock()
        self.hits = 0

    def lookup(self, key: tuple[float, ...]) -> bool | None:
        with self._lock:
            found = self._data.get(key)
            if found is not None:
                self.hits += 1
            return found

    def record(self, key: tuple[float, ...], verdict: bool) -> None:
        with self._lock:
            self._data[key] = verdict

    def __len__(self) -> int:
        return len(self._data)


@dataclass
class RunReport:
    spec: TestSpecAst
    outcome: stats.Outcome
    sat_samples: int
    total_samples: int
    total_time_s: float
    cache_hits: int
    solver_calls: int
    budget_exhausted: int
    rejected_samples: int
    seed: int
    inconclusive: bool = False
    config: RunConfig | None = None

    @property
    def avg_time_s(self) -> float:
        if self.total_samples == 0:
            return 0.0
        return self.total_time_s / self.total_samples

    @property
    def est_p(self) -> float | None:
        if isinstance(self.outcome, stats.Estimate):
            return self.outcome.point
        return None

    @property
    def decision(self) -> str | None:
        if isinstance(self.outcome, stats.Decided):
            return self.outcome.hypothesis
        if self.inconclusive:
            return "inconclusive"
        return None


@dataclass
class _SampleOutcome:
    index: int
    verdict: bool | None      # None when the sample was rejected
    budget_hit: bool = False
    solver_called: bool = False


def check_sample(model: HybridModel, sample: dict[str, float],
                 cfg: RunConfig, counters: dict | None = None) -> bool:
    """Decide whether the sampled automaton reaches a goal within depth k.

    Depths 0..k are all explored (bounded reachability in at most k jumps);
    the first delta-sat path short-circuits. A budget-exhausted solver
    answer counts as reachable.
    """
    concrete = instantiate(model, sample)
    solver_cfg = cfg.solver_config()
    query = ReachQuery(cfg.k, max(concrete.time_bound, 1e-9), cfg.delta)
    budget_hit = False
    for depth in range(cfg.k + 1):
        for path in enumerate_paths(concrete, depth):
            verdict = _solve_path(concrete, path, query, solver_cfg, cfg)
            if isinstance(verdict, DeltaSat):
                return True
            if isinstance(verdict, BudgetExhausted):
                budget_hit = True
    if budget_hit:
        if counters is not None:
            counters["budget_exhausted"] = counters.get("budget_exhausted", 0) + 1
        return True
    return False


def _solve_path(concrete: ConcreteModel, path, query: ReachQuery,
                solver_cfg: DeltaConfig, cfg: RunConfig) -> Verdict:
    if cfg.external_command:
        return solve_external(concrete, query.k, query.delta,
                              cfg.external_command)
    problem = unfold(concrete, path, query)
    if cfg.dump_unfolding:
        import sys
        print(problem.dump(), file=sys.stderr)
    return icp_solve(problem, solver_cfg)


def run(model: HybridModel, spec: TestSpecAst, cfg: RunConfig,
        seed_salt: tuple[int, ...] = ()) -> RunReport:
    """One full statistical run of ``spec`` against ``model``."""
    model = desugar_pha(model)
    rvs = extract_rvs(model)
    cache = VerdictCache() if cfg.use_cache else None

    started = time.perf_counter()
    counters: dict[str, int] = {"budget_exhausted": 0, "solver_calls": 0}

    if cfg.workers > 1:
        state, outcome, total, succ, rejected = _run_parallel(
            model, rvs, spec, cfg, cache, counters, seed_salt)
    else:
        state, outcome, total, succ, rejected = _run_sequential(
            model, rvs, spec, cfg, cache, counters, seed_salt)

    elapsed = time.perf_counter() - started
    inconclusive = isinstance(outcome, stats.Continue)
    return RunReport(
        spec=spec, outcome=outcome, sat_samples=succ, total_samples=total,
        total_time_s=elapsed, cache_hits=cache.hits if cache else 0,
        solver_calls=counters["solver_calls"],
        budget_exhausted=counters["budget_exhausted"],
        rejected_samples=rejected, seed=cfg.seed, inconclusive=inconclusive,
        config=cfg)


def _evaluate_index(model, rvs, cfg: RunConfig, index: int,
                    cache: VerdictCache | None, counters: dict,
                    lock: threading.Lock | None,
                    seed_salt: tuple[int, ...]) -> _SampleOutcome:
    stream = sampler.stream_for(cfg.seed, index, salt=seed_salt)
    try:
        sample = sampler.sample_all(rvs, model, stream)
    except ProbabilityValidationError:
        return _SampleOutcome(index, None)
    key = tuple(sample[rv.name] for rv in rvs)
    if cache is not None:
        hit = cache.lookup(key)
        if hit is not None:
            return _SampleOutcome(index, hit)
    local: dict[str, int] = {}
    try:
        verdict = check_sample(model, sample, cfg, local)
    except ProbabilityValidationError:
        return _SampleOutcome(index, None)
    if cache is not None:
        cache.record(key, verdict)
    budget = local.get("budget_exhausted", 0) > 0
    if lock is not None:
        with lock:
            counters["solver_calls"] += 1
            counters["budget_exhausted"] += 1 if budget else 0
    else:
        counters["solver_calls"] += 1
        counters["budget_exhausted"] += 1 if budget else 0
    return _SampleOutcome(index, verdict, budget, True)


def _fold(state, outcome, result: _SampleOutcome, totals: dict):
    if result.verdict is None:
        totals["rejected"] += 1
        return state, outcome
    totals["n"] += 1
    totals["succ"] += 1 if result.verdict else 0
    return stats.update(state, result.verdict)


def _run_sequential(model, rvs, spec, cfg, cache, counters, seed_salt):
    state = stats.init(spec)
    outcome: stats.Outcome = stats.CONTINUE
    totals = {"n": 0, "succ": 0, "rejected": 0}
    index = 0
    while isinstance(outcome, stats.Continue):
        if cfg.max_samples is not None and totals["n"] >= cfg.max_samples:
            break
        result = _evaluate_index(model, rvs, cfg, index, cache, counters,
                                 None, seed_salt)
        index += 1
        state, outcome = _fold(state, outcome, result, totals)
    return state, outcome, totals["n"], totals["succ"], totals["rejected"]


def _run_parallel(model, rvs, spec, cfg, cache, counters, seed_salt):
    """Worker-pool mode: per-index streams keep the drawn samples identical
    to the sequential mode; verdicts fold in completion order.

    For fixed-sample-size tests the dispatcher caps the index range at the
    known target, so the folded index set matches the sequential run exactly
    (only the fold order differs)."""
    state = stats.init(spec)
    outcome: stats.Outcome = stats.CONTINUE
    totals = {"n": 0, "succ": 0, "rejected": 0}
    lock = threading.Lock()
    next_index = 0
    window = max(2 * cfg.workers, 4)
    target = state.target_n if state.target_n > 0 else None

    def dispatch_cap() -> int | None:
        caps = []
        if target is not None:
            caps.append(target + totals["rejected"])
        if cfg.max_samples is not None:
            caps.append(cfg.max_samples + totals["rejected"])
        return min(caps) if caps else None

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        pending = set()
        while True:
            cap = dispatch_cap()
            while (len(pending) < window
                   and isinstance(outcome, stats.Continue)
                   and (cap is None or next_index < cap)):
                pending.add(pool.submit(_evaluate_index, model, rvs, cfg,
                                        next_index, cache, counters, lock,
                                        seed_salt))
                next_index += 1
                cap = dispatch_cap()
            if not pending:
                break
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                result = fut.result()
                if not isinstance(outcome, stats.Continue):
                    continue  # test already stopped; abandon the rest
                if (cfg.max_samples is not None
                        and totals["n"] >= cfg.max_samples):
                    continue
                state, outcome = _fold(state, outcome, result, totals)
            if not isinstance(outcome, stats.Continue):
                for fut in pending:
                    fut.cancel()
                break
    return state, outcome, totals["n"], totals["succ"], totals["rejected"]

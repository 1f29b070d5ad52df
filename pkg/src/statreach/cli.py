"""Command-line front end.

    statreach run <options_file> <model_file> [--k K] [--delta D] ...

Each line of the options file is one test specification; every spec runs
independently against the model and emits one report record. Exit codes:
0 success, 1 usage error, 2 parse error, 3 run error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import engine, model as semantics, stats
from .dsl import DslError, NsamSpec, SourceText, parse_model, parse_test_options
from .sampler import DEFAULT_SEED
from .solver import DeltaConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_RUN = 3

TSV_COLUMNS = ["spec", "decision", "est_p", "interval_lo", "interval_hi",
               "sat_samples", "total_samples", "avg_time_s", "total_time_s",
               "cache_hits", "budget_exhausted", "rejected_samples", "seed"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statreach",
                     description="Statistical bounded reachability checking "
                                 "for stochastic hybrid systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run every test spec in the options "
                                     "file against a model")
    run.add_argument("options_file", help="statistical test options, one "
                                          "spec per line")
    run.add_argument("model_file", help="model file (.pdrh)")
    run.add_argument("--k", type=int, default=0,
                     help="unfolding depth (default 0)")
    run.add_argument("--delta", type=float, default=1e-3,
                     help="precision of the reachability decision "
                          "(default 0.001)")
    run.add_argument("--seed", type=int, default=DEFAULT_SEED,
                     help=f"sampling seed (default {DEFAULT_SEED})")
    run.add_argument("--parallel", nargs="?", type=int, const=4, default=None,
                     metavar="WORKERS",
                     help="worker-pool mode (default 4 workers when the "
                          "flag is given without a value)")
    run.add_argument("--external-solver", default=None, metavar="COMMAND",
                     help="delegate per-sample decisions to an external "
                          "command invoked as COMMAND <file> <k> <delta>")
    run.add_argument("--format", choices=("text", "tsv", "json"),
                     default="text")
    run.add_argument("--dump-unfolding", action="store_true",
                     help="print each unfolded constraint system to stderr")
    run.add_argument("--max-samples", type=int, default=None,
                     help="abort a spec after this many samples and report "
                          "it inconclusive")
    run.add_argument("--no-cache", action="store_true",
                     help="disable the per-sample verdict cache")
    run.add_argument("--nsam-confidence", type=float, default=0.95,
                     help="confidence for the direct-sampling interval "
                          "(default 0.95)")
    return parser


def _validate(args) -> str | None:
    if args.k < 0:
        return "--k must be >= 0"
    if args.delta <= 0:
        return "--delta must be > 0"
    if args.parallel is not None and args.parallel < 1:
        return "--parallel takes a positive worker count"
    if args.max_samples is not None and args.max_samples < 1:
        return "--max-samples must be >= 1"
    if not 0.0 < args.nsam_confidence < 1.0:
        return "--nsam-confidence must be in (0, 1)"
    return None


def _record(report: engine.RunReport, spec_text: str) -> dict:
    outcome = report.outcome
    interval = None
    est_p = None
    if isinstance(outcome, stats.Estimate):
        est_p = outcome.point
        interval = [outcome.interval[0], outcome.interval[1]]
    return {
        "spec": spec_text,
        "decision": report.decision,
        "est_p": est_p,
        "interval": interval,
        "sat_samples": report.sat_samples,
        "total_samples": report.total_samples,
        "avg_time_s": round(report.avg_time_s, 6),
        "total_time_s": round(report.total_time_s, 6),
        "cache_hits": report.cache_hits,
        "budget_exhausted": report.budget_exhausted,
        "rejected_samples": report.rejected_samples,
        "seed": report.seed,
    }


def _emit(records: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(records, out, indent=2)
        out.write("\n")
        return
    if fmt == "tsv":
        out.write("\t".join(TSV_COLUMNS) + "\n")
        for rec in records:
            row = [rec["spec"], rec["decision"], rec["est_p"],
                   rec["interval"][0] if rec["interval"] else None,
                   rec["interval"][1] if rec["interval"] else None,
                   rec["sat_samples"], rec["total_samples"],
                   rec["avg_time_s"], rec["total_time_s"], rec["cache_hits"],
                   rec["budget_exhausted"], rec["rejected_samples"],
                   rec["seed"]]
            out.write("\t".join("" if v is None else str(v) for v in row)
                      + "\n")
        return
    for rec in records:
        out.write(f"spec: {rec['spec']}\n")
        if rec["est_p"] is not None:
            lo, hi = rec["interval"]
            out.write(f"  est_p = {rec['est_p']:.6g}  "
                      f"interval = [{lo:.6g}, {hi:.6g}]\n")
        else:
            out.write(f"  decision = {rec['decision']}\n")
        out.write(f"  sat_samples = {rec['sat_samples']}  "
                  f"total_samples = {rec['total_samples']}  "
                  f"rejected = {rec['rejected_samples']}\n")
        out.write(f"  avg_time = {rec['avg_time_s']:.4f}s  "
                  f"total_time = {rec['total_time_s']:.4f}s  "
                  f"cache_hits = {rec['cache_hits']}  "
                  f"budget_exhausted = {rec['budget_exhausted']}\n")
        out.write(f"  seed = {rec['seed']}\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    usage_error = _validate(args)
    if usage_error:
        print(f"error: {usage_error}", file=sys.stderr)
        return EXIT_USAGE

    try:
        options_src = SourceText.from_file(args.options_file)
        model_src = SourceText.from_file(args.model_file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        specs = parse_test_options(options_src)
        ast = parse_model(model_src)
    except DslError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if not specs:
        print("error: the options file contains no test specifications",
              file=sys.stderr)
        return EXIT_PARSE

    hybrid = semantics.from_ast(ast)
    diagnostics = semantics.validate(hybrid)
    if diagnostics:
        for d in diagnostics:
            print(f"error: model: {d}", file=sys.stderr)
        return EXIT_PARSE

    cfg = engine.RunConfig(
        k=args.k, delta=args.delta, seed=args.seed,
        workers=args.parallel or 1,
        solver=DeltaConfig(delta=args.delta),
        external_command=args.external_solver,
        max_samples=args.max_samples,
        use_cache=not args.no_cache,
        dump_unfolding=args.dump_unfolding,
    )
    warning = cfg.solver_config().warn_if_coarse()
    if warning:
        print(f"warning: {warning}", file=sys.stderr)

    records = []
    try:
        for spec_index, spec in enumerate(specs):
            if isinstance(spec, NsamSpec):
                spec = replace(spec, confidence=args.nsam_confidence)
            # Each spec runs independently on a spec-index-salted stream.
            report = engine.run(hybrid, spec, cfg, seed_salt=(spec_index,))
            records.append(_record(report, _spec_text(spec)))
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: run failed: {exc}", file=sys.stderr)
        return EXIT_RUN

    _emit(records, args.format, sys.stdout)
    return EXIT_OK


def _spec_text(spec) -> str:
    name = type(spec).__name__.removesuffix("Spec").upper()
    if name == "LAI":
        name = "Lai"
    values = dict(vars(spec))
    values.pop("confidence", None)  # not part of the option grammar
    fields = [f"{v:g}" if isinstance(v, float) else str(v)
              for v in values.values()]
    return " ".join([name] + fields)


if __name__ == "__main__":
    sys.exit(main())

"""Parser for statistical-test option files: one test specification per line.

Lines beginning with "#" or "//" are comments. Test names are matched
case-insensitively.
"""

from __future__ import annotations

from .ast import (BestSpec, BftiSpec, BftSpec, ChbSpec, LaiSpec, NsamSpec,
                  SourceText, SprtSpec, TestSpecAst)
from .errors import (ParameterRangeError, TestArityError,
                     UnknownTestNameError)

_ARITY = {"lai": 2, "bft": 4, "bfti": 5, "sprt": 3, "chb": 2, "best": 4,
          "nsam": 1}


def parse_test_options(src: SourceText) -> list[TestSpecAst]:
    specs: list[TestSpecAst] = []
    for lineno, raw in enumerate(src.content.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("//"):
            continue
        specs.append(_parse_line(line, lineno, src.origin))
    return specs


def _parse_line(line: str, lineno: int, origin: str) -> TestSpecAst:
    parts = line.split()
    name = parts[0].lower()
    if name not in _ARITY:
        raise UnknownTestNameError(f"unknown test name '{parts[0]}'", lineno,
                                   1, origin)
    args = parts[1:]
    if len(args) != _ARITY[name]:
        raise TestArityError(
            f"'{parts[0]}' takes {_ARITY[name]} parameter(s), got {len(args)}",
            lineno, 1, origin)

    def num(i: int) -> float:
        try:
            return float(args[i])
        except ValueError:
            raise ParameterRangeError(
                f"parameter {i + 1} of '{parts[0]}' is not a number",
                lineno, 1, origin) from None

    def check(ok: bool, msg: str):
        if not ok:
            raise ParameterRangeError(f"'{parts[0]}': {msg}", lineno, 1,
                                      origin)

    if name == "lai":
        theta, cost = num(0), num(1)
        check(0 < theta < 1, "theta must be in (0, 1)")
        check(cost > 0, "cost per sample must be > 0")
        return LaiSpec(theta, cost)
    if name == "bft":
        theta, ratio, alpha, beta = num(0), num(1), num(2), num(3)
        check(0 < theta < 1, "theta must be in (0, 1)")
        check(ratio > 1, "T must be > 1")
        check(alpha > 0 and beta > 0, "prior parameters must be > 0")
        return BftSpec(theta, ratio, alpha, beta)
    if name == "bfti":
        theta, ratio, alpha, beta, delta = (num(0), num(1), num(2), num(3),
                                            num(4))
        check(0 < theta < 1, "theta must be in (0, 1)")
        check(ratio > 1, "T must be > 1")
        check(alpha > 0 and beta > 0, "prior parameters must be > 0")
        check(0 < theta - delta and theta + delta < 1,
              "indifference region must stay inside (0, 1)")
        return BftiSpec(theta, ratio, alpha, beta, delta)
    if name == "sprt":
        theta, ratio, delta = num(0), num(1), num(2)
        check(0 < theta < 1, "theta must be in (0, 1)")
        check(ratio > 1, "T must be > 1")
        check(0 < theta - delta and theta + delta < 1,
              "theta +/- delta must stay inside (0, 1)")
        return SprtSpec(theta, ratio, delta)
    if name == "chb":
        delta1, coverage = num(0), num(1)
        check(0 < delta1 < 1, "precision must be in (0, 1)")
        check(0 < coverage < 1, "coverage must be in (0, 1)")
        return ChbSpec(delta1, coverage)
    if name == "best":
        delta1, coverage, alpha, beta = num(0), num(1), num(2), num(3)
        check(0 < delta1 < 1, "precision must be in (0, 1)")
        check(0 < coverage < 1, "coverage must be in (0, 1)")
        check(alpha > 0 and beta > 0, "prior parameters must be > 0")
        return BestSpec(delta1, coverage, alpha, beta)
    # nsam
    n = num(0)
    check(n == int(n) and n >= 1, "sample count must be an integer >= 1")
    return NsamSpec(int(n))

"""C-style "#define NAME BODY" constant/macro expansion.

Each directive line is blanked (not deleted) so diagnostic line numbers in
the expanded text still match the original file. Macro bodies are resolved
transitively up front, then every whole-token occurrence of each name is
replaced in a single pass over the remaining text.
"""

from __future__ import annotations

import re

from .ast import SourceText
from .errors import CyclicMacroError, ParseError, RedefinedMacroError

_DEFINE_RE = re.compile(r"^\s*#\s*define\s+(\w+)(?:\s+(.*?))?\s*$")
_NAME_RE = re.compile(r"[A-Za-z_]\w*")


def extract_macros(src: SourceText) -> tuple[SourceText, dict[str, str]]:
    """Strip #define lines and return (stripped source, resolved macro table)."""
    macros: dict[str, str] = {}
    out_lines: list[str] = []
    for lineno, raw in enumerate(src.content.splitlines(), start=1):
        m = _DEFINE_RE.match(raw)
        if m is None:
            if raw.lstrip().startswith("#"):
                raise ParseError("unknown preprocessor directive", lineno, 1,
                                 src.origin)
            out_lines.append(raw)
            continue
        name, body = m.group(1), m.group(2) or ""
        if name in macros:
            raise RedefinedMacroError(f"macro '{name}' redefined", lineno, 1,
                                      src.origin)
        macros[name] = body.strip()
        out_lines.append("")
    resolved = _resolve(macros, src.origin)
    return SourceText("\n".join(out_lines), src.origin), resolved


def _resolve(macros: dict[str, str], origin: str) -> dict[str, str]:
    """Expand macro references inside macro bodies; reject cycles."""
    resolved: dict[str, str] = {}
    in_progress: set[str] = set()

    def expand(name: str) -> str:
        if name in resolved:
            return resolved[name]
        if name in in_progress:
            raise CyclicMacroError(f"cyclic macro definition involving '{name}'",
                                   origin=origin)
        in_progress.add(name)
        body = substitute(macros[name],
                           {k: expand(k) for k in _referenced(macros[name], macros)})
        in_progress.discard(name)
        resolved[name] = body
        return body

    for name in macros:
        expand(name)
    return resolved


def _referenced(body: str, macros: dict[str, str]) -> list[str]:
    return [t for t in _NAME_RE.findall(body) if t in macros]


def substitute(text: str, table: dict[str, str]) -> str:
    if not table:
        return text

    def repl(m: re.Match) -> str:
        return table.get(m.group(0), m.group(0))

    return _NAME_RE.sub(repl, text)


def preprocess(src: SourceText) -> SourceText:
    """Expand all macros in ``src``; idempotent on macro-free input."""
    stripped, macros = extract_macros(src)
    return SourceText(substitute(stripped.content, macros), src.origin)

"""Tokenizer for model files.

Produces a flat token stream with line/column positions. "//" starts a line
comment. An identifier immediately followed by an apostrophe lexes as a
primed identifier (used in jump resets).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .errors import ParseError


class Tok(Enum):
    NUMBER = auto()
    IDENT = auto()
    PRIMED_IDENT = auto()
    LPAREN = auto()
    RPAREN = auto()
    LBRACKET = auto()
    RBRACKET = auto()
    LBRACE = auto()
    RBRACE = auto()
    COMMA = auto()
    SEMI = auto()
    COLON = auto()
    AT = auto()
    ARROW = auto()  # ==>
    PLUS = auto()
    MINUS = auto()
    STAR = auto()
    SLASH = auto()
    CARET = auto()
    LT = auto()
    LE = auto()
    EQ = auto()
    GE = auto()
    GT = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    kind: Tok
    value: object
    line: int
    column: int

    def text(self) -> str:
        return str(self.value)


_SINGLE = {
    "(": Tok.LPAREN, ")": Tok.RPAREN,
    "[": Tok.LBRACKET, "]": Tok.RBRACKET,
    "{": Tok.LBRACE, "}": Tok.RBRACE,
    ",": Tok.COMMA, ";": Tok.SEMI, ":": Tok.COLON, "@": Tok.AT,
    "+": Tok.PLUS, "-": Tok.MINUS, "*": Tok.STAR, "/": Tok.SLASH,
    "^": Tok.CARET,
}


def tokenize(text: str, origin: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)

    def error(msg: str, ln: int, cl: int):
        raise ParseError(msg, ln, cl, origin)

    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            pos += 1
            col += 1
            continue
        if ch == "/" and pos + 1 < n and text[pos + 1] == "/":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue

        start_line, start_col = line, col

        if ch.isdigit() or (ch == "." and pos + 1 < n and text[pos + 1].isdigit()):
            j = pos
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[pos:j]
            try:
                value = float(lexeme)
            except ValueError:
                error(f"malformed number '{lexeme}'", start_line, start_col)
            tokens.append(Token(Tok.NUMBER, value, start_line, start_col))
            col += j - pos
            pos = j
            continue

        if ch.isalpha() or ch == "_":
            j = pos
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[pos:j]
            kind = Tok.IDENT
            if j < n and text[j] == "'":
                kind = Tok.PRIMED_IDENT
                j += 1
            tokens.append(Token(kind, name, start_line, start_col))
            col += j - pos
            pos = j
            continue

        if ch == "=":
            if text.startswith("==>", pos):
                tokens.append(Token(Tok.ARROW, "==>", start_line, start_col))
                pos += 3
                col += 3
            else:
                tokens.append(Token(Tok.EQ, "=", start_line, start_col))
                pos += 1
                col += 1
            continue
        if ch == "<":
            if text.startswith("<=", pos):
                tokens.append(Token(Tok.LE, "<=", start_line, start_col))
                pos += 2
                col += 2
            else:
                tokens.append(Token(Tok.LT, "<", start_line, start_col))
                pos += 1
                col += 1
            continue
        if ch == ">":
            if text.startswith(">=", pos):
                tokens.append(Token(Tok.GE, ">=", start_line, start_col))
                pos += 2
                col += 2
            else:
                tokens.append(Token(Tok.GT, ">", start_line, start_col))
                pos += 1
                col += 1
            continue

        kind = _SINGLE.get(ch)
        if kind is None:
            error(f"unexpected character {ch!r}", start_line, start_col)
        tokens.append(Token(kind, ch, start_line, start_col))
        pos += 1
        col += 1

    tokens.append(Token(Tok.EOF, "<eof>", line, col))
    return tokens

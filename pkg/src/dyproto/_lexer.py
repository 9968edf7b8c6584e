"""Tokenizer shared by the term, formula and protocol parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass


class SyntaxErrorAt(Exception):
    """A parse failure at a known source position."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<fresh>~[A-Za-z_][A-Za-z0-9_]*)
  | (?P<agent>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<public>'[A-Za-z0-9_]+')
  | (?P<time>\#[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>[0-9]+)
  | (?P<op>==>|->|[(),:\[\].&|@<=/;!])
    """,
    re.VERBOSE,
)


def tokenize(text: str, line: int = 1, col: int = 1) -> list[Token]:
    """Split ``text`` into tokens; positions are 1-based and offset by ``line``/``col``."""
    text = text.replace("→", "->")
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SyntaxErrorAt(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                if kind == "public":
                    value = value[1:-1]
                elif kind in ("fresh", "agent"):
                    value = value[1:]
                tokens.append(Token(kind, value, line, col))
            col += len(m.group())
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, value: str, kind: str | None = None, offset: int = 0) -> bool:
        tok = self.peek(offset)
        if kind is not None and tok.kind != kind:
            return False
        return tok.value == value and tok.kind in ("op", "ident")

    def accept(self, value: str) -> Token | None:
        if self.at(value):
            return self.next()
        return None

    def expect(self, value: str) -> Token:
        tok = self.peek()
        if not self.at(value):
            shown = tok.value or "end of input"
            raise SyntaxErrorAt(tok.line, tok.col, f"expected {value!r}, found {shown!r}")
        return self.next()

    def error(self, message: str, tok: Token | None = None) -> SyntaxErrorAt:
        tok = tok or self.peek()
        return SyntaxErrorAt(tok.line, tok.col, message)

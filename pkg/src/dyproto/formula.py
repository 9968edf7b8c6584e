"""Temporal properties over traces: syntax tree, parser and printer.

The concrete syntax follows the usual lemma style::

    not Ex party mess #t1 #t2 . FreshTerm(party, mess)@#t1 & FreshTerm(party, mess)@#t2 & #t1 < #t2

Precedence from loosest to tightest: ``==>`` (right associative), ``|``,
``&``, then ``not``, quantifiers and atoms.  A quantifier body extends as far
to the right as possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from ._lexer import SyntaxErrorAt, TokenStream, tokenize
from .term import (
    SIGNATURE,
    Term,
    TermParser,
    Var,
    format_term,
    variables,
)

CLAIM_LABELS = frozenset({"FreshTerm", "Secret", "Authentic", "Send", "Recv", "Create", "Commit", "Running"})


@dataclass(frozen=True)
class Claim:
    label: str
    args: tuple[Term, ...]
    time: str


@dataclass(frozen=True)
class Knows:
    """The intruder can derive ``term`` at timepoint ``time``."""

    term: Term
    time: str


@dataclass(frozen=True)
class Before:
    left: str
    right: str


@dataclass(frozen=True)
class TimeEq:
    left: str
    right: str


@dataclass(frozen=True)
class Equal:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    variables: tuple[str, ...]  # timepoint variables keep their leading '#'
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    variables: tuple[str, ...]
    body: "Formula"


Formula = Union[Claim, Knows, Before, TimeEq, Equal, Not, And, Or, Implies, Exists, Forall]

TEMPLATES = {
    "freshness": "not Ex party mess #t1 #t2 . FreshTerm(party, mess)@#t1 & FreshTerm(party, mess)@#t2 & #t1 < #t2",
    "secrecy": "not Ex m #i #j . Secret(m)@#i & K(m)@#j",
    "authenticity": "All b m #i . Authentic(b, m)@#i ==> Ex #j . Send(b, m)@#j & #j < #i",
    "aliveness": "All a b #i . Commit(a, b)@#i ==> Ex #j . Create(b)@#j",
}


class FormulaError(ValueError):
    """Raised when a formula cannot be evaluated (e.g. an unknown claim label)."""


class FormulaSyntaxError(ValueError):
    def __init__(self, diagnostics: list[tuple[int, int, str]]):
        super().__init__("; ".join(f"{ln}:{col}: {msg}" for ln, col, msg in diagnostics))
        self.diagnostics = diagnostics


def claim_labels(f: Formula) -> set[str]:
    return {c.label for c in walk(f) if isinstance(c, Claim)}


def walk(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from walk(f.body)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from walk(p)
    elif isinstance(f, Implies):
        yield from walk(f.left)
        yield from walk(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from walk(f.body)


def bound_variables(f: Formula) -> tuple[list[str], list[str]]:
    """Message and timepoint variables introduced by quantifiers, in order."""
    msgs: list[str] = []
    times: list[str] = []
    for node in walk(f):
        if isinstance(node, (Exists, Forall)):
            for v in node.variables:
                (times if v.startswith("#") else msgs).append(v)
    return msgs, times


# ---------------------------------------------------------------------------
# parsing


def parse_formula(text: str, labels: Iterable[str] | None = None, line: int = 1, col: int = 1,
                  functions: dict[str, int] | None = None) -> Formula:
    """Parse a closed formula.

    Raises ``FormulaSyntaxError`` carrying positioned diagnostics for syntax
    errors, unbound variables and (when ``labels`` is given) claim labels that
    are not in ``labels``.
    """
    try:
        ts = TokenStream(tokenize(text, line, col))
    except SyntaxErrorAt as e:
        raise FormulaSyntaxError([(e.line, e.col, e.message)]) from None
    parser = _FormulaParser(ts, functions or {})
    try:
        f = parser.implication()
        if ts.peek().kind != "eof":
            raise ts.error(f"unexpected {ts.peek().value!r}")
    except SyntaxErrorAt as e:
        raise FormulaSyntaxError([(e.line, e.col, e.message)]) from None
    diags = parser.diagnostics
    allowed = set(labels) if labels is not None else None
    for tok, label in parser.claim_tokens:
        if allowed is not None and label not in allowed:
            diags.append((tok.line, tok.col, f"unknown claim label {label!r}"))
    if diags:
        raise FormulaSyntaxError(diags)
    return f


class _FormulaParser:
    def __init__(self, ts: TokenStream, functions: dict[str, int]):
        self.ts = ts
        self.scope: list[str] = []
        self.functions = functions
        self.diagnostics: list[tuple[int, int, str]] = []
        self.claim_tokens: list = []
        self.terms = TermParser(ts, self._resolve, functions)

    def _resolve(self, ident: str, line: int, col: int) -> Term:
        if ident not in self.scope:
            self.diagnostics.append((line, col, f"unbound variable {ident!r}"))
        return Var(ident)

    def _time(self):
        tok = self.ts.next()
        if tok.kind != "time":
            raise SyntaxErrorAt(tok.line, tok.col, f"expected a timepoint variable, found {tok.value!r}")
        name = "#" + tok.value[1:]
        if name not in self.scope:
            self.diagnostics.append((tok.line, tok.col, f"unbound variable {name!r}"))
        return name

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.ts.accept("==>"):
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.ts.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.ts.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        ts = self.ts
        if ts.accept("not") or ts.accept("!"):
            return Not(self.unary())
        if ts.at("Ex", "ident") or ts.at("All", "ident"):
            kind = ts.next().value
            names: list[str] = []
            while ts.peek().kind in ("ident", "time"):
                tok = ts.next()
                names.append("#" + tok.value[1:] if tok.kind == "time" else tok.value)
            if not names:
                raise ts.error("quantifier needs at least one variable")
            ts.expect(".")
            self.scope.extend(names)
            body = self.implication()
            del self.scope[len(self.scope) - len(names):]
            return (Exists if kind == "Ex" else Forall)(tuple(names), body)
        if ts.at("("):
            ts.next()
            inner = self.implication()
            ts.expect(")")
            return inner
        tok = ts.peek()
        if tok.kind == "time":
            left = self._time()
            op = ts.next()
            if op.value not in ("<", "="):
                raise SyntaxErrorAt(op.line, op.col, f"expected '<' or '=', found {op.value!r}")
            right = self._time()
            return Before(left, right) if op.value == "<" else TimeEq(left, right)
        if tok.kind == "ident" and ts.at("(", offset=1) and tok.value not in SIGNATURE and tok.value not in self.functions:
            ts.next()
            ts.next()
            args: list[Term] = []
            if not ts.at(")"):
                args.append(self.terms.term())
                while ts.accept(","):
                    args.append(self.terms.term())
            ts.expect(")")
            ts.expect("@")
            time = self._time()
            if tok.value == "K":
                if len(args) != 1:
                    raise SyntaxErrorAt(tok.line, tok.col, "K expects exactly one argument")
                return Knows(args[0], time)
            self.claim_tokens.append((tok, tok.value))
            return Claim(tok.value, tuple(args), time)
        left_term = self.terms.term()
        ts.expect("=")
        return Equal(left_term, self.terms.term())


# ---------------------------------------------------------------------------
# printing

_PREC = {Implies: 1, Or: 2, And: 3}


def format_formula(f: Formula) -> str:
    return _fmt(f)


def _fmt(f: Formula) -> str:
    if isinstance(f, Claim):
        return f"{f.label}(" + ", ".join(format_term(a) for a in f.args) + f")@{f.time}"
    if isinstance(f, Knows):
        return f"K({format_term(f.term)})@{f.time}"
    if isinstance(f, Before):
        return f"{f.left} < {f.right}"
    if isinstance(f, TimeEq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Equal):
        return f"{format_term(f.left)} = {format_term(f.right)}"
    if isinstance(f, Not):
        inner = _fmt(f.body)
        if isinstance(f.body, (And, Or, Implies, Equal, Before, TimeEq)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(f, (Exists, Forall)):
        kw = "Ex" if isinstance(f, Exists) else "All"
        return f"{kw} {' '.join(f.variables)} . {_fmt(f.body)}"
    if isinstance(f, (And, Or)):
        sep = " & " if isinstance(f, And) else " | "
        return sep.join(_operand(p, f, last=(i == len(f.parts) - 1)) for i, p in enumerate(f.parts))
    if isinstance(f, Implies):
        left = _operand(f.left, f, last=False, same_ok=False)
        right = _operand(f.right, f, last=True)
        return f"{left} ==> {right}"
    raise TypeError(f"not a formula: {f!r}")


def _operand(child: Formula, parent: Formula, last: bool, same_ok: bool = False) -> str:
    text = _fmt(child)
    cprec = _PREC.get(type(child))
    pprec = _PREC[type(parent)]
    if cprec is not None:
        right_of_implies = isinstance(parent, Implies) and last
        if cprec < pprec or (cprec == pprec and not right_of_implies):
            return f"({text})"
        return text
    if not last and _ends_with_quantifier(child):
        # a trailing quantifier would swallow the rest of the chain
        return f"({text})"
    return text


def _ends_with_quantifier(f: Formula) -> bool:
    while isinstance(f, Not):
        f = f.body
    return isinstance(f, (Exists, Forall))


def free_term_variables(f: Formula) -> set[str]:
    """Message variables used in atoms (for sanity checks)."""
    out: set[str] = set()
    for node in walk(f):
        if isinstance(node, Claim):
            for a in node.args:
                out |= variables(a)
        elif isinstance(node, Knows):
            out |= variables(node.term)
        elif isinstance(node, Equal):
            out |= variables(node.left) | variables(node.right)
    return out


__all__ = [
    "And", "Before", "CLAIM_LABELS", "Claim", "Equal", "Exists", "Forall", "Formula", "FormulaError",
    "FormulaSyntaxError", "Implies", "Knows", "Not", "Or", "TEMPLATES", "TimeEq", "format_formula",
    "parse_formula",
]


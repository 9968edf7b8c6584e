"""Message terms and their canonical form modulo the built-in equational theories.

Terms are immutable and hashable.  ``normalize`` computes the canonical
representative of a term's equivalence class:

* xor is flattened, sorted, pairwise-cancelled and stripped of ``zero``;
* iterated exponentiation ``exp(exp(b, x), y)`` carries a sorted exponent chain;
* destructor redexes (``sdec``, ``adec``, ``fst``, ``snd``, ``extract``,
  ``verify``) are reduced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Union

from ._lexer import SyntaxErrorAt, TokenStream, tokenize


class MalformedTermError(ValueError):
    """Raised for arity violations and unknown function symbols."""


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    theory: str


SIGNATURE: dict[str, FunctionSymbol] = {
    s.name: s
    for s in [
        FunctionSymbol("pair", 2, "pairing"),
        FunctionSymbol("fst", 1, "pairing"),
        FunctionSymbol("snd", 1, "pairing"),
        FunctionSymbol("senc", 2, "symmetric-encryption"),
        FunctionSymbol("sdec", 2, "symmetric-encryption"),
        FunctionSymbol("aenc", 2, "asymmetric-encryption"),
        FunctionSymbol("adec", 2, "asymmetric-encryption"),
        FunctionSymbol("pk", 1, "public-key-derivation"),
        FunctionSymbol("sign", 2, "signature"),
        FunctionSymbol("verify", 3, "signature"),
        FunctionSymbol("extract", 1, "signature"),
        FunctionSymbol("h", 1, "hash"),
        FunctionSymbol("xor", 2, "xor"),
        FunctionSymbol("zero", 0, "xor"),
        FunctionSymbol("exp", 2, "exponentiation"),
        FunctionSymbol("g", 0, "exponentiation"),
    ]
}

# Result of a successful ``verify``; kept out of SIGNATURE so user syntax cannot shadow it.
TRUE_SYMBOL = FunctionSymbol("true", 0, "signature")

DESTRUCTORS = frozenset({"fst", "snd", "sdec", "adec", "verify", "extract"})
CONSTANT_NAMES = frozenset({"zero", "g", "true"})


@dataclass(frozen=True)
class PublicName:
    ident: str


@dataclass(frozen=True)
class AgentName:
    ident: str


@dataclass(frozen=True)
class FreshName:
    ident: str


@dataclass(frozen=True)
class Var:
    ident: str


@dataclass(frozen=True)
class App:
    sym: str
    args: tuple["Term", ...] = ()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.sym, self.args)))

    def __hash__(self) -> int:
        return self._hash


Term = Union[PublicName, AgentName, FreshName, Var, App]
Substitution = dict[str, Term]

ZERO = App("zero")
G = App("g")
TRUE = App("true")

_NAME_RANK = {PublicName: 0, AgentName: 1, FreshName: 2, Var: 3}


def pair(*items: Term) -> Term:
    """Right-nested pairing: ``pair(a, b, c) == pair(a, pair(b, c))``."""
    if len(items) < 2:
        raise MalformedTermError("pair needs at least two components")
    out = items[-1]
    for item in reversed(items[:-1]):
        out = App("pair", (item, out))
    return out


def xor(*items: Term) -> App:
    return App("xor", tuple(items))


def app(sym: str, *args: Term) -> App:
    return App(sym, tuple(args))


@lru_cache(maxsize=None)
def term_key(t: Term) -> tuple:
    """Total order key: head symbol name, arity, then arguments."""
    if isinstance(t, App):
        return (t.sym, len(t.args), 4, tuple(term_key(a) for a in t.args))
    return (t.ident, 0, _NAME_RANK[type(t)])


def check_arity(t: App, extra: Mapping[str, int] | None = None) -> None:
    if t.sym == "xor":
        if len(t.args) < 2:
            raise MalformedTermError(f"xor needs at least 2 arguments, got {len(t.args)}")
        return
    if t.sym in SIGNATURE:
        expected = SIGNATURE[t.sym].arity
    elif t.sym == "true":
        expected = 0
    elif extra is not None and t.sym in extra:
        expected = extra[t.sym]
    else:
        return
    if len(t.args) != expected:
        raise MalformedTermError(f"{t.sym} expects {expected} argument(s), got {len(t.args)}")


def normalize(t: Term) -> Term:
    if isinstance(t, App):
        return _normalize_app(t)
    return t


def exp_parts(t: Term) -> tuple[Term, tuple[Term, ...]]:
    """Split an exponentiation chain into (base, exponents); non-exp terms have none."""
    exps: list[Term] = []
    while isinstance(t, App) and t.sym == "exp":
        exps.append(t.args[1])
        t = t.args[0]
    return t, tuple(reversed(exps))


def build_exp(base: Term, exps: Iterable[Term]) -> Term:
    out = base
    for e in sorted(exps, key=term_key):
        out = App("exp", (out, e))
    return out


def xor_atoms(t: Term) -> tuple[Term, ...]:
    """Summands of a canonical term viewed as an xor-sum."""
    if isinstance(t, App):
        if t.sym == "xor":
            return t.args
        if t.sym == "zero":
            return ()
    return (t,)


def _xor_sum(items: Iterable[Term]) -> Term:
    parity: dict[Term, int] = {}
    for item in items:
        for atom in xor_atoms(item):
            parity[atom] = parity.get(atom, 0) ^ 1
    atoms = sorted((a for a, odd in parity.items() if odd), key=term_key)
    if not atoms:
        return ZERO
    if len(atoms) == 1:
        return atoms[0]
    return App("xor", tuple(atoms))


@lru_cache(maxsize=1 << 17)
def _normalize_app(t: App) -> Term:
    check_arity(t)
    args = tuple(normalize(a) for a in t.args)
    sym = t.sym
    if sym == "xor":
        return _xor_sum(args)
    if sym == "exp":
        base, exps = exp_parts(args[0])
        return build_exp(base, exps + (args[1],))
    first = args[0] if args else None
    if isinstance(first, App):
        if sym == "sdec" and first.sym == "senc" and first.args[1] == args[1]:
            return first.args[0]
        if sym == "adec" and first.sym == "aenc":
            key = first.args[1]
            if isinstance(key, App) and key.sym == "pk" and key.args[0] == args[1]:
                return first.args[0]
        if sym == "fst" and first.sym == "pair":
            return first.args[0]
        if sym == "snd" and first.sym == "pair":
            return first.args[1]
        if sym == "extract" and first.sym == "sign":
            return first.args[0]
        if sym == "verify" and first.sym == "sign":
            m, k = first.args
            pub = args[2]
            if args[1] == m and isinstance(pub, App) and pub.sym == "pk" and pub.args[0] == k:
                return TRUE
    return App(sym, args)


def equal_mod_theory(a: Term, b: Term) -> bool:
    return normalize(a) == normalize(b)


def variables(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Var):
            out.add(cur.ident)
        elif isinstance(cur, App):
            stack.extend(cur.args)
    return out


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, App):
        return all(is_ground(a) for a in t.args)
    return True


def substitute(t: Term, sigma: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return sigma.get(t.ident, t)
    if isinstance(t, App) and t.args:
        new = tuple(substitute(a, sigma) for a in t.args)
        if new != t.args:
            return App(t.sym, new)
    return t


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from iter_subterms(a)


def subterms(t: Term) -> set[Term]:
    """All syntactic subterms of the canonical form of ``t``, ``t`` included."""
    return set(iter_subterms(normalize(t)))


def replace_subterms(t: Term, mapping: Mapping[Term, Term]) -> Term:
    """Top-down replacement of whole subterms; exponent chains match on sub-multisets."""
    if t in mapping:
        return mapping[t]
    if isinstance(t, App) and t.sym == "exp":
        base, exps = exp_parts(normalize(t))
        for old, new in mapping.items():
            obase, oexps = exp_parts(normalize(old))
            if not oexps or obase != base:
                continue
            rest = list(exps)
            try:
                for e in oexps:
                    rest.remove(e)
            except ValueError:
                continue
            return build_exp(new, [replace_subterms(e, mapping) for e in rest])
    if isinstance(t, App) and t.args:
        return App(t.sym, tuple(replace_subterms(a, mapping) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# matching


def match_pattern(pattern: Term, subject: Term, partial: Mapping[str, Term] | None = None) -> Substitution | None:
    """Extend ``partial`` so that the instantiated pattern equals ``subject`` modulo the theory.

    Free and cryptographic constructors match syntactically on canonical forms.
    Xor positions match once all but one summand are known (the remaining
    summand is solved for); exponent positions match when either the base or
    a single exponent is the only unknown.  Anything else is rejected.
    """
    sigma: Substitution = dict(partial or {})
    work: list[tuple[Term, Term]] = [(pattern, normalize(subject))]
    deferred: list[tuple[Term, Term]] = []
    while True:
        while work:
            p, s = work.pop()
            p = normalize(substitute(p, sigma))
            if is_ground(p):
                if p != s:
                    return None
                continue
            if isinstance(p, Var):
                sigma[p.ident] = s
                continue
            assert isinstance(p, App)
            if p.sym in ("xor", "exp") or p.sym in DESTRUCTORS:
                deferred.append((p, s))
                continue
            if not isinstance(s, App) or s.sym != p.sym or len(s.args) != len(p.args):
                return None
            work.extend(reversed(list(zip(p.args, s.args))))
        if not deferred:
            return sigma
        progress = False
        remaining: list[tuple[Term, Term]] = []
        for p, s in deferred:
            p = normalize(substitute(p, sigma))
            step = _solve_theory_position(p, s)
            if step is None:
                remaining.append((p, s))
            elif step is False:
                return None
            else:
                work.extend(step)
                progress = True
        deferred = remaining
        if not progress:
            return None


def _solve_theory_position(p: Term, s: Term):
    """Reduce a deferred xor/exp/destructor position to plain sub-problems.

    Returns a list of (pattern, subject) pairs, ``False`` for a definite
    mismatch, or ``None`` when the position is still under-determined.
    """
    if is_ground(p):
        return [] if p == s else False
    if not isinstance(p, App):
        return [(p, s)]
    if p.sym == "xor":
        unknown = [a for a in p.args if not is_ground(a)]
        known = [a for a in p.args if is_ground(a)]
        if len(unknown) != 1:
            return None
        return [(unknown[0], _xor_sum([s, *known]))]
    if p.sym == "exp":
        base, exps = exp_parts(p)
        sbase, sexps = exp_parts(s)
        unknown = [e for e in exps if not is_ground(e)]
        known = [e for e in exps if is_ground(e)]
        rest = list(sexps)
        for e in known:
            if e not in rest:
                return False if is_ground(base) or isinstance(base, Var) else None
            rest.remove(e)
        if is_ground(base) and len(unknown) == 1:
            if base != sbase or len(rest) != 1:
                return False
            return [(unknown[0], rest[0])]
        if isinstance(base, Var) and not unknown:
            return [(base, build_exp(sbase, rest))]
        return None
    return None


# ---------------------------------------------------------------------------
# textual syntax

Resolver = Callable[[str, int, int], Term]


def default_resolver(ident: str, line: int, col: int) -> Term:
    return PublicName(ident)


def parse_term(
    text: str,
    resolve: Resolver = default_resolver,
    functions: Mapping[str, int] | None = None,
    *,
    payload: bool = False,
) -> Term:
    """Parse one term; with ``payload=True`` a top-level comma list becomes a tuple."""
    ts = TokenStream(tokenize(text))
    parser = TermParser(ts, resolve, functions)
    t = parser.payload() if payload else parser.term()
    if ts.peek().kind != "eof":
        raise ts.error(f"unexpected {ts.peek().value!r} after term")
    return t


class TermParser:
    def __init__(self, ts: TokenStream, resolve: Resolver, functions: Mapping[str, int] | None = None):
        self.ts = ts
        self.resolve = resolve
        self.functions = dict(functions or {})

    def payload(self) -> Term:
        items = [self.term()]
        while self.ts.accept(","):
            items.append(self.term())
        return items[0] if len(items) == 1 else pair(*items)

    def term(self) -> Term:
        items = [self.atom()]
        while self.ts.at("XOR", "ident"):
            self.ts.next()
            items.append(self.atom())
        return items[0] if len(items) == 1 else App("xor", tuple(items))

    def atom(self) -> Term:
        ts = self.ts
        tok = ts.next()
        if tok.kind == "fresh":
            return FreshName(tok.value)
        if tok.kind == "agent":
            return AgentName(tok.value)
        if tok.kind == "public":
            return PublicName(tok.value)
        if tok.kind == "op" and tok.value == "(":
            items = [self.term()]
            while ts.accept(","):
                items.append(self.term())
            ts.expect(")")
            return items[0] if len(items) == 1 else pair(*items)
        if tok.kind == "ident":
            if ts.at("("):
                ts.next()
                args: list[Term] = []
                if not ts.at(")"):
                    args.append(self.term())
                    while ts.accept(","):
                        args.append(self.term())
                ts.expect(")")
                return self._apply(tok, args)
            if tok.value in CONSTANT_NAMES:
                return App(tok.value)
            return self.resolve(tok.value, tok.line, tok.col)
        raise SyntaxErrorAt(tok.line, tok.col, f"expected a term, found {tok.value or 'end of input'!r}")

    def _apply(self, tok, args: list[Term]) -> Term:
        name = tok.value
        if name in SIGNATURE or name == "true":
            arity = 0 if name == "true" else SIGNATURE[name].arity
        elif name in self.functions:
            arity = self.functions[name]
        else:
            raise SyntaxErrorAt(tok.line, tok.col, f"unknown function symbol {name!r}")
        if name == "xor":
            if len(args) < 2:
                raise SyntaxErrorAt(tok.line, tok.col, "xor expects at least 2 arguments")
        elif len(args) != arity:
            raise SyntaxErrorAt(tok.line, tok.col, f"{name} expects {arity} argument(s), got {len(args)}")
        return App(name, tuple(args))


@lru_cache(maxsize=1 << 17)
def format_term(t: Term) -> str:
    if isinstance(t, PublicName):
        return f"'{t.ident}'"
    if isinstance(t, AgentName):
        return f"${t.ident}"
    if isinstance(t, FreshName):
        return f"~{t.ident}"
    if isinstance(t, Var):
        return t.ident
    if t.sym == "pair":
        return "(" + ", ".join(format_term(x) for x in _pair_items(t)) + ")"
    if t.sym == "xor":
        return " XOR ".join(
            f"({format_term(a)})" if isinstance(a, App) and a.sym == "xor" else format_term(a) for a in t.args
        )
    if not t.args:
        return t.sym
    return f"{t.sym}(" + ", ".join(format_term(a) for a in t.args) + ")"


def format_payload(t: Term) -> str:
    """Like ``format_term`` but a top-level tuple is written without parentheses."""
    if isinstance(t, App) and t.sym == "pair":
        return ", ".join(format_term(x) for x in _pair_items(t))
    return format_term(t)


def _pair_items(t: App) -> list[Term]:
    items = []
    cur: Term = t
    while isinstance(cur, App) and cur.sym == "pair":
        items.append(cur.args[0])
        cur = cur.args[1]
    items.append(cur)
    return items


def ground_term(text: str, functions: Mapping[str, int] | None = None) -> Term:
    """Parse a ground term as written in traces (bare identifiers are public names)."""
    t = parse_term(text, default_resolver, functions)
    if not is_ground(t):
        raise SyntaxErrorAt(1, 1, "trace terms must be ground")
    return t


__all__ = [
    "AgentName",
    "App",
    "FreshName",
    "FunctionSymbol",
    "G",
    "MalformedTermError",
    "PublicName",
    "SIGNATURE",
    "SyntaxErrorAt",
    "TRUE",
    "Term",
    "Var",
    "ZERO",
    "equal_mod_theory",
    "app",
    "format_term",
    "ground_term",
    "match_pattern",
    "normalize",
    "pair",
    "parse_term",
    "subterms",
    "substitute",
    "xor",
]

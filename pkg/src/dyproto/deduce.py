"""Dolev-Yao knowledge: analysis (decomposition) and synthesis (derivability).

Derivability works in two phases.  ``KnowledgeBase`` saturates its terms under
the decomposition rules once, at construction.  ``derivable`` then answers
goals by composition over the saturated set, with an xor layer that decides
membership of an xor-sum in the GF(2) span of known sums and individually
derivable summands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .term import (
    AgentName,
    App,
    DESTRUCTORS,
    PublicName,
    SIGNATURE,
    Term,
    build_exp,
    exp_parts,
    normalize,
    term_key,
    xor_atoms,
)

# Every built-in symbol except xor (handled linearly) is publicly applicable.
COMPOSABLE = frozenset(s for s in SIGNATURE if s != "xor") | DESTRUCTORS | {"true"}


@dataclass(frozen=True)
class Derivation:
    """Proof tree node; ``rule`` is analyzed-member, public, compose or xor-combine."""

    rule: str
    term: Term
    children: tuple["Derivation", ...] = ()

    def to_dict(self) -> dict:
        from .term import format_term

        out: dict = {"rule": self.rule, "term": format_term(self.term)}
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out


class KnowledgeBase:
    """An immutable set of canonical ground terms with its analysis closure."""

    def __init__(self, terms: Iterable[Term] = (), *, free_symbols: Iterable[str] = (), _seed=None):
        self.base: frozenset[Term] = frozenset(normalize(t) for t in terms)
        self.free_symbols = frozenset(free_symbols)
        self._cache: dict[Term, bool] = {}
        seed, done = _seed or (frozenset(), frozenset())
        self.analyzed, self._done = self._saturate(self.base | seed, set(done))

    def add(self, *terms: Term) -> "KnowledgeBase":
        new = {normalize(t) for t in terms} - self.base
        if not new:
            return self
        return KnowledgeBase(self.base | new, free_symbols=self.free_symbols, _seed=(self.analyzed, self._done))

    def __contains__(self, t: Term) -> bool:
        return normalize(t) in self.analyzed

    def __len__(self) -> int:
        return len(self.base)

    # -- analysis -----------------------------------------------------------

    def _saturate(self, start: frozenset[Term], done: set[Term]):
        """Close ``start`` under decomposition.

        ``done`` holds terms whose pieces are already known; only the others
        (new terms, and ciphertexts whose key may have become derivable) are
        revisited.
        """
        known = set(start)
        while True:
            probe = _Deriver(frozenset(known), self.free_symbols)
            new: set[Term] = set()
            has_xor = False
            for t in known - done:
                if not isinstance(t, App):
                    done.add(t)
                    continue
                if t.sym == "xor":
                    has_xor = True
                    continue
                pieces = _decompose(t, probe)
                if pieces or t.sym not in ("senc", "aenc"):
                    done.add(t)
                for piece in pieces:
                    if piece not in known:
                        new.add(piece)
            # xor summands that fall into the span become standalone knowledge
            if has_xor:
                for t in known:
                    if isinstance(t, App) and t.sym == "xor":
                        for atom in t.args:
                            if atom not in known and atom not in new and probe.xor_span(atom):
                                new.add(atom)
            if not new:
                return frozenset(known), frozenset(done)
            known |= new

    # -- synthesis ----------------------------------------------------------

    def derivable(self, goal: Term) -> bool:
        goal = normalize(goal)
        hit = self._cache.get(goal)
        if hit is None:
            hit = _Deriver(self.analyzed, self.free_symbols).derivable(goal)
            self._cache[goal] = hit
        return hit

    def derivation(self, goal: Term) -> Derivation | None:
        goal = normalize(goal)
        if not self.derivable(goal):
            return None
        return _Deriver(self.analyzed, self.free_symbols).proof(goal)


def _decompose(t: Term, probe: "_Deriver") -> list[Term]:
    if not isinstance(t, App):
        return []
    if t.sym == "pair":
        return list(t.args)
    if t.sym == "sign":
        return [t.args[0]]
    if t.sym == "senc" and probe.derivable(t.args[1]):
        return [t.args[0]]
    if t.sym == "aenc":
        key = t.args[1]
        if isinstance(key, App) and key.sym == "pk" and probe.derivable(key.args[0]):
            return [t.args[0]]
    return []


class _Deriver:
    """Goal-directed synthesis over a fixed analyzed set."""

    def __init__(self, analyzed: frozenset[Term], free_symbols: frozenset[str]):
        self.analyzed = analyzed
        self.free_symbols = free_symbols
        self.memo: dict[Term, bool] = {}
        self._active: set[Term] = set()
        self._cycles = 0
        self._exp_index: dict[Term, list[tuple[Term, ...]]] | None = None

    def derivable(self, t: Term) -> bool:
        if t in self.memo:
            return self.memo[t]
        if t in self._active:
            # a proof through t would be circular
            self._cycles += 1
            return False
        before = self._cycles
        self._active.add(t)
        try:
            ok = t in self.analyzed or self.composable(t) or self.xor_span(t)
        finally:
            self._active.discard(t)
        # a negative answer that relied on a cycle cut is only provisional
        if ok or self._cycles == before:
            self.memo[t] = ok
        return ok

    def composable(self, t: Term) -> bool:
        if isinstance(t, (PublicName, AgentName)):
            return True
        if not isinstance(t, App):
            return False
        if t.sym == "xor":
            return False
        if t.sym == "exp":
            return self._exp_source(t) is not None
        if t.sym in COMPOSABLE or t.sym in self.free_symbols:
            return all(self.derivable(a) for a in t.args)
        return False

    def _exp_index_get(self) -> dict[Term, list[tuple[Term, ...]]]:
        if self._exp_index is None:
            index: dict[Term, list[tuple[Term, ...]]] = {}
            for u in self.analyzed:
                base, exps = exp_parts(u)
                if exps:
                    index.setdefault(base, []).append(exps)
            self._exp_index = index
        return self._exp_index

    def _exp_source(self, t: App):
        """Find a known prefix exp(b, S) with S a sub-multiset of t's exponents."""
        base, exps = exp_parts(t)
        options: list[tuple[Term, ...]] = list(self._exp_index_get().get(base, []))
        options.append(())
        options.sort(key=lambda s: (-len(s), [term_key(e) for e in s]))
        for prefix in options:
            rest = list(exps)
            try:
                for e in prefix:
                    rest.remove(e)
            except ValueError:
                continue
            if len(rest) == len(exps) and not self.derivable(base):
                continue
            if len(prefix) == len(exps):
                # t itself would have been found in analyzed
                continue
            if all(self.derivable(e) for e in rest):
                return prefix, rest
        return None

    # -- xor layer -----------------------------------------------------------

    def _xor_system(self, goal: Term):
        goal_atoms = xor_atoms(goal)
        vectors: list[tuple[frozenset[Term], Derivation | None, Term]] = []
        relevant: set[Term] = set(goal_atoms)
        for u in self.analyzed:
            if isinstance(u, App) and u.sym == "xor":
                relevant.update(u.args)
        for u in sorted(self.analyzed, key=term_key):
            atoms = frozenset(xor_atoms(u))
            if atoms and atoms <= relevant:
                vectors.append((atoms, None, u))
        for atom in sorted(relevant, key=term_key):
            if atom not in self.analyzed and atom != goal and self.composable(atom):
                vectors.append((frozenset([atom]), None, atom))
        return frozenset(goal_atoms), vectors

    def xor_span(self, goal: Term) -> bool:
        if not (isinstance(goal, App) and goal.sym == "xor"):
            # a lone atom is only interesting if some known xor-sum mentions it
            if not any(isinstance(u, App) and u.sym == "xor" and goal in u.args for u in self.analyzed):
                return goal == App("zero")
        target, vectors = self._xor_system(goal)
        return _gf2_solve(target, [v for v, _, _ in vectors]) is not None

    def proof(self, t: Term) -> Derivation:
        if t in self.analyzed:
            return Derivation("analyzed-member", t)
        if isinstance(t, (PublicName, AgentName)):
            return Derivation("public", t)
        if self.composable(t):
            assert isinstance(t, App)
            if t.sym == "exp":
                prefix, rest = self._exp_source(t)
                base, _ = exp_parts(t)
                start = build_exp(base, prefix)
                kids = [self.proof(start)] + [self.proof(e) for e in rest]
                return Derivation("compose", t, tuple(kids))
            return Derivation("compose", t, tuple(self.proof(a) for a in t.args))
        target, vectors = self._xor_system(t)
        used = _gf2_solve(target, [v for v, _, _ in vectors])
        assert used is not None
        kids = []
        for i in used:
            _, _, source = vectors[i]
            kids.append(self.proof(source))
        return Derivation("xor-combine", t, tuple(kids))


def _gf2_solve(target: frozenset[Term], vectors: list[frozenset[Term]]) -> list[int] | None:
    """Indices of vectors whose symmetric difference is ``target``, or None."""
    atoms: dict[Term, int] = {}
    for v in vectors:
        for a in v:
            atoms.setdefault(a, len(atoms))
    for a in target:
        if a not in atoms:
            return None
    n = len(vectors)

    def bits(v: frozenset[Term]) -> int:
        out = 0
        for a in v:
            out |= 1 << atoms[a]
        return out

    # rows carry (value bits, combination bits)
    pivots: dict[int, tuple[int, int]] = {}
    for i, v in enumerate(vectors):
        val, comb = bits(v), 1 << i
        while val:
            top = val.bit_length() - 1
            if top not in pivots:
                pivots[top] = (val, comb)
                break
            pv, pc = pivots[top]
            val ^= pv
            comb ^= pc
    val, comb = bits(target), 0
    while val:
        top = val.bit_length() - 1
        if top not in pivots:
            return None
        pv, pc = pivots[top]
        val ^= pv
        comb ^= pc
    return [i for i in range(n) if comb >> i & 1]


def analyze(kb: KnowledgeBase) -> KnowledgeBase:
    """Return the knowledge base with its analysis closure (already computed at construction)."""
    return kb


def derivable(kb: KnowledgeBase, goal: Term) -> bool:
    return kb.derivable(goal)


def derivation(kb: KnowledgeBase, goal: Term) -> Derivation | None:
    return kb.derivation(goal)

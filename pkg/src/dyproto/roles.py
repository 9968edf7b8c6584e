"""What each role can see of the messages it handles.

A role can only inspect the parts of an incoming message it can decompose
or recompute from its own knowledge.  Everything else is opaque: it is bound
to a placeholder variable as a whole, and later messages refer to the
placeholder instead of the hidden structure.  The resulting per-role
patterns drive both trace coherence checking and attack search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .anb import ProtocolSpec, StepClaim
from .deduce import KnowledgeBase
from .term import App, Term, Var, normalize, replace_subterms, variables


@dataclass(frozen=True)
class ViewStep:
    index: int
    kind: str  # "send" or "recv"
    peer: str
    pattern: Term
    fresh: tuple[str, ...]
    claims: tuple[StepClaim, ...]


@dataclass(frozen=True)
class RoleView:
    role: str
    bound: frozenset[str]
    knowledge: tuple[Term, ...]
    steps: tuple[ViewStep, ...]
    learned: frozenset[str]
    hidden: frozenset[str]
    placeholders: dict = field(default_factory=dict, compare=False)
    issues: tuple[str, ...] = ()

    def own_variables(self) -> set[str]:
        return set(self.bound) | set(self.learned) | {f for s in self.steps for f in s.fresh}


def initial_bound(spec: ProtocolSpec, role: str) -> frozenset[str]:
    """Variables that get a value when an instance of ``role`` is created."""
    out = set(spec.roles)
    for t in spec.knowledge_of(role):
        out |= variables(t)
    return frozenset(out)


def compute_views(spec: ProtocolSpec) -> dict[str, RoleView]:
    return {role: _view(spec, role) for role in spec.roles}


def _view(spec: ProtocolSpec, role: str) -> RoleView:
    free = [name for name, _ in spec.functions]
    bound = initial_bound(spec, role)
    kb = KnowledgeBase([*spec.knowledge_of(role), *(Var(r) for r in spec.roles)], free_symbols=free)
    fresh_at: dict[int, list[str]] = {}
    for name, step in spec.fresh_of(role):
        fresh_at.setdefault(step, []).append(name)
    blob_map: dict[Term, Var] = {}
    placeholders: dict[str, Term] = {}
    learned: set[str] = set()
    issues: list[str] = []
    steps: list[ViewStep] = []
    mentioned: set[str] = set()

    def placeholder(t: Term) -> Var:
        t = normalize(t)
        if t not in blob_map:
            v = Var(f"_{role}{len(blob_map) + 1}")
            blob_map[t] = v
            placeholders[v.ident] = t
        return blob_map[t]

    for s in spec.steps:
        if role not in (s.sender, s.receiver):
            continue
        new_fresh = tuple(fresh_at.get(s.index, ()))
        if new_fresh:
            kb = kb.add(*(Var(f) for f in new_fresh))
        payload = normalize(s.payload)
        mentioned |= variables(payload)
        if s.sender == role:
            if not kb.derivable(payload):
                issues.append(f"{role} cannot compose the message of step {s.index}")
            pattern = replace_subterms(payload, blob_map)
            claims = tuple(_rewrite_claim(c, blob_map) for c in s.claims if c.role == role)
            steps.append(ViewStep(s.index, "send", s.receiver, pattern, new_fresh, claims))
            continue
        kb, got, blobs = _receive(kb, replace_subterms(payload, blob_map))
        learned |= {v.ident for v in got if v.ident not in placeholders}
        pattern = _build(replace_subterms(payload, blob_map), kb, placeholder, blobs)
        pattern = replace_subterms(pattern, blob_map)
        # later steps refer to opaque parts through their placeholders
        kb = kb.add(*blob_map.values())
        claims = tuple(_rewrite_claim(c, blob_map) for c in s.claims if c.role == role)
        steps.append(ViewStep(s.index, "recv", s.sender, pattern, new_fresh, claims))
    own = set(bound) | learned | {f for st in steps for f in st.fresh}
    hidden = frozenset(mentioned - own)
    for st in steps:
        leaks = variables(st.pattern) & hidden
        if leaks and st.kind == "recv":
            issues.append(f"step {st.index}: {role} would have to impose structure on opaque input ({', '.join(sorted(leaks))})")
        for c in st.claims:
            bad = set().union(*(variables(a) for a in c.args)) & hidden if c.args else set()
            if bad:
                issues.append(f"claim {c.label} at step {st.index} refers to {', '.join(sorted(bad))}, which {role} never learns")
    return RoleView(role, bound, tuple(spec.knowledge_of(role)), tuple(steps), frozenset(learned), hidden,
                    placeholders, tuple(issues))


def _rewrite_claim(c: StepClaim, blob_map) -> StepClaim:
    return StepClaim(c.role, c.label, tuple(replace_subterms(normalize(a), blob_map) for a in c.args))


def _receive(kb: KnowledgeBase, payload: Term):
    """Saturate what the receiver obtains from ``payload``; returns (kb, learned vars, opaque parts)."""
    got: set[Term] = set()
    while True:
        # opaque parts are judged against what is known without them
        blobs: set[Term] = set()
        _walk(payload, kb, got, blobs)
        nxt = kb.add(*got)
        if nxt.base == kb.base:
            return kb.add(*blobs), got, blobs
        kb = nxt


def _walk(q: Term, kb: KnowledgeBase, got: set, blobs: set) -> None:
    if isinstance(q, Var):
        got.add(q)
        return
    if not isinstance(q, App) or not variables(q):
        return
    sym, args = q.sym, q.args
    if sym == "pair":
        _walk(args[0], kb, got, blobs)
        _walk(args[1], kb, got, blobs)
    elif sym == "sign":
        _walk(args[0], kb, got, blobs)
    elif sym in ("senc", "aenc") and _can_open(q, kb):
        _walk(args[0], kb, got, blobs)
    elif sym == "xor":
        unknown = [a for a in args if not kb.derivable(a)]
        if len(unknown) == 1:
            _walk(unknown[0], kb, got, blobs)
        elif len(unknown) > 1:
            blobs.add(q)
    elif not kb.derivable(q):
        blobs.add(q)


def _can_open(q: App, kb: KnowledgeBase) -> bool:
    key = q.args[1]
    if q.sym == "senc":
        return kb.derivable(key)
    return isinstance(key, App) and key.sym == "pk" and kb.derivable(key.args[0])


def _build(q: Term, kb: KnowledgeBase, placeholder, blobs: set) -> Term:
    if isinstance(q, Var) or not isinstance(q, App) or not variables(q):
        return q
    sym, args = q.sym, q.args
    if sym == "pair":
        return App("pair", (_build(args[0], kb, placeholder, blobs), _build(args[1], kb, placeholder, blobs)))
    if sym == "sign":
        m, k = args
        key = k if kb.derivable(k) or kb.derivable(App("pk", (k,))) else placeholder(k)
        return App("sign", (_build(m, kb, placeholder, blobs), key))
    if sym in ("senc", "aenc") and _can_open(q, kb):
        return App(sym, (_build(args[0], kb, placeholder, blobs), args[1]))
    if sym == "xor":
        unknown = [a for a in args if not kb.derivable(a)]
        if len(unknown) <= 1:
            return App("xor", tuple(_build(a, kb, placeholder, blobs) if a in unknown else a for a in args))
        return placeholder(q)
    if q in blobs or not kb.derivable(q):
        return placeholder(q)
    return q

"""Attack-trace validation.

``validate_attack`` runs four independent checks over a trace and combines
them with the property's value:

* executability: every message an honest instance sends can be built from
  what that instance holds at that point;
* coherence: every instance follows its role's steps in order under one
  substitution, seeing received messages only as far as it can decompose
  them;
* intruder: every delivered message is derivable from what the network has
  carried so far plus the intruder's initial knowledge;
* validity: the security property evaluates to false on the trace.

The verdict is ``valid-attack`` exactly when the first three pass and the
property is false.  Lints about the protocol itself never affect it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .anb import ProtocolSpec
from .deduce import KnowledgeBase
from .formula import (
    CLAIM_LABELS,
    And,
    Before,
    Claim,
    Equal,
    Exists,
    Forall,
    Formula,
    FormulaError,
    Implies,
    Knows,
    Not,
    Or,
    TimeEq,
)
from .roles import RoleView, compute_views
from .term import (
    AgentName,
    App,
    FreshName,
    G,
    ZERO,
    Term,
    Var,
    equal_mod_theory,
    format_term,
    is_ground,
    match_pattern,
    normalize,
    substitute,
    subterms,
    variables,
)
from .trace import INTRUDER_AGENT, Session, Trace, TraceStructureError, check_structure, from_dict, loads

ASSERTION_LABELS = frozenset({"Secret", "Authentic", "Commit", "FreshTerm"})
CHECKS = ("executability", "coherence", "intruder", "validity")


# ---------------------------------------------------------------------------
# sessions and long-term values


def honest_agent(role: str) -> AgentName:
    name = role.lower()
    return AgentName(name + "_" if name == INTRUDER_AGENT.ident else name)


def compromised(session: Session, spec: ProtocolSpec) -> bool:
    """True when some role of the session is played by the intruder."""
    return any(session.bindings.get(r) == INTRUDER_AGENT for r in spec.roles)


def long_term_owners(spec: ProtocolSpec, var: str) -> tuple[str, ...] | None:
    """Roles whose agents determine the value of knowledge variable ``var``.

    None means the value is private to each instance.
    """
    for ps in spec.pre_shared:
        if ps.term == Var(var):
            return ps.holders
    bare = tuple(r for r in spec.roles if Var(var) in spec.knowledge_of(r))
    mention = tuple(r for r in spec.roles if any(var in variables(t) for t in spec.knowledge_of(r)))
    if len(mention) <= 1 and len(bare) <= 1:
        return None
    return bare or mention


def long_term_value(spec: ProtocolSpec, var: str, agents: Mapping[str, Term], instance: str) -> FreshName:
    owners = long_term_owners(spec, var)
    if owners is None:
        return FreshName(f"{var}_{instance}")
    return FreshName(var + "".join(f"_{agents[r].ident}" for r in owners))


def session_bindings(spec: ProtocolSpec, view: RoleView, instance: str, agents: Mapping[str, AgentName]) -> dict:
    """Initial substitution for an instance: role names to agents, knowledge variables to values."""
    out: dict[str, Term] = {r: agents[r] for r in spec.roles}
    for v in sorted(view.bound - set(spec.roles)):
        out[v] = long_term_value(spec, v, agents, instance)
    return out


def intruder_initial_knowledge(spec: ProtocolSpec, trace: Trace) -> list[Term]:
    """Agent names, zero, g, every key pair's public half, and secrets of compromised owners."""
    out: list[Term] = [INTRUDER_AGENT, ZERO, G]
    key_pairs = {ps.term.ident for ps in spec.pre_shared if ps.kind == "key-pair" and isinstance(ps.term, Var)}
    for _, s in sorted(trace.sessions.items()):
        for r in spec.roles:
            if r in s.bindings:
                out.append(s.bindings[r])
        for v, value in sorted(s.bindings.items()):
            if v in spec.roles:
                continue
            if v in key_pairs:
                out.append(App("pk", (value,)))
            owners = long_term_owners(spec, v)
            if owners and any(s.bindings.get(r) == INTRUDER_AGENT for r in owners):
                out.append(value)
    return list(dict.fromkeys(normalize(t) for t in out))


# ---------------------------------------------------------------------------
# results


@dataclass
class EventResult:
    t: int
    actor: str
    passed: bool
    reason: str | None = None
    witness: Term | None = None
    derivation: dict | None = None

    def to_dict(self) -> dict:
        d: dict = {"t": self.t, "actor": self.actor, "passed": self.passed}
        if self.reason:
            d["reason"] = self.reason
        if self.witness is not None:
            d["witness"] = format_term(self.witness)
        if self.derivation is not None:
            d["derivation"] = self.derivation
        return d


@dataclass
class InstanceResult:
    instance: str
    role: str
    passed: bool
    steps: list[int] = field(default_factory=list)
    substitution: dict[str, Term] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "role": self.role,
            "passed": self.passed,
            "steps_matched": self.steps,
            "substitution": {k: format_term(v) for k, v in sorted(self.substitution.items())},
            "diagnostics": self.diagnostics,
        }


@dataclass
class AttackReport:
    verdict: str
    executability: list[EventResult] = field(default_factory=list)
    coherence: list[InstanceResult] = field(default_factory=list)
    intruder: list[EventResult] = field(default_factory=list)
    validity: dict = field(default_factory=dict)
    lints: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def failed_checks(self) -> list[str]:
        out = []
        if not all(r.passed for r in self.executability):
            out.append("executability")
        if not all(r.passed for r in self.coherence):
            out.append("coherence")
        if not all(r.passed for r in self.intruder):
            out.append("intruder")
        if self.validity.get("value") is not False:
            out.append("validity")
        if self.errors:
            out.insert(0, "structure")
        return out

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "failed_checks": self.failed_checks,
            "errors": self.errors,
            "executability": {"passed": all(r.passed for r in self.executability),
                              "events": [r.to_dict() for r in self.executability]},
            "coherence": {"passed": all(r.passed for r in self.coherence),
                          "instances": [r.to_dict() for r in self.coherence]},
            "intruder": {"passed": all(r.passed for r in self.intruder),
                         "events": [r.to_dict() for r in self.intruder]},
            "validity": self.validity,
            "lints": self.lints,
        }


def _underivable_part(kb: KnowledgeBase, t: Term) -> Term:
    """A smallest subterm that explains why ``t`` is not derivable."""
    while isinstance(t, App) and t.sym not in ("xor", "exp") and t not in kb:
        missing = [a for a in t.args if not kb.derivable(a)]
        if not missing:
            break
        t = missing[0]
    return t


# ---------------------------------------------------------------------------
# executability


def check_executability(spec: ProtocolSpec, trace: Trace, views: dict[str, RoleView] | None = None) -> list[EventResult]:
    views = views or compute_views(spec)
    free = [n for n, _ in spec.functions]
    kbs: dict[str, KnowledgeBase] = {}
    pending: dict[str, list[Term]] = {}
    for inst, s in trace.sessions.items():
        view = views.get(s.role)
        start: list[Term] = [s.bindings[r] for r in spec.roles if r in s.bindings]
        if view is not None:
            for k in view.knowledge:
                kt = substitute(k, s.bindings)
                if is_ground(kt):
                    start.append(kt)
        kbs[inst] = KnowledgeBase(start, free_symbols=free)
        pending[inst] = []
    results: list[EventResult] = []
    for ev in trace.events:
        if ev.kind in ("fresh", "deliver"):
            pending[ev.actor].append(ev.term)
            continue
        if ev.kind != "send":
            continue
        if pending[ev.actor]:
            kbs[ev.actor] = kbs[ev.actor].add(*pending[ev.actor])
            pending[ev.actor] = []
        kb = kbs[ev.actor]
        proof = kb.derivation(ev.term)
        if proof is None:
            w = _underivable_part(kb, ev.term)
            results.append(EventResult(ev.t, ev.actor, False, f"{ev.actor} cannot produce {format_term(w)}", w))
        else:
            results.append(EventResult(ev.t, ev.actor, True, derivation=proof.to_dict()))
    return results


# ---------------------------------------------------------------------------
# coherence


def role_script(view: RoleView, assertions: bool = True) -> list[tuple]:
    """Expected event sequence of one instance: (kind, step index, payload-or-claim)."""
    out: list[tuple] = []
    for st in view.steps:
        claims = [("claim", st.index, c) for c in st.claims if assertions or c.label not in ASSERTION_LABELS]
        fresh = [("fresh", st.index, f) for f in st.fresh]
        if st.kind == "send":
            out += fresh + [("send", st.index, st)] + claims
        else:
            out += [("recv", st.index, st)] + fresh + claims
    return out


def _describe(item: tuple) -> str:
    kind, idx, x = item
    if kind == "fresh":
        return f"generation of {x} (step {idx})"
    if kind == "claim":
        return f"claim {x.label} (step {idx})"
    return f"{'a send' if kind == 'send' else 'a delivery'} (step {idx})"


def _opaque(view: RoleView, names: set[str]) -> str:
    return f"structure imposed on opaque input: {view.role} cannot extract {', '.join(sorted(names))}"


def check_coherence(spec: ProtocolSpec, trace: Trace, views: dict[str, RoleView] | None = None) -> list[InstanceResult]:
    views = views or compute_views(spec)
    by_actor: dict[str, list] = {inst: [] for inst in trace.sessions}
    for ev in trace.events:
        by_actor[ev.actor].append(ev)
    results = [_coherent_instance(spec, views, inst, s, by_actor[inst]) for inst, s in sorted(trace.sessions.items())]
    _check_long_term(spec, trace, views, {r.instance: r for r in results})
    return results


def _coherent_instance(spec, views, inst: str, s: Session, events) -> InstanceResult:
    res = InstanceResult(inst, s.role, True)
    view = views.get(s.role)
    if view is None:
        res.passed = False
        res.diagnostics.append(f"unknown role {s.role!r}")
        return res

    def fail(msg: str) -> InstanceResult:
        res.passed = False
        res.diagnostics.append(msg)
        return res

    missing = sorted(view.bound - set(s.bindings))
    if missing:
        return fail(f"bindings lack initial value(s) for {', '.join(missing)}")
    unknown = sorted(set(s.bindings) - view.own_variables() - view.hidden)
    if unknown:
        return fail(f"bindings mention variable(s) {', '.join(unknown)} that role {s.role} does not have")
    imposed = set(s.bindings) & view.hidden
    if imposed:
        return fail(_opaque(view, imposed))
    sigma: dict[str, Term] = {v: s.bindings[v] for v in view.bound}
    script = role_script(view, assertions=not compromised(s, spec))
    pos = 0
    for ev in events:
        if pos >= len(script):
            return fail(f"t={ev.t}: step-order violation, {inst} has already completed its role")
        item = script[pos]
        kind, idx, x = item
        want = "deliver" if kind == "recv" else kind
        if ev.kind != want:
            return fail(f"t={ev.t}: step-order violation, expected {_describe(item)} but found a {ev.kind} event")
        if kind == "fresh":
            if x in sigma and sigma[x] != ev.term:
                return fail(f"t={ev.t}: {x} is already bound to {format_term(sigma[x])}")
            sigma[x] = ev.term
        elif kind == "send":
            expect = normalize(substitute(x.pattern, sigma))
            if not is_ground(expect):
                unbound = variables(expect)
                if unbound & view.hidden:
                    return fail(f"t={ev.t}: " + _opaque(view, unbound & view.hidden))
                return fail(f"t={ev.t}: step {idx} message has unbound variable(s) {', '.join(sorted(unbound))}")
            if expect != ev.term:
                return fail(f"t={ev.t}: step {idx} sends {format_term(ev.term)} but the role sends {format_term(expect)}")
            peer = sigma.get(x.peer)
            if ev.to is not None and ev.to != peer:
                return fail(f"t={ev.t}: step {idx} is addressed to {format_term(ev.to)}, expected {format_term(peer)}")
        elif kind == "recv":
            m = match_pattern(x.pattern, ev.term, sigma)
            if m is None:
                return fail(f"t={ev.t}: delivered {format_term(ev.term)} does not match step {idx}")
            sigma = m
        else:
            args = [normalize(substitute(a, sigma)) for a in x.args]
            unbound = set().union(*(variables(a) for a in args)) if args else set()
            if unbound:
                if unbound & view.hidden:
                    return fail(f"t={ev.t}: " + _opaque(view, unbound & view.hidden))
                return fail(f"t={ev.t}: claim {x.label} has unbound variable(s) {', '.join(sorted(unbound))}")
            if ev.label != x.label or len(ev.args) != len(args) or not all(
                    equal_mod_theory(a, b) for a, b in zip(args, ev.args)):
                shown = ", ".join(format_term(a) for a in args)
                return fail(f"t={ev.t}: expected claim {x.label}({shown}) at step {idx}")
        if kind in ("send", "recv"):
            res.steps.append(idx)
        pos += 1
    res.substitution = {k: v for k, v in sigma.items() if not k.startswith("_")}
    for v, value in sorted(s.bindings.items()):
        if v in sigma and not equal_mod_theory(sigma[v], value):
            return fail(f"binding {v} = {format_term(value)} disagrees with the run ({format_term(sigma[v])})")
    return res


def _check_long_term(spec, trace: Trace, views, results: dict[str, InstanceResult]) -> None:
    seen: dict[tuple, tuple[Term, str]] = {}
    owners_of: dict[Term, tuple] = {}
    for inst, s in sorted(trace.sessions.items()):
        view = views.get(s.role)
        res = results[inst]
        if view is None or not res.passed:
            continue
        for r in spec.roles:
            if r in s.bindings and not isinstance(s.bindings[r], AgentName):
                res.passed = False
                res.diagnostics.append(f"role {r} must be bound to an agent name")
        for v in sorted(view.bound - set(spec.roles)):
            value = s.bindings[v]
            if not isinstance(value, FreshName):
                res.passed = False
                res.diagnostics.append(f"long-term value {v} = {format_term(value)} must be a fresh name")
                continue
            owners = long_term_owners(spec, v)
            key = (v, inst) if owners is None else (v,) + tuple(s.bindings.get(r) for r in owners)
            prev = seen.get(key)
            if prev is not None and prev[0] != value:
                res.passed = False
                res.diagnostics.append(f"long-term value {v} = {format_term(value)} is inconsistent with "
                                       f"{prev[1]} ({format_term(prev[0])})")
                continue
            other = owners_of.get(value)
            if other is not None and other != key:
                res.passed = False
                res.diagnostics.append(f"long-term value {format_term(value)} is reused for a different key")
                continue
            seen[key] = (value, inst)
            owners_of[value] = key


# ---------------------------------------------------------------------------
# intruder


def check_intruder(spec: ProtocolSpec, trace: Trace) -> list[EventResult]:
    kb = KnowledgeBase(intruder_initial_knowledge(spec, trace), free_symbols=[n for n, _ in spec.functions])
    pending: list[Term] = []
    results: list[EventResult] = []
    for ev in trace.events:
        if ev.kind == "send":
            pending.append(ev.term)
        elif ev.kind == "deliver":
            if pending:
                kb = kb.add(*pending)
                pending = []
            proof = kb.derivation(ev.term)
            if proof is None:
                w = _underivable_part(kb, ev.term)
                results.append(EventResult(ev.t, ev.actor, False, f"intruder cannot derive {format_term(w)}", w))
            else:
                results.append(EventResult(ev.t, ev.actor, True, derivation=proof.to_dict()))
    return results


# ---------------------------------------------------------------------------
# formulas


class _Evaluator:
    def __init__(self, trace: Trace, spec: ProtocolSpec | None):
        self.trace = trace
        self.times = [e.t for e in trace.events]
        initial = intruder_initial_knowledge(spec, trace) if spec else [INTRUDER_AGENT, ZERO, G]
        free = [n for n, _ in spec.functions] if spec else []
        # knowledge after each event, built lazily
        self._kb_start = KnowledgeBase(initial, free_symbols=free)
        self._kb_at: dict[int, KnowledgeBase] = {}
        domain: set[Term] = set()
        for e in trace.events:
            for x in e.terms():
                domain |= subterms(x)
        self.domain = sorted(domain, key=format_term)
        self.claims: dict[str, list] = {}
        for e in trace.events:
            if e.kind == "claim":
                self.claims.setdefault(e.label, []).append(e)

    def kb_after(self, t: int) -> KnowledgeBase:
        if t not in self._kb_at:
            sent = [e.term for e in self.trace.events if e.kind == "send" and e.t <= t]
            self._kb_at[t] = self._kb_start.add(*sent) if sent else self._kb_start
        return self._kb_at[t]

    # a formula's value, with a witnessing assignment for quantifiers that decide it
    def value(self, f: Formula, env: dict) -> tuple[bool, dict | None]:
        if isinstance(f, Not):
            v, w = self.value(f.body, env)
            return not v, w
        if isinstance(f, And):
            for p in f.parts:
                v, w = self.value(p, env)
                if not v:
                    return False, w
            return True, None
        if isinstance(f, Or):
            for p in f.parts:
                v, w = self.value(p, env)
                if v:
                    return True, w
            return False, None
        if isinstance(f, Implies):
            lv, _ = self.value(f.left, env)
            if not lv:
                return True, None
            return self.value(f.right, env)
        if isinstance(f, Exists):
            inner = {k: v for k, v in env.items() if k not in f.variables}
            for sol in self.solve(_conjuncts(f.body), f.variables, inner):
                return True, {k: sol[k] for k in f.variables}
            return False, None
        if isinstance(f, Forall):
            inner = {k: v for k, v in env.items() if k not in f.variables}
            if isinstance(f.body, Implies):
                guard, goal = _conjuncts(f.body.left), f.body.right
            else:
                guard, goal = [], f.body
            for sol in self.solve(guard, f.variables, inner):
                v, _ = self.value(goal, sol)
                if not v:
                    return False, {k: sol[k] for k in f.variables}
            return True, None
        return self.atom(f, env), None

    def atom(self, f: Formula, env: dict) -> bool:
        if isinstance(f, Claim):
            return any(self._claim_match(f, e, env) is not None for e in self.claims.get(self._label(f), ())
                       if e.t == env[f.time])
        if isinstance(f, Knows):
            return self.kb_after(env[f.time]).derivable(substitute(f.term, env))
        if isinstance(f, Before):
            return env[f.left] < env[f.right]
        if isinstance(f, TimeEq):
            return env[f.left] == env[f.right]
        if isinstance(f, Equal):
            return equal_mod_theory(substitute(f.left, env), substitute(f.right, env))
        raise TypeError(f"not a formula: {f!r}")

    def _label(self, f: Claim) -> str:
        if f.label not in CLAIM_LABELS:
            raise FormulaError(f"unknown claim label {f.label!r}")
        return f.label

    def _claim_match(self, f: Claim, e, env: dict) -> dict | None:
        if len(e.args) != len(f.args):
            return None
        sigma: dict | None = {k: v for k, v in env.items() if not k.startswith("#")}
        for a, b in zip(f.args, e.args):
            sigma = match_pattern(a, b, sigma)
            if sigma is None:
                return None
        out = dict(env)
        out.update(sigma)
        return out

    def solve(self, parts: list[Formula], qvars, env: dict) -> Iterator[dict]:
        """All extensions of ``env`` binding ``qvars`` under which every formula in ``parts`` holds."""
        unbound = [v for v in qvars if v not in env]
        if not parts:
            yield from self._enumerate(unbound, env)
            return
        for i, p in enumerate(parts):
            if _free(p) <= env.keys():
                if self.value(p, env)[0]:
                    yield from self.solve(parts[:i] + parts[i + 1:], qvars, env)
                return
        for i, p in enumerate(parts):
            if isinstance(p, Knows) and variables(p.term) <= env.keys() and p.time not in env:
                # knowledge only grows, so the satisfying timepoints form a suffix
                goal = substitute(p.term, env)
                lo, hi = 0, len(self.times)
                while lo < hi:
                    mid = (lo + hi) // 2
                    if self.kb_after(self.times[mid]).derivable(goal):
                        hi = mid
                    else:
                        lo = mid + 1
                rest = parts[:i] + parts[i + 1:]
                for t in self.times[lo:]:
                    yield from self.solve(rest, qvars, {**env, p.time: t})
                return
        for i, p in enumerate(parts):
            if isinstance(p, Claim):
                rest = parts[:i] + parts[i + 1:]
                for e in self.claims.get(self._label(p), ()):
                    if p.time in env and env[p.time] != e.t:
                        continue
                    ext = self._claim_match(p, e, {**env, p.time: e.t})
                    if ext is not None:
                        yield from self.solve(rest, qvars, ext)
                return
        # no binder: enumerate one variable of the first open conjunct
        v = sorted(_free(parts[0]) - env.keys())[0]
        for ext in self._enumerate([v], env):
            yield from self.solve(parts, qvars, ext)

    def _enumerate(self, names, env: dict) -> Iterator[dict]:
        if not names:
            yield env
            return
        pools = [self.times if n.startswith("#") else self.domain for n in names]
        for combo in itertools.product(*pools):
            yield {**env, **dict(zip(names, combo))}


def _conjuncts(f: Formula) -> list[Formula]:
    return list(f.parts) if isinstance(f, And) else [f]


def _free(f: Formula) -> set[str]:
    if isinstance(f, Claim):
        return set().union(*(variables(a) for a in f.args)) | {f.time} if f.args else {f.time}
    if isinstance(f, Knows):
        return variables(f.term) | {f.time}
    if isinstance(f, (Before, TimeEq)):
        return {f.left, f.right}
    if isinstance(f, Equal):
        return variables(f.left) | variables(f.right)
    if isinstance(f, Not):
        return _free(f.body)
    if isinstance(f, (And, Or)):
        return set().union(*(_free(p) for p in f.parts))
    if isinstance(f, Implies):
        return _free(f.left) | _free(f.right)
    if isinstance(f, (Exists, Forall)):
        return _free(f.body) - set(f.variables)
    raise TypeError(f"not a formula: {f!r}")


def eval_formula(f: Formula, trace: Trace, spec: ProtocolSpec | None = None) -> tuple[bool, dict | None]:
    """Evaluate ``f`` on the finite trace; a false result comes with a witness assignment."""
    value, witness = _Evaluator(trace, spec).value(f, {})
    return value, (witness if not value else None)


def format_witness(w: dict | None) -> dict | None:
    if w is None:
        return None
    return {k: (v if isinstance(v, int) else format_term(v)) for k, v in w.items()}


# ---------------------------------------------------------------------------
# lints


def lint(spec: ProtocolSpec, views: dict[str, RoleView] | None = None) -> list[dict]:
    views = views or compute_views(spec)
    out: list[dict] = []
    secrets = [ps.term for ps in spec.pre_shared]
    for s in spec.steps:
        exposed = KnowledgeBase([s.payload])
        for k in secrets:
            if k in exposed:
                out.append({"code": "pre-shared-in-clear", "step": s.index,
                            "message": f"step {s.index}: pre-shared key {format_term(k)} sent to network"})
    for role in spec.roles:
        for issue in views[role].issues:
            out.append({"code": "role-view", "role": role, "message": issue})
    prop = spec.property
    if prop is not None:
        for c in _property_claims(prop.formula):
            if c not in spec.step_labels():
                out.append({"code": "unused-label", "message": f"property mentions {c}, which no step claims"})
    return out


def _property_claims(f: Formula) -> list[str]:
    from .formula import claim_labels

    return sorted(claim_labels(f))


# ---------------------------------------------------------------------------
# the full validation


def validate_attack(spec: ProtocolSpec, trace) -> AttackReport:
    """Validate ``trace`` (a Trace, a JSON string or a decoded document) against ``spec``."""
    views = compute_views(spec)
    lints = lint(spec, views)
    functions = dict(spec.functions)
    try:
        if isinstance(trace, str):
            trace = loads(trace, functions)
        elif isinstance(trace, dict):
            trace = from_dict(trace, functions)
        else:
            check_structure(trace)
    except TraceStructureError as e:
        return AttackReport("invalid", lints=lints, errors=[str(e)], validity={"value": None})
    if spec.property is None:
        return AttackReport("invalid", lints=lints, errors=["protocol has no property"], validity={"value": None})
    execu = check_executability(spec, trace, views)
    coh = check_coherence(spec, trace, views)
    intr = check_intruder(spec, trace)
    try:
        value, witness = eval_formula(spec.property.formula, trace, spec)
        validity = {"property": spec.property.name, "value": value, "witness": format_witness(witness)}
    except FormulaError as e:
        validity = {"property": spec.property.name, "value": None, "error": str(e)}
    ok = all(r.passed for r in execu) and all(r.passed for r in coh) and all(r.passed for r in intr)
    verdict = "valid-attack" if ok and validity["value"] is False else "invalid"
    return AttackReport(verdict, execu, coh, intr, validity, lints)

"""Bounded attack search.

A concrete depth-first exploration of interleavings.  Honest instances are
started lazily, each playing its role against either the canonical honest
peer or the intruder.  Once started, an instance's local actions (fresh
generation, sends and claims) are taken eagerly; the only real choices are
which instance to start and which message the intruder delivers next.
Delivered messages come from ``candidate_messages``, bounded by a
composition depth.

Exploration iteratively deepens the event bound and, within each bound, the
number of instances per role, so short attacks are found first.  Every
trace returned has been accepted by ``validate_attack``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .anb import ProtocolSpec
from .formula import Before, Claim, Knows, TimeEq, walk
from .deduce import COMPOSABLE, KnowledgeBase
from .roles import RoleView, compute_views
from .sandbox import (
    compromised,
    eval_formula,
    honest_agent,
    intruder_initial_knowledge,
    role_script,
    session_bindings,
    validate_attack,
)
from .term import (
    App,
    FreshName,
    G,
    ZERO,
    Term,
    Var,
    format_term,
    is_ground,
    match_pattern,
    normalize,
    substitute,
    variables,
)
from .trace import INTRUDER_AGENT, Session, Trace, TraceEvent


@dataclass(frozen=True)
class SearchConfig:
    max_sessions: int = 2
    synth_depth: int = 3
    max_events: int = 24
    time_budget: float = 200.0

    def __post_init__(self):
        for name in ("max_sessions", "synth_depth", "max_events"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


@dataclass
class SearchStats:
    states: int = 0
    pruned: int = 0
    rejected: int = 0
    event_bound: int = 0
    sessions: int = 0
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "states_explored": self.states,
            "states_pruned": self.pruned,
            "candidates_rejected": self.rejected,
            "event_bound_reached": self.event_bound,
            "sessions_reached": self.sessions,
            "wall_time": round(self.elapsed, 3),
        }


@dataclass
class SearchResult:
    trace: Trace | None
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def found(self) -> bool:
        return self.trace is not None


class SearchTimeout(Exception):
    def __init__(self, stats: SearchStats):
        super().__init__(f"search budget exhausted after {stats.elapsed:.1f}s")
        self.stats = stats


# ---------------------------------------------------------------------------
# intruder message candidates


def candidate_messages(kb: KnowledgeBase, pattern: Term, depth: int, pool: list[Term] | None = None,
                       deadline: float | None = None) -> list[Term]:
    """Ground, intruder-derivable instances of ``pattern``, in a fixed order.

    Variables are filled from ``pool`` (by default the analyzed terms plus
    zero and g).  Function applications are either replayed from knowledge or
    composed from derivable parts, at most ``depth`` levels deep.
    """
    if pool is None:
        pool = default_pool(kb)
    out: dict[str, Term] = {}
    gen = _Generator(kb, pool, deadline, atoms=atomic_pool(pool))
    for t, _ in gen.gen(normalize(pattern), {}, depth):
        out.setdefault(format_term(t), t)
    return [out[k] for k in sorted(out)]


def atomic_pool(pool: list[Term]) -> list[Term]:
    return [t for t in pool if not isinstance(t, App) or not t.args]


def default_pool(kb: KnowledgeBase) -> list[Term]:
    # tuples are left out: a variable standing for a tuple would be a type-flaw attack
    items = {t for t in kb.analyzed if not (isinstance(t, App) and t.sym == "pair")} | {ZERO, G}
    return sorted(items, key=lambda t: (len(format_term(t)), format_term(t)))


class _Generator:
    def __init__(self, kb: KnowledgeBase, pool: list[Term], deadline: float | None, atoms: list[Term]):
        self.kb = kb
        self.pool = pool
        self.atoms = atoms
        self.deadline = deadline
        self.replay: dict[str, list[Term]] = {}
        for u in sorted(kb.analyzed, key=format_term):
            if isinstance(u, App):
                self.replay.setdefault(u.sym, []).append(u)
        self._ticks = 0

    def _tick(self):
        self._ticks += 1
        if self.deadline is not None and self._ticks % 256 == 0 and time.monotonic() > self.deadline:
            raise _Deadline

    def _pool_for(self, ident: str) -> list[Term]:
        # protocol variables hold names; placeholders for opaque parts can hold anything
        return self.pool if ident.startswith("_") else self.atoms

    def gen(self, p: Term, sub: dict, depth: int):
        self._tick()
        q = normalize(substitute(p, sub)) if sub else p
        if is_ground(q):
            if self.kb.derivable(q):
                yield q, sub
            return
        if isinstance(q, Var):
            for x in self._pool_for(q.ident):
                yield x, {**sub, q.ident: x}
            return
        assert isinstance(q, App)
        if q.sym in ("xor", "exp"):
            # theory positions: fill the open variables, keep what is derivable
            names = sorted(variables(q))
            for combo in itertools.product(*(self._pool_for(v) for v in names)):
                self._tick()
                ext = {**sub, **dict(zip(names, combo))}
                t = normalize(substitute(q, ext))
                if self.kb.derivable(t):
                    yield t, ext
            return
        for u in self.replay.get(q.sym, ()):
            m = match_pattern(q, u, sub)
            if m is not None:
                yield u, m
        if depth > 1 and (q.sym in COMPOSABLE or q.sym in self.kb.free_symbols):
            # a fixed argument the intruder lacks (say, an unknown key) rules composition out
            if all(self.kb.derivable(a) for a in q.args if is_ground(a)):
                yield from self._compose(q, list(q.args), sub, depth - 1, [])

    def _compose(self, q: App, rest: list[Term], sub: dict, depth: int, done: list[Term]):
        if not rest:
            yield normalize(App(q.sym, tuple(done))), sub
            return
        for t, ext in self.gen(rest[0], sub, depth):
            yield from self._compose(q, rest[1:], ext, depth, done + [t])


class _Deadline(Exception):
    pass


# ---------------------------------------------------------------------------
# the search proper


@dataclass(frozen=True, eq=False)
class _Inst:
    name: str
    role: str
    session: Session
    script: tuple
    pos: int = 0
    sigma: tuple = ()  # sorted (var, term) pairs
    order: tuple = ()  # (role index, instance number)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.name, self.pos, self.sigma)))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return (isinstance(other, _Inst) and self._hash == other._hash and self.name == other.name
                and self.pos == other.pos and self.sigma == other.sigma)

    def moved(self, pos: int, sigma: dict) -> "_Inst":
        return _Inst(self.name, self.role, self.session, self.script, pos, tuple(sorted(sigma.items())), self.order)

    def binding(self) -> dict:
        return dict(self.sigma)

    def next_item(self):
        return self.script[self.pos] if self.pos < len(self.script) else None


class _Search:
    def __init__(self, spec: ProtocolSpec, cfg: SearchConfig, deadline: float, stats: SearchStats):
        if spec.property is None:
            raise ValueError("protocol has no property to attack")
        self.spec = spec
        self.cfg = cfg
        self.deadline = deadline
        self.stats = stats
        self.views: dict[str, RoleView] = compute_views(spec)
        self.formula = spec.property.formula
        self.free = [n for n, _ in spec.functions]
        self.reorder = order_insensitive(self.formula)
        # sends can only change the property's value through K atoms
        self.watch_sends = any(isinstance(n, Knows) for n in walk(self.formula))
        self._cand: dict = {}
        self._ticks = 0

    def tick(self):
        self._ticks += 1
        if self._ticks % 64 == 0 and time.monotonic() > self.deadline:
            raise _Deadline

    def new_instance(self, role: str, k: int, peers: dict) -> _Inst:
        name = f"{role}{k}"
        agents = {r: honest_agent(r) for r in self.spec.roles}
        agents.update(peers)
        view = self.views[role]
        binds = session_bindings(self.spec, view, name, agents)
        session = Session(role, binds)
        script = tuple(role_script(view, assertions=not compromised(session, self.spec)))
        order = (self.spec.roles.index(role), k)
        return _Inst(name, role, session, script, 0, tuple(sorted(binds.items())), order)

    def peer_choices(self, role: str):
        others = [r for r in self.spec.roles if r != role]
        for combo in itertools.product((False, True), repeat=len(others)):
            yield {r: INTRUDER_AGENT for r, bad in zip(others, combo) if bad}

    def run(self, sessions: int, max_events: int):
        self.sessions = sessions
        self.max_events = max_events
        self.memo: dict = {}
        return self.dfs((), (), KnowledgeBase([INTRUDER_AGENT, ZERO, G], free_symbols=self.free))

    def trace_of(self, insts, events) -> Trace:
        return Trace({i.name: i.session for i in insts}, tuple(events), self.spec.name)

    def with_session(self, kb: KnowledgeBase, inst: _Inst) -> KnowledgeBase:
        # initial intruder knowledge is a union of per-session contributions
        extra = intruder_initial_knowledge(self.spec, Trace({inst.name: inst.session}, ()))
        return kb.add(*extra)

    def advance(self, inst: _Inst, events: list, kb: KnowledgeBase):
        """Run the instance's local actions eagerly; returns (inst, new events, kb, attack-check needed)."""
        sigma = inst.binding()
        pos = inst.pos
        out: list[TraceEvent] = []
        sent: list[Term] = []
        t = events[-1].t + 1 if events else 1
        touched = False
        while pos < len(inst.script):
            kind, idx, x = inst.script[pos]
            if kind == "recv":
                break
            if kind == "fresh":
                value = _fresh_value(x, inst.name)
                sigma[x] = value
                out.append(TraceEvent(t, "fresh", inst.name, term=value))
            elif kind == "send":
                msg = normalize(substitute(x.pattern, sigma))
                out.append(TraceEvent(t, "send", inst.name, term=msg, to=sigma[x.peer]))
                sent.append(msg)
                touched = touched or self.watch_sends
            else:
                args = tuple(normalize(substitute(a, sigma)) for a in x.args)
                out.append(TraceEvent(t, "claim", inst.name, label=x.label, args=args))
                touched = True
            t += 1
            pos += 1
        new = inst.moved(pos, sigma)
        if sent:
            kb = kb.add(*sent)
        return new, out, kb, touched

    def check(self, insts, events):
        trace = self.trace_of(insts, events)
        value, _ = eval_formula(self.formula, trace, self.spec)
        if value:
            return None
        if validate_attack(self.spec, trace).verdict != "valid-attack":
            self.stats.rejected += 1
            return None
        return trace

    def dfs(self, insts: tuple, events: tuple, kb: KnowledgeBase, earlier=frozenset()):
        """Depth-first search below one state.

        ``earlier`` holds moves that were already possible before the move
        that led here and belong to an instance ordered before it; taking one
        of them now would only reorder an interleaving explored elsewhere.
        """
        self.tick()
        self.stats.states += 1
        key = (insts, kb.base, tuple((e.label, e.args) for e in events if e.kind == "claim"), earlier)
        left = self.max_events - len(events)
        if self.memo.get(key, -1) >= left:
            self.stats.pruned += 1
            return None
        self.memo[key] = left
        if left <= 0:
            return None
        options = list(self.moves(insts, kb))
        signatures = [(o[1], o[2]) for o in options]
        for option, sig in zip(options, signatures):
            self.tick()
            if sig in earlier:
                self.stats.pruned += 1
                continue
            new_insts, new_events, new_kb, touched = self.apply(option, insts, list(events), kb)
            if len(new_events) > self.max_events:
                continue
            if touched:
                found = self.check(new_insts, new_events)
                if found is not None:
                    return found
            mine = option[1].order
            below = frozenset(x for x in signatures if x[0].order < mine) if self.reorder else frozenset()
            found = self.dfs(tuple(new_insts), tuple(new_events), new_kb, below)
            if found is not None:
                return found
        return None

    def moves(self, insts: tuple, kb: KnowledgeBase):
        """Possible moves, in deterministic order: (instance index or None for a new one, instance, message, kb)."""
        counts = {r: sum(1 for i in insts if i.role == r) for r in self.spec.roles}
        options = []
        for n, inst in enumerate(insts):
            item = inst.next_item()
            if item is not None and item[0] == "recv":
                options.append((n, inst))
        for role in self.spec.roles:
            if counts[role] < self.sessions:
                for peers in self.peer_choices(role):
                    options.append((None, self.new_instance(role, counts[role] + 1, peers)))
        for n, inst in options:
            item = inst.next_item()
            if item is None:
                continue
            here = kb if n is not None else self.with_session(kb, inst)
            if item[0] != "recv":
                yield n, inst, None, here
                continue
            pattern = normalize(substitute(item[2].pattern, inst.binding()))
            for msg in self.candidates(here, pattern):
                yield n, inst, msg, here

    def candidates(self, kb: KnowledgeBase, pattern: Term) -> list[Term]:
        key = (kb.base, pattern)
        hit = self._cand.get(key)
        if hit is None:
            if len(self._cand) > 100_000:
                self._cand.clear()
            hit = candidate_messages(kb, pattern, self.cfg.synth_depth, deadline=self.deadline)
            self._cand[key] = hit
        return hit

    def apply(self, option, insts: tuple, events: list, kb: KnowledgeBase):
        n, inst, msg, kb = option
        insts = list(insts)
        if n is None:
            insts.append(inst)
            n = len(insts) - 1
        touched = False
        if msg is not None:
            _, idx, st = inst.next_item()
            sigma = match_pattern(st.pattern, msg, inst.binding())
            assert sigma is not None
            t = events[-1].t + 1 if events else 1
            events.append(TraceEvent(t, "deliver", inst.name, term=msg))
            inst = inst.moved(inst.pos + 1, sigma)
        inst, out, kb, touched = self.advance(inst, events, kb)
        events.extend(out)
        insts[n] = inst
        return insts, events, kb, touched


def order_insensitive(f) -> bool:
    """True when swapping adjacent events of different instances cannot change the property's value.

    That holds when timepoints are only compared between claims of one label
    (as in the freshness lemma, which is symmetric in the two claims).
    """
    owner: dict[str, set] = {}
    for node in walk(f):
        if isinstance(node, Claim):
            owner.setdefault(node.time, set()).add(node.label)
        elif isinstance(node, Knows):
            owner.setdefault(node.time, set()).add(None)
    for node in walk(f):
        if isinstance(node, (Before, TimeEq)):
            a, b = owner.get(node.left, set()), owner.get(node.right, set())
            if len(a | b) != 1 or None in a | b:
                return False
    return True


def _fresh_value(var: str, instance: str) -> FreshName:
    return FreshName(f"{var}_{instance}")


def find_attack(spec: ProtocolSpec, cfg: SearchConfig | None = None,
                stats: SearchStats | None = None) -> SearchResult:
    """Search for a trace falsifying the protocol's property within the configured bounds.

    Raises ``SearchTimeout`` when the time budget runs out first.  Pass
    ``stats`` to watch progress from another thread.
    """
    cfg = cfg or SearchConfig()
    start = time.monotonic()
    deadline = start + cfg.time_budget
    stats = stats if stats is not None else SearchStats()
    search = _Search(spec, cfg, deadline, stats)
    try:
        for bound in _event_levels(cfg.max_events):
            stats.event_bound = bound
            for sessions in range(1, cfg.max_sessions + 1):
                stats.sessions = max(stats.sessions, sessions)
                found = search.run(sessions, bound)
                if found is not None:
                    stats.elapsed = time.monotonic() - start
                    return SearchResult(found, stats)
    except _Deadline:
        stats.elapsed = time.monotonic() - start
        raise SearchTimeout(stats) from None
    stats.elapsed = time.monotonic() - start
    return SearchResult(None, stats)


def _event_levels(max_events: int) -> list[int]:
    levels = list(range(6, max_events, 4))
    return [x for x in levels if x < max_events] + [max_events]

"""Attack traces: events, session bindings and the JSON exchange format.

A trace file looks like::

    {
      "protocol": "NSPK",
      "sessions": {"A1": {"role": "A", "bindings": {"A": "$a", "B": "$i", "skA": "~skA_a"}}},
      "events": [
        {"t": 1, "kind": "fresh", "actor": "A1", "term": "~Na_A1"},
        {"t": 2, "kind": "send", "actor": "A1", "to": "$i", "term": "aenc((~Na_A1, $a), pk(~skB_i))"},
        {"t": 3, "kind": "deliver", "actor": "B1", "term": "..."},
        {"t": 4, "kind": "claim", "actor": "B1", "label": "Secret", "args": ["~Nb_B1"]}
      ]
    }

Terms are written in the protocol term syntax and must be ground.  The
intruder never appears as an actor: it relays every send and produces every
delivery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from ._lexer import SyntaxErrorAt
from .term import AgentName, FreshName, MalformedTermError, Term, format_term, ground_term, iter_subterms, normalize

INTRUDER_AGENT = AgentName("i")
EVENT_KINDS = ("fresh", "send", "deliver", "claim")


class TraceStructureError(ValueError):
    """The trace document is malformed (as opposed to failing a check)."""


@dataclass(frozen=True)
class TraceEvent:
    t: int
    kind: str
    actor: str
    term: Term | None = None
    to: Term | None = None
    label: str | None = None
    args: tuple[Term, ...] = ()

    def terms(self) -> tuple[Term, ...]:
        out = tuple(x for x in (self.term, self.to) if x is not None)
        return out + self.args

    def to_dict(self) -> dict:
        d: dict = {"t": self.t, "kind": self.kind, "actor": self.actor}
        if self.term is not None:
            d["term"] = format_term(self.term)
        if self.to is not None:
            d["to"] = format_term(self.to)
        if self.kind == "claim":
            d["label"] = self.label
            d["args"] = [format_term(a) for a in self.args]
        return d


@dataclass(frozen=True)
class Session:
    role: str
    bindings: Mapping[str, Term] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"role": self.role, "bindings": {k: format_term(v) for k, v in sorted(self.bindings.items())}}


@dataclass(frozen=True)
class Trace:
    sessions: Mapping[str, Session]
    events: tuple[TraceEvent, ...]
    protocol: str | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "sessions": {k: s.to_dict() for k, s in sorted(self.sessions.items())},
            "events": [e.to_dict() for e in self.events],
        }
        if self.protocol is not None:
            out["protocol"] = self.protocol
        return out

    def prefix(self, n: int) -> "Trace":
        return Trace(self.sessions, self.events[:n], self.protocol)

    def replace_events(self, events) -> "Trace":
        return Trace(self.sessions, tuple(events), self.protocol)

    def long_term_names(self) -> set[FreshName]:
        """Fresh names supplied by session bindings and never generated in the trace."""
        generated = {e.term for e in self.events if e.kind == "fresh"}
        return {u for s in self.sessions.values() for v in s.bindings.values()
                for u in iter_subterms(v) if isinstance(u, FreshName) and u not in generated}


def dumps(trace: Trace) -> str:
    return json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n"


def loads(text: str, functions: Mapping[str, int] | None = None) -> Trace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TraceStructureError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return from_dict(doc, functions)


def from_dict(doc, functions: Mapping[str, int] | None = None) -> Trace:
    if not isinstance(doc, dict):
        raise TraceStructureError("trace must be an object")
    for key in ("sessions", "events"):
        if key not in doc:
            raise TraceStructureError(f"missing field {key!r}")
    raw_sessions, raw_events = doc["sessions"], doc["events"]
    if not isinstance(raw_sessions, dict) or not isinstance(raw_events, list):
        raise TraceStructureError("'sessions' must be an object and 'events' an array")

    def term(text, where: str) -> Term:
        if not isinstance(text, str):
            raise TraceStructureError(f"{where}: term must be a string")
        try:
            return normalize(ground_term(text, functions))
        except (SyntaxErrorAt, MalformedTermError) as e:
            raise TraceStructureError(f"{where}: {e}") from None

    sessions: dict[str, Session] = {}
    for inst, body in raw_sessions.items():
        if not isinstance(body, dict) or not isinstance(body.get("role"), str):
            raise TraceStructureError(f"session {inst!r}: needs a 'role' string")
        binds = body.get("bindings", {})
        if not isinstance(binds, dict):
            raise TraceStructureError(f"session {inst!r}: 'bindings' must be an object")
        sessions[inst] = Session(body["role"], {k: term(v, f"session {inst} binding {k}") for k, v in binds.items()})

    events: list[TraceEvent] = []
    for n, ev in enumerate(raw_events):
        where = f"event {n + 1}"
        if not isinstance(ev, dict):
            raise TraceStructureError(f"{where}: must be an object")
        t, kind, actor = ev.get("t"), ev.get("kind"), ev.get("actor")
        if not isinstance(t, int) or isinstance(t, bool) or t < 1:
            raise TraceStructureError(f"{where}: 't' must be a positive integer")
        if kind not in EVENT_KINDS:
            raise TraceStructureError(f"{where}: unknown kind {kind!r}")
        if not isinstance(actor, str):
            raise TraceStructureError(f"{where}: 'actor' must be a string")
        if kind == "claim":
            label, args = ev.get("label"), ev.get("args", [])
            if not isinstance(label, str) or not isinstance(args, list):
                raise TraceStructureError(f"{where}: claim needs 'label' and an 'args' array")
            events.append(TraceEvent(t, kind, actor, label=label,
                                     args=tuple(term(a, where) for a in args)))
            continue
        if "term" not in ev:
            raise TraceStructureError(f"{where}: missing 'term'")
        to = term(ev["to"], where) if kind == "send" and "to" in ev else None
        events.append(TraceEvent(t, kind, actor, term=term(ev["term"], where), to=to))
    trace = Trace(sessions, tuple(events), doc.get("protocol"))
    check_structure(trace)
    return trace


def check_structure(trace: Trace) -> None:
    """Raise ``TraceStructureError`` unless the trace is well formed on its own."""
    last = 0
    generated: set[FreshName] = set()
    long_term = trace.long_term_names()
    for ev in trace.events:
        if ev.t <= last:
            raise TraceStructureError(f"timepoint {ev.t} does not increase (previous {last})")
        last = ev.t
        if ev.actor not in trace.sessions:
            raise TraceStructureError(f"t={ev.t}: unknown actor {ev.actor!r}")
        if ev.kind == "fresh":
            if not isinstance(ev.term, FreshName):
                raise TraceStructureError(f"t={ev.t}: fresh event must carry a fresh name")
            if ev.term in generated:
                raise TraceStructureError(f"t={ev.t}: {format_term(ev.term)} generated twice")
            generated.add(ev.term)
            continue
        if ev.kind == "deliver":
            # what the intruder can produce is the intruder check's business
            continue
        for x in ev.terms():
            for u in iter_subterms(x):
                if isinstance(u, FreshName) and u not in generated and u not in long_term:
                    raise TraceStructureError(f"t={ev.t}: {format_term(u)} used before it is generated")

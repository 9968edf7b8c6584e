"""The three canonical attack-trace mutations, each aimed at one sandbox check."""

from __future__ import annotations

from dataclasses import replace

from dyproto.sandbox import eval_formula
from dyproto.term import FreshName

FORGED = FreshName("forged")


def underivable_delivery(trace):
    """Replace the first delivered payload with a nonce nobody ever emitted (intruder check)."""
    events = list(trace.events)
    i = next(i for i, e in enumerate(events) if e.kind == "deliver")
    events[i] = replace(events[i], term=FORGED)
    return trace.replace_events(events), events[i].t


def step_reorder(trace):
    """Swap an instance's first delivery with its next own send or claim (coherence check)."""
    events = list(trace.events)
    for i, e in enumerate(events):
        if e.kind != "deliver":
            continue
        later = [j for j in range(i + 1, len(events)) if events[j].actor == e.actor]
        for j in later:
            f = events[j]
            if f.kind in ("send", "claim"):
                events[i], events[j] = replace(f, t=e.t), replace(e, t=f.t)
                return trace.replace_events(events)
            break
    raise ValueError("no delivery followed by an action of the same instance")


def satisfying_truncation(spec, trace):
    """Longest proper prefix on which the property holds (validity check)."""
    for n in range(len(trace.events) - 1, -1, -1):
        prefix = trace.prefix(n)
        if eval_formula(spec.property.formula, prefix, spec)[0]:
            return prefix
    raise ValueError("property fails even on the empty trace")


MUTATIONS = {
    "underivable-delivery": "intruder",
    "step-reorder": "coherence",
    "truncation": "validity",
}


def mutate(kind, spec, trace):
    if kind == "underivable-delivery":
        return underivable_delivery(trace)[0]
    if kind == "step-reorder":
        return step_reorder(trace)
    return satisfying_truncation(spec, trace)

import time

import pytest

from conftest import ATTACKED, searched
from dyproto import dumps, load_corpus, validate_attack
from dyproto.deduce import KnowledgeBase
from dyproto.formula import parse_formula
from dyproto.search import SearchConfig, SearchTimeout, candidate_messages, find_attack, order_insensitive
from dyproto.term import App, AgentName, FreshName, PublicName, Var, format_term, xor

FAST = ["dh_aliveness", "hash_aliveness", "nspk", "reflection_authenticity", "xor_secrecy"]


def names(ts):
    return [format_term(t) for t in ts]


# -- intruder candidates -------------------------------------------------------


@pytest.fixture
def kb():
    return KnowledgeBase([FreshName("a"), AgentName("b"), App("senc", (FreshName("m"), FreshName("k")))])


def test_variable_candidates_are_atoms_plus_constants(kb):
    assert names(candidate_messages(kb, Var("X"), 1)) == ["$b", "g", "zero", "~a"]


def test_unknown_key_only_replays(kb):
    pattern = App("senc", (Var("M"), FreshName("k")))
    assert names(candidate_messages(kb, pattern, 3)) == ["senc(~m, ~k)"]


def test_pair_needs_a_composition_level(kb):
    pattern = App("pair", (Var("A"), Var("Y")))
    assert candidate_messages(kb, pattern, 1) == []
    out = candidate_messages(kb, pattern, 2)
    assert len(out) == 16 and all(kb.derivable(t) for t in out)
    assert candidate_messages(kb, pattern, 3) == out


def test_candidates_are_derivable_and_sorted(kb):
    pattern = xor(Var("X"), FreshName("a"))
    out = candidate_messages(kb, pattern, 2)
    assert out and all(kb.derivable(t) for t in out)
    assert names(out) == sorted(names(out))


# -- attacks found on the corpus -----------------------------------------------


def test_nspk_man_in_the_middle():
    result, _ = searched("nspk")
    spec = load_corpus("nspk")
    assert result.found and validate_attack(spec, result.trace).verdict == "valid-attack"
    # the initiator talks to the intruder, the responder believes it talks to the initiator
    sessions = result.trace.sessions
    initiators = [s for s in sessions.values() if s.role == "A"]
    responders = [s for s in sessions.values() if s.role == "B"]
    assert any(s.bindings["B"] == AgentName("i") for s in initiators)
    assert any(s.bindings["A"] == AgentName("a") for s in responders)


def test_xor_attack_shape():
    result, _ = searched("xor_secrecy")
    assert result.found
    events = result.trace.events
    sends = [e for e in events if e.kind == "send"]
    # the responder's reply is the shared key masked by a public value under the intruder's control
    reply = next(e.term for e in sends if e.actor.startswith("B"))
    assert reply.sym == "xor" and any(isinstance(u, FreshName) and u.ident.startswith("Kab") for u in reply.args)
    assert any(isinstance(u, (AgentName, PublicName)) or u == App("zero") for u in reply.args)
    # the initiator then encrypts M XOR Na under the key
    final = sends[-1].term
    assert final.sym == "senc" and final.args[0].sym == "xor"


def test_replay_within_two_sessions():
    result, _ = searched("replay_freshness")
    assert result.found
    per_role: dict = {}
    for s in result.trace.sessions.values():
        per_role[s.role] = per_role.get(s.role, 0) + 1
    assert max(per_role.values()) <= 2
    claims = [e for e in result.trace.events if e.kind == "claim" and e.label == "FreshTerm"]
    assert len(claims) == 2 and claims[0].args == claims[1].args and claims[0].actor != claims[1].actor


@pytest.mark.parametrize("name", ATTACKED)
def test_every_found_trace_is_sound(name):
    result, _ = searched(name)
    assert result.found
    assert validate_attack(load_corpus(name), result.trace).verdict == "valid-attack"


def test_secure_protocol_has_no_attack_in_small_bounds():
    result, _ = searched("nsl", 12)
    assert not result.found
    assert result.stats.states > 0


def test_search_is_deterministic():
    spec = load_corpus("nspk")
    first = find_attack(spec)
    second = find_attack(spec)
    assert dumps(first.trace) == dumps(second.trace)
    assert first.stats.states == second.stats.states


@pytest.mark.parametrize("name", FAST)
def test_bigger_bounds_still_find(name):
    result = find_attack(load_corpus(name), SearchConfig(max_sessions=3, synth_depth=4, max_events=28))
    assert result.found
    assert validate_attack(load_corpus(name), result.trace).verdict == "valid-attack"


def test_budget_is_respected():
    cfg = SearchConfig(max_sessions=4, synth_depth=4, max_events=60, time_budget=0.5)
    start = time.monotonic()
    with pytest.raises(SearchTimeout) as e:
        find_attack(load_corpus("nsl"), cfg)
    assert time.monotonic() - start < 1.5
    assert e.value.stats.states > 0


@pytest.mark.parametrize("field", ["max_sessions", "synth_depth", "max_events", "time_budget"])
def test_config_rejects_non_positive(field):
    with pytest.raises(ValueError):
        SearchConfig(**{field: 0})


def test_freshness_lemma_is_order_insensitive():
    assert order_insensitive(load_corpus("replay_freshness").property.formula)
    assert order_insensitive(load_corpus("xor_secrecy").property.formula)
    # ordering a claim against intruder knowledge is sensitive to interleaving
    assert not order_insensitive(parse_formula("not Ex m #i #j . Secret(m)@#i & K(m)@#j & #j < #i"))

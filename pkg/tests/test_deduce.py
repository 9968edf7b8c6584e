import random

from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import closure_derivable, gf2_in_span, random_case, random_xor_instance, terms, vector_term
from dyproto.deduce import KnowledgeBase, derivable, derivation
from dyproto.term import ZERO, App, FreshName, PublicName, normalize, xor

m, k, na, n, a, b = (FreshName(s) for s in ("m", "k", "na", "n", "a", "b"))


def senc(msg, key):
    return App("senc", (msg, key))


def kb(*terms_):
    return KnowledgeBase(terms_)


# -- analysis ------------------------------------------------------------------


def test_projection():
    assert {a, b} <= kb(App("pair", (a, b))).analyzed


def test_decryption_with_known_key():
    assert m in kb(senc(m, k), k).analyzed


def test_no_decryption_without_key():
    assert m not in kb(senc(m, k)).analyzed


def test_analyzed_contains_base_and_is_fixed_point():
    base = kb(App("pair", (senc(m, k), k)))
    assert base.base <= base.analyzed
    again = KnowledgeBase(base.analyzed)
    assert again.analyzed == base.analyzed


# -- derivability ----------------------------------------------------------------


def test_xor_unit():
    assert derivable(kb(xor(k, ZERO)), k)


def test_xor_cancellation():
    assert derivable(kb(xor(na, k), na), k)


def test_secret_recovered_from_masked_key():
    # zero sent to the responder comes back as the bare key
    assert derivable(kb(xor(k, ZERO), na, senc(xor(m, na), k)), m)


def test_ciphertext_does_not_leak_plaintext():
    goal_kb = [senc(m, k)]
    assert not derivable(KnowledgeBase(goal_kb), m)
    assert not closure_derivable(goal_kb, m)


def test_public_and_agent_names_always_derivable():
    empty = kb()
    assert derivable(empty, PublicName("c"))
    assert derivable(empty, App("pair", (PublicName("c"), ZERO)))
    assert not derivable(empty, FreshName("x"))


def test_exponent_extension():
    x, y = FreshName("x"), FreshName("y")
    g = App("g")
    share = App("exp", (g, x))
    assert derivable(kb(share, y), normalize(App("exp", (App("exp", (g, y)), x))))
    assert not derivable(kb(share), normalize(App("exp", (App("exp", (g, y)), x))))


# -- derivations -----------------------------------------------------------------


def test_derivation_compose():
    d = derivation(kb(a, b), App("pair", (a, b)))
    assert d.rule == "compose"
    assert [c.rule for c in d.children] == ["analyzed-member", "analyzed-member"]


def test_derivation_after_analysis():
    d = derivation(kb(k, senc(m, k)), m)
    assert d.rule == "analyzed-member" and not d.children


def test_derivation_absent_for_hash_preimage():
    assert derivation(kb(App("h", (n,))), n) is None


def test_derivation_xor_combine():
    d = derivation(kb(xor(na, k), xor(k, m)), xor(na, m))
    assert d.rule == "xor-combine"
    assert len(d.children) == 2
    assert d.to_dict()["rule"] == "xor-combine"


# -- properties ------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_agrees_with_closure_oracle(seed):
    base, goal = random_case(random.Random(seed))
    assert KnowledgeBase(base).derivable(goal) == closure_derivable(base, goal)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_xor_layer_agrees_with_gf2(seed):
    n_atoms, vecs, goal = random_xor_instance(random.Random(seed))
    names = [FreshName(f"x{i}") for i in range(n_atoms)]
    base = KnowledgeBase([vector_term(v, names) for v in vecs])
    assert base.derivable(vector_term(goal, names)) == gf2_in_span(goal, vecs)


@settings(max_examples=150, deadline=None)
@given(st.lists(terms(2), min_size=1, max_size=5), terms(2), terms(2))
def test_monotonicity(base, extra, goal):
    small = KnowledgeBase(base)
    big = small.add(extra)
    assert small.analyzed <= big.analyzed
    if small.derivable(goal):
        assert big.derivable(goal)


@settings(max_examples=150, deadline=None)
@given(st.lists(terms(3), min_size=1, max_size=6))
def test_reflexivity(base):
    k_ = KnowledgeBase(base)
    assert all(k_.derivable(t) for t in k_.base)


@settings(max_examples=100, deadline=None)
@given(st.lists(terms(2), min_size=1, max_size=5), terms(2))
def test_derivation_present_iff_derivable(base, goal):
    k_ = KnowledgeBase(base)
    assert (derivation(k_, goal) is not None) == k_.derivable(goal)


@settings(max_examples=100, deadline=None)
@given(st.lists(terms(2), min_size=1, max_size=5), st.lists(terms(2), min_size=1, max_size=3))
def test_incremental_add_matches_fresh_build(base, extra):
    assert KnowledgeBase(base).add(*extra).analyzed == KnowledgeBase(base + extra).analyzed

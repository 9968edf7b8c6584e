import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import KEYS, terms, xor_terms
from dyproto.term import (
    SIGNATURE,
    TRUE,
    ZERO,
    App,
    FreshName,
    MalformedTermError,
    PublicName,
    Var,
    equal_mod_theory,
    format_term,
    ground_term,
    match_pattern,
    normalize,
    pair,
    parse_term,
    substitute,
    subterms,
    xor,
)

a, b, c, m, k, k2, x, y = (PublicName(n) for n in ("a", "b", "c", "m", "k", "k2", "x", "y"))
g = App("g")


def senc(msg, key):
    return App("senc", (msg, key))


def exp(base, e):
    return App("exp", (base, e))


# -- normalize -----------------------------------------------------------------


def test_xor_unit():
    assert normalize(xor(m, ZERO)) == m


def test_xor_cancellation_and_flattening():
    assert normalize(xor(a, xor(b, a))) == b


def test_exponent_multiset_symmetry():
    assert normalize(exp(exp(g, x), y)) == normalize(exp(exp(g, y), x))


def test_xor_self_is_zero():
    assert normalize(xor(k, k)) == ZERO


def test_canonical_xor_shape():
    t = normalize(xor(c, xor(a, ZERO), b, xor(c, c)))
    assert isinstance(t, App) and t.sym == "xor"
    assert ZERO not in t.args
    assert len(set(t.args)) == len(t.args)
    assert not any(isinstance(u, App) and u.sym == "xor" for u in t.args)
    assert normalize(xor(*reversed(t.args))) == t


@pytest.mark.parametrize("redex, result", [
    (App("sdec", (senc(m, k), k)), m),
    (App("adec", (App("aenc", (m, App("pk", (k,)))), k)), m),
    (App("fst", (pair(a, b),)), a),
    (App("snd", (pair(a, b),)), b),
    (App("extract", (App("sign", (m, k)),)), m),
    (App("verify", (App("sign", (m, k)), m, App("pk", (k,)))), TRUE),
])
def test_destructor_laws(redex, result):
    assert normalize(redex) == result


def test_destructor_with_wrong_key_stays():
    t = normalize(App("sdec", (senc(m, k), k2)))
    assert isinstance(t, App) and t.sym == "sdec"
    assert normalize(App("verify", (App("sign", (m, k)), m, App("pk", (k2,))))) != TRUE


def test_arity_violation():
    with pytest.raises(MalformedTermError):
        normalize(App("senc", (m,)))
    with pytest.raises(MalformedTermError):
        normalize(App("h", (a, b)))


def test_signature_is_exactly_the_builtin_set():
    expected = {"pair": 2, "fst": 1, "snd": 1, "senc": 2, "sdec": 2, "aenc": 2, "adec": 2, "pk": 1,
                "sign": 2, "verify": 3, "extract": 1, "h": 1, "xor": 2, "zero": 0, "exp": 2, "g": 0}
    assert {n: s.arity for n, s in SIGNATURE.items()} == expected


# -- equal_mod_theory ------------------------------------------------------------


def test_equal_mod_theory_examples():
    assert equal_mod_theory(xor(a, b), xor(b, a))
    assert not equal_mod_theory(senc(m, k), senc(m, k2))
    assert equal_mod_theory(App("sdec", (senc(m, k), k)), m)


# -- matching --------------------------------------------------------------------


def test_match_message_shape_with_pair_and_encryption():
    A, M, Key = Var("A"), Var("M"), Var("Key")
    alice, m1, k1 = PublicName("alice"), PublicName("m1"), FreshName("k1")
    pattern = pair(A, senc(pair(A, M), Key))
    subject = pair(alice, senc(pair(alice, m1), k1))
    assert match_pattern(pattern, subject, {}) == {"A": alice, "M": m1, "Key": k1}


def test_match_pattern_var_and_mismatch():
    t = senc(pair(a, b), k)
    assert match_pattern(Var("X"), t, {}) == {"X": t}
    assert match_pattern(senc(Var("M"), k), App("h", (FreshName("n"),)), {}) is None


def test_match_respects_partial():
    assert match_pattern(pair(Var("A"), Var("B")), pair(a, b), {"A": b}) is None
    assert match_pattern(pair(Var("A"), Var("B")), pair(a, b), {"A": a}) == {"A": a, "B": b}


def test_match_solves_single_xor_unknown():
    sigma = match_pattern(xor(Var("N"), k), xor(a, k), {})
    assert sigma == {"N": a}
    # two unknown summands are not solved
    assert match_pattern(xor(Var("N"), Var("K")), xor(a, k), {}) is None


def test_match_exp_single_unknown_exponent():
    sigma = match_pattern(exp(exp(g, Var("X")), y), normalize(exp(exp(g, x), y)), {})
    assert sigma == {"X": x}


# -- subterms --------------------------------------------------------------------


def test_subterms_examples():
    assert subterms(pair(a, b)) == {pair(a, b), a, b}
    assert subterms(ZERO) == {ZERO}
    assert subterms(senc(pair(a, b), k)) == {senc(pair(a, b), k), pair(a, b), a, b, k}


# -- textual syntax ----------------------------------------------------------------


def test_parse_and_format():
    t = normalize(parse_term("senc((A, M) XOR zero, exp(exp(g, X), Y))"))
    assert format_term(t) == "senc(('A', 'M'), exp(exp(g, 'X'), 'Y'))"
    assert normalize(ground_term("~n XOR $a XOR ~n")) == ground_term("$a")
    assert ground_term("($a, ~n, h(k))") == pair(ground_term("$a"), FreshName("n"), App("h", (PublicName("k"),)))


# -- properties ------------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(terms())
def test_normalize_idempotent(t):
    n = normalize(t)
    assert normalize(n) == n


@settings(max_examples=300, deadline=None)
@given(terms())
def test_format_parse_round_trip(t):
    n = normalize(t)
    assert normalize(ground_term(format_term(n))) == n


@settings(max_examples=300, deadline=None)
@given(xor_terms(), xor_terms(), xor_terms())
def test_xor_acun(p, q, r):
    assert equal_mod_theory(xor(p, xor(q, r)), xor(xor(p, q), r))
    assert equal_mod_theory(xor(p, q), xor(q, p))
    assert equal_mod_theory(xor(p, ZERO), p)
    assert equal_mod_theory(xor(p, p), ZERO)


@settings(max_examples=300, deadline=None)
@given(terms(), terms())
def test_ground_match_iff_equal(p, s):
    assert (match_pattern(p, s, {}) is not None) == equal_mod_theory(p, s)
    assert match_pattern(p, p, {}) == {}


@settings(max_examples=200, deadline=None)
@given(terms(), st.sampled_from(KEYS))
def test_destructors_under_random_payloads(t, key):
    assert normalize(App("sdec", (senc(t, key), key))) == normalize(t)
    assert normalize(App("adec", (App("aenc", (t, App("pk", (key,)))), key))) == normalize(t)
    assert normalize(App("extract", (App("sign", (t, key)),))) == normalize(t)


@settings(max_examples=200, deadline=None)
@given(terms(2), terms(2))
def test_substitution_idempotent(t1, t2):
    pattern = pair(Var("X"), senc(Var("Y"), Var("X")))
    sigma = {"X": normalize(t1), "Y": normalize(t2)}
    once = substitute(pattern, sigma)
    assert substitute(once, sigma) == once

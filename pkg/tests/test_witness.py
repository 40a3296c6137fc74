from __future__ import annotations

import itertools

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import FULL_SIG, S, load_spec, load_structure, sentences, structures
from modelsmith.fol import format_formula, negate, skolemize, to_prenex
from modelsmith.structure import SortedStructure, eval_term, evaluate
from modelsmith.terms import NAT, ground_terms, height
from modelsmith.theory import PropertyTemplate, full_signature, instantiate_property
from modelsmith.witness import (
    format_value_map,
    ground_value_map,
    refutation_witnesses,
    skolem_value,
    surjectivity_report,
)

HEAD = load_spec("exaddmulhead")
WCR = load_spec("wcr")
TOP = load_spec("topterm")


def prop(name, spec):
    return instantiate_property(PropertyTemplate.parse(name), spec)


def test_value_map_for_head_model():
    A = load_structure("head_symbolic")
    m = ground_value_map(A, HEAD.signature)
    assert format_value_map(m, A).splitlines() == [
        "[Z] = -1 : N",
        "[add(Z, Z)] = 0 : N",
        "[cons(Z, nil)] = -1 : LN",
        "[nil] = 0 : LN",
    ]
    assert m.fixpoint and not any(m.unreached.values())
    assert str(m.term_for(NAT, 3)) == "3"
    assert [r.status for r in surjectivity_report(m, ["N", "LN", NAT])] == ["pass"] * 3


def test_unreached_elements():
    sig = WCR.signature
    A = SortedStructure({S: 3}, dict(sig.functions), {}, {c: {(): 0} for c in "abcd"})
    m = ground_value_map(A, sig)
    assert m.unreached[S] == frozenset({1, 2})
    (row,) = surjectivity_report(m, [S])
    assert row.status == "fail" and "[1, 2]" in row.detail


def test_exploration_bound_is_inconclusive():
    spec = load_spec("exaddmul")
    A = load_structure("example1")
    m = ground_value_map(A, spec.signature, height_bound=0)
    assert not m.fixpoint
    (row,) = surjectivity_report(m, [S])
    assert row.status == "inconclusive"
    assert str(ground_value_map(A, spec.signature).term_for(S, 1)) == "s(0)"


def test_head_witness():
    A = load_structure("head_symbolic")
    sk = skolemize(to_prenex(negate(prop("CompletelyDefinedSymbol:head", HEAD))), full_signature(HEAD))
    ws = refutation_witnesses(sk, A, ground_value_map(A, HEAD.signature))
    assert ws.listing() == "[-] (forall x:N) ~(head(nil) ->_N x)"
    assert all(evaluate(A, f) for f in ws.sentences)


def test_confluence_witness():
    A = load_structure("cr_three")
    sk = skolemize(to_prenex(negate(prop("CR", WCR))), full_signature(WCR))
    ws = refutation_witnesses(sk, A, ground_value_map(A, WCR.signature))
    assert ws.listing() == "[-] (forall u:S) b ->*_S a /\\ b ->*_S d /\\ (~(a ->*_S u) \\/ ~(d ->*_S u))"
    assert ws.skolem_values == {"sk_x": {(): 1}, "sk_y": {(): 0}, "sk_z": {(): 2}}
    assert not ws.truncated


def test_top_termination_witnesses_use_numerals():
    A = load_structure("topterm_linear")
    sk = skolemize(to_prenex(prop("TopTermination:S", TOP)), full_signature(TOP))
    ws = refutation_witnesses(sk, A, ground_value_map(A, TOP.signature))
    assert ws.listing().splitlines() == [
        "[x=-1] (forall y:S) ~(->n_S(non, 2, y))",
        "[x=0] (forall y:S) ~(->n_S(g, 1, y))",
        "[x=1] (forall y:S) ~(->n_S(a, 0, y))",
    ]
    x = sk.source.prefix[0][1]
    assert skolem_value(A, sk, 2, {x: 0}) == 2


def test_witness_limit():
    A = load_structure("topterm_linear")
    sk = skolemize(to_prenex(prop("TopTermination:S", TOP)), full_signature(TOP))
    ws = refutation_witnesses(sk, A, ground_value_map(A, TOP.signature), limit=2)
    assert len(ws.witnesses) == 2 and ws.truncated
    assert ws.listing().endswith("... (truncated)")


# ---------------------------------------------------------------- properties

ALL_TERMS = ground_terms(FULL_SIG, S, 3)


@settings(max_examples=200, deadline=None)
@given(structures())
def test_value_map_round_trip_and_minimality(A):
    m = ground_value_map(A, FULL_SIG)
    least = {}
    for t in ALL_TERMS:
        v = eval_term(A, t, {})
        least.setdefault(v, height(t))
    for e, t in m.terms[S].items():
        assert eval_term(A, t, {}) == e
        assert height(t) == least[e]
    assert set(m.terms[S]) | m.unreached[S] == set(A.elements(S))
    assert m.fixpoint
    assert m.unreached[S] == set(A.elements(S)) - set(least)


@settings(max_examples=200, deadline=None)
@given(sentences(max_leaves=5), structures())
def test_witnesses_hold_in_the_counter_model(phi, A):
    m = ground_value_map(A, FULL_SIG)
    assume(not m.unreached[S])
    assume(not evaluate(A, phi))
    sk = skolemize(to_prenex(negate(phi)), FULL_SIG)
    ws = refutation_witnesses(sk, A, m)
    assert ws.witnesses
    for w in ws.witnesses:
        assert evaluate(A, w.sentence), format_formula(w.sentence)


@settings(max_examples=200, deadline=None)
@given(sentences(max_leaves=5), structures(), st.data())
def test_skolem_form_holds_iff_every_witness_holds(phi, A, data):
    # any interpretation of the Skolem symbols over a surjective structure
    m = ground_value_map(A, FULL_SIG)
    assume(not m.unreached[S])
    sk = skolemize(to_prenex(phi), FULL_SIG)
    tabs, ranks = {}, {}
    for f in sk.skolem_symbols:
        w, s = sk.signature.functions[f]
        args = itertools.product(*(range(A.size(si)) for si in w))
        tabs[f] = {a: data.draw(st.integers(0, A.size(s) - 1)) for a in args}
        ranks[f] = (w, s)
    B = A.with_tables(functions=tabs, fn_ranks=ranks)
    ws = refutation_witnesses(sk, B, m, limit=10 ** 4)
    assert not ws.truncated
    assert evaluate(B, sk.to_formula()) == all(evaluate(B, w.sentence) for w in ws.witnesses)

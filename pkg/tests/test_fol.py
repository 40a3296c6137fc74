from __future__ import annotations

import itertools

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import FULL_SIG, load_spec, sentences, structures
from modelsmith.fol import (
    Atom,
    FormulaError,
    Not,
    dnf,
    format_formula,
    negate,
    parse_formula,
    quantifier_analysis,
    relevant_sorts,
    skolemize,
    to_prenex,
)
from modelsmith.structure import evaluate
from modelsmith.terms import Signature, SpecError
from modelsmith.theory import PropertyTemplate, full_signature, instantiate_property

HEAD = load_spec("exaddmulhead")
WCR = load_spec("wcr")
TOP = load_spec("topterm")


def prop(name, spec):
    return instantiate_property(PropertyTemplate.parse(name), spec)


def show(f):
    return format_formula(f)


def test_negate_dualizes_quantifiers():
    phi = prop("CompletelyDefinedSymbol:head", HEAD)
    assert show(negate(phi)) == "(exists xs:LN)(forall x:N) ~(head(xs) ->_N x)"
    assert negate(negate(phi)) == phi
    inf = prop("InfinitelyRootReducible:S", TOP)
    assert show(inf) == "(exists x:S)(forall n:Nat)(exists y:S) ->n_S(x, n, y)"
    assert show(negate(inf)) == "(forall x:S)(exists n:Nat)(forall y:S) ~(->n_S(x, n, y))"


def test_prenex_of_cr():
    psi = to_prenex(prop("CR", WCR))
    assert [q for q, _ in psi.prefix] == ["forall"] * 3 + ["exists"]
    assert [[(l.positive, format_formula(l.atom)) for l in c] for c in psi.matrix] == [
        [(False, "x ->*_S y")], [(False, "x ->*_S z")], [(True, "y ->*_S u"), (True, "z ->*_S u")]]
    assert show(psi.to_formula()) == \
        "(forall x:S)(forall y:S)(forall z:S)(exists u:S) ~(x ->*_S y) \\/ ~(x ->*_S z) \\/ y ->*_S u /\\ z ->*_S u"


def test_prenex_of_ground_atom():
    a = parse_formula("b ->_S a", full_signature(WCR))
    psi = to_prenex(a)
    assert psi.prefix == ()
    assert psi.to_formula() == a


def test_prenex_of_negated_wcr():
    psi = to_prenex(negate(prop("WCR", WCR)))
    assert [q for q, _ in psi.prefix] == ["exists"] * 3 + ["forall"]
    assert [len(c) for c in psi.matrix] == [3, 3]
    assert psi.negative_predicates() == ["->*_S"]
    assert not psi.positive


def test_prenex_renames_apart():
    sig = full_signature(WCR)
    f = parse_formula("((exists x:S) x ->_S a) /\\ ((exists x:S) b ->_S x)", sig)
    names = [v.name for v in to_prenex(f).variables]
    assert len(set(names)) == 2


def test_quantifier_analysis_examples():
    qa = quantifier_analysis(to_prenex(negate(prop("CompletelyDefinedSymbol:head", HEAD))))
    assert (qa.E, qa.U, qa.U_exists, qa.U_forall) == ((1,), (2,), (), (2,))
    qa = quantifier_analysis(to_prenex(prop("TopTermination:S", TOP)))
    assert (qa.U, qa.E, qa.U_exists, qa.U_forall) == ((1, 3), (2,), (1,), (3,))
    assert qa.eta(2) == 1
    qa = quantifier_analysis(to_prenex(negate(prop("CR", WCR))))
    assert (qa.E, qa.U_exists, qa.U_forall) == ((1, 2, 3), (), (4,))
    assert [qa.eta(e) for e in qa.E] == [0, 0, 0]


def test_skolemize_commutativity():
    spec = load_spec("exaddmul")
    phi = prop("Joinability:add(x,y),add(y,x)", spec)
    sk = skolemize(to_prenex(negate(phi)), full_signature(spec))
    assert show(sk.to_formula()) == "(forall z:S) ~(add(sk_x, sk_y) ->*_S z) \\/ ~(add(sk_y, sk_x) ->*_S z)"
    assert sk.signature.functions["sk_x"] == ((), "S")


def test_skolemize_cr():
    sk = skolemize(to_prenex(negate(prop("CR", WCR))), full_signature(WCR))
    assert str(sk) == "(forall u:S) sk_x ->*_S sk_y /\\ sk_x ->*_S sk_z /\\ (~(sk_y ->*_S u) \\/ ~(sk_z ->*_S u))"
    assert sk.skolem_symbols == ["sk_x", "sk_y", "sk_z"]


def test_skolemize_nat_index_is_monadic():
    phi = prop("TopTermination:S", TOP)
    sk = skolemize(to_prenex(phi), full_signature(TOP))
    assert show(sk.to_formula()) == "(forall x:S)(forall y:S) ~(->n_S(x, sk_n(x), y))"
    assert sk.signature.functions["sk_n"] == (("S",), "Nat")


def test_skolem_names_avoid_collisions():
    sig = Signature(("S",), {"sk_x": ((), "S")}, {"P": ("S",)})
    sk = skolemize(to_prenex(parse_formula("(exists x:S) P(x)", sig)), sig)
    assert sk.skolem_symbols == ["sk_x2"]


def test_relevant_sorts_examples():
    assert relevant_sorts(HEAD.signature, "LN") == {"N", "LN"}
    assert relevant_sorts(HEAD.signature, "N") == {"N", "LN"}
    assert relevant_sorts(Signature(("S", "T")), "S") == {"S"}


def test_dnf_guard():
    sig = full_signature(WCR)
    parts = " /\\ ".join(f"(a ->_S {c} \\/ b ->_S {c})" for c in "abcd" * 3)
    with pytest.raises(FormulaError):
        dnf(parse_formula(parts, sig), limit=512)


def test_parse_errors():
    sig = full_signature(WCR)
    with pytest.raises(SpecError, match="end of formula"):
        parse_formula("(forall x:S) x ->_S", sig)
    with pytest.raises(SpecError):
        parse_formula("q ->_S a", sig)


# ---------------------------------------------------------------- properties

SUITE = settings(max_examples=200, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


def skolem_extensions(A, sk):
    """Every interpretation of the Skolem symbols over the carriers of ``A``."""
    syms = sk.skolem_symbols
    cells = []
    for f in syms:
        w, s = sk.signature.functions[f]
        args = list(itertools.product(*(range(A.size(si)) for si in w)))
        cells.append([dict(zip(args, vals)) for vals in itertools.product(range(A.size(s)), repeat=len(args))])
    ranks = {f: sk.signature.functions[f] for f in syms}
    for tabs in itertools.product(*cells):
        yield A.with_tables(functions=dict(zip(syms, tabs)), fn_ranks=ranks)


@SUITE
@given(sentences(max_leaves=4), structures(max_size=2))
def test_skolem_form_equisatisfiable_over_base(phi, A):
    psi = to_prenex(phi)
    sk = skolemize(psi, FULL_SIG)
    some = any(evaluate(B, sk.to_formula()) for B in skolem_extensions(A, sk))
    assert some == evaluate(A, phi)
    # every extension satisfying the Skolem form restricts to a model
    for B in skolem_extensions(A, sk):
        if evaluate(B, sk.to_formula()):
            assert evaluate(B.reduct(FULL_SIG), psi.to_formula())
            break


def signatures():
    sorts = ("A", "B", "C", "D")
    rank = st.tuples(st.lists(st.sampled_from(sorts), max_size=2).map(tuple), st.sampled_from(sorts))
    return st.dictionaries(st.sampled_from([f"f{i}" for i in range(6)]), rank, max_size=6)


@SUITE
@given(signatures(), signatures(), st.sampled_from(("A", "B", "C", "D")))
def test_relevant_sorts_monotone_and_idempotent(fns, more, s):
    sorts = ("A", "B", "C", "D")
    small = Signature(sorts, fns)
    big = Signature(sorts, {**more, **fns})
    K = relevant_sorts(small, s)
    assert s in K
    assert K <= relevant_sorts(big, s)
    assert set().union(*(relevant_sorts(small, t) for t in K)) == K
    for f, (w, r) in fns.items():
        if r in K:
            assert set(w) <= K


@SUITE
@given(sentences(), structures())
def test_negation_literals_flip(phi, A):
    psi = to_prenex(phi)
    neg = to_prenex(negate(phi))
    assert [q for q, _ in psi.prefix] == [("exists" if q == "forall" else "forall") for q, _ in neg.prefix]
    assert evaluate(A, Not(phi)) == evaluate(A, neg.to_formula())
    assert all(isinstance(l.atom, Atom) for c in neg.matrix for l in c)

"""Randomized agreement checks between the engines and brute-force oracles."""
from __future__ import annotations

import itertools

from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from helpers import FULL_SIG, S, all_structures, ground_trs_text, sentences, structures
from modelsmith.closure import deductive_closure
from modelsmith.finder import SearchConfig, find_model, iter_models
from modelsmith.fol import Atom, format_formula, negate, skolemize, to_prenex
from modelsmith.lia import Dvd, Lin, PAll, PEx, PNot, cmp, decide, p_and, p_or, p_subst
from modelsmith.structure import check_model, evaluate
from modelsmith.surjectivity import suh_ground
from modelsmith.terms import Signature, ground_terms, parse_spec, parse_term
from modelsmith.theory import PropertyTemplate, empty_theory, instantiate_property, star_pred, step_pred, theory_for
from modelsmith.witness import ground_value_map, refutation_witnesses

SUITE = settings(max_examples=200, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])

# ---------------------------------------------------------------- prenex / negation

@SUITE
@given(sentences(), structures())
def test_prenex_and_negation_preserve_truth(phi, A):
    truth = evaluate(A, phi)
    assert evaluate(A, negate(phi)) == (not truth)
    psi = to_prenex(phi)
    assert evaluate(A, psi.to_formula()) == truth
    assert evaluate(A, psi.to_formula(display=True)) == truth
    assert evaluate(A, to_prenex(negate(phi)).to_formula()) == (not truth)


# ---------------------------------------------------------------- model finder

@st.composite
def finder_cases(draw):
    n = draw(st.integers(1, 3))
    fns = ("a", "b", "f")
    preds = ("P", "R") if n <= 2 else ("P",)
    phis = draw(st.lists(sentences(fns=fns, preds=preds, max_leaves=5), min_size=1, max_size=2))
    sig = Signature((S,), {f: FULL_SIG.functions[f] for f in fns}, {p: FULL_SIG.predicates[p] for p in preds})
    return n, sig, phis


@SUITE
@given(finder_cases(), st.booleans())
def test_find_model_agrees_with_enumeration(case, symmetry):
    n, sig, phis = case
    T = empty_theory(sig).with_sentences(phis, "random")
    expected = any(all(evaluate(A, f) for f in phis) for A in all_structures(sig, n))
    res = find_model(T, SearchConfig(sizes={S: (n, n)}, symmetry=symmetry))
    assert res.status == ("sat" if expected else "unsat")
    if res.sat:
        assert check_model(res.model, T).ok


@settings(max_examples=200, deadline=None)
@given(st.lists(sentences(fns=("a", "f"), preds=("P",), max_leaves=4), min_size=1, max_size=2),
       st.integers(1, 2))
def test_model_count_matches_enumeration(phis, n):
    sig = Signature((S,), {"a": ((), S), "f": ((S,), S)}, {"P": (S,)})
    T = empty_theory(sig).with_sentences(phis, "random")
    expected = sum(all(evaluate(A, f) for f in phis) for A in all_structures(sig, n))
    got = list(iter_models(T, {S: n}, SearchConfig(symmetry=False), limit=100))
    assert len(got) == expected
    assert len({format_formula(f) for f in phis}) >= 1


# ---------------------------------------------------------------- closure

CONSTS = ("a", "b", "c", "d")
pairs = st.tuples(st.sampled_from(CONSTS), st.sampled_from(CONSTS))


def least_model(rules, conditional):
    """Naive fixpoint of one-step and many-step reachability on constants."""
    step: set = set()
    while True:
        star = {(c, c) for c in CONSTS}
        changed = True
        while changed:
            changed = False
            for (u, v) in step:
                for (v2, w) in list(star):
                    if v2 == v and (u, w) not in star:
                        star.add((u, w))
                        changed = True
        new = set(rules) | {(l, r) for l, r, u, v in conditional if (u, v) in star}
        if new == step:
            return step, star
        step = new


@SUITE
@given(st.lists(pairs, max_size=6), st.lists(st.tuples(st.sampled_from(CONSTS), st.sampled_from(CONSTS),
                                                         st.sampled_from(CONSTS), st.sampled_from(CONSTS)),
                                               max_size=3))
def test_closure_matches_reachability_oracle(rules, conditional):
    spec = parse_spec(ground_trs_text(rules, conditional=conditional))
    R = theory_for(spec)
    cl = deductive_closure(R, 2)
    step, star = least_model(rules, conditional)
    as_pairs = lambda p: {(u.symbol, v.symbol) for u, v in cl.atoms[p]}
    assert as_pairs(step_pred(S)) == step
    assert as_pairs(star_pred(S)) == star
    assert cl.saturated and cl.universe_closed
    # the induced Herbrand structure is a model and agrees atom by atom
    H = cl.herbrand_structure(R.signature)
    assert check_model(H, R).ok
    sig = R.signature
    for u, v in itertools.product(CONSTS, repeat=2):
        a = Atom(star_pred(S), (parse_term(u, sig), parse_term(v, sig)))
        assert evaluate(H, a) == ((u, v) in star)


# ---------------------------------------------------------------- surjectivity

SURJ_SIG = Signature((S,), {"a": ((), S), "b": ((), S), "f": ((S,), S), "g": ((S, S), S)}, {})


@SUITE
@given(st.lists(st.sampled_from(ground_terms(SURJ_SIG, S, 1)), min_size=1, max_size=4, unique=True),
       st.integers(1, 4), st.data())
def test_suh_ground_forces_surjectivity(T, n, data):
    theory = suh_ground(SURJ_SIG, S, T).theory()
    models = list(iter_models(theory, {S: n}, SearchConfig(), limit=5))
    if n > len(T):
        assert models == []
    for A in models:
        m = ground_value_map(A, SURJ_SIG, height_bound=3)
        assert not m.unreached[S]
        assert A.size(S) <= len(T)


# ---------------------------------------------------------------- Cooper

coef = st.integers(-3, 3)
small = st.integers(-6, 6)


def presburger_atoms(vs):
    lin = st.builds(lambda cs, c: Lin.of(dict(zip(vs, cs)), c), st.lists(coef, min_size=len(vs), max_size=len(vs)), small)
    return st.one_of(
        st.builds(lambda t, op: cmp(t, op, Lin.num(0)), lin, st.sampled_from([">", ">=", "=", "!=", "<"])),
        st.builds(lambda d, t: Dvd(d, t) if t.coeffs else (t.const % d == 0), st.integers(2, 3), lin),
    )


def presburger_qf(vs):
    return st.recursive(
        presburger_atoms(vs),
        lambda inner: st.one_of(
            st.builds(lambda p, q: p_and(p, q), inner, inner),
            st.builds(lambda p, q: p_or(p, q), inner, inner),
            inner.map(lambda p: (not p) if isinstance(p, bool) else PNot(p)),
        ),
        max_leaves=4,
    )


def bounded(f, env, bounds, depth=0):
    if isinstance(f, (PEx, PAll)):
        rng = range(bounds[depth] + 1)
        it = (bounded(f.body, {**env, f.var: k}, bounds, depth + 1) for k in rng)
        return any(it) if isinstance(f, PEx) else all(it)
    from modelsmith.lia import evaluate_presburger
    return evaluate_presburger(f, env)


@SUITE
@given(presburger_qf(["x", "y"]), st.booleans(), st.integers(0, 5))
def test_cooper_single_quantifier(body, existential, y):
    f = PEx("x", body) if existential else PAll("x", body)
    closed = p_subst(f, "y", Lin.num(y))
    assert decide(closed) == bounded(f, {"y": y}, [60])


def unit_lin(vs):
    return st.builds(lambda cs, c: Lin.of(dict(zip(vs, cs)), c),
                     st.lists(st.integers(-1, 1), min_size=len(vs), max_size=len(vs)), st.integers(-5, 5))


@SUITE
@given(st.lists(st.builds(lambda t, op: cmp(t, op, Lin.num(0)), unit_lin(["x", "z"]),
                          st.sampled_from([">", ">=", "="])), min_size=1, max_size=3),
       st.sampled_from(["EE", "AE", "EA", "AA"]), st.booleans())
def test_cooper_two_quantifiers(parts, shape, disjunctive):
    body = p_or(*parts) if disjunctive else p_and(*parts)
    inner = PEx("z", body) if shape[1] == "E" else PAll("z", body)
    f = PEx("x", inner) if shape[0] == "E" else PAll("x", inner)
    # unit coefficients keep every witness within a few steps of the thresholds
    assert decide(f) == bounded(f, {}, [30, 70])


# ---------------------------------------------------------------- refutation witnesses

PROPS = ["WCR:S", "CR:S", "WN:S", "Joinability:a,b", "Reachability:a,d", "Formula:(forall x:S)(exists y:S) x ->_S y"]


@settings(max_examples=200, deadline=None,
          suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
@given(st.lists(pairs, max_size=5), st.sampled_from(PROPS), st.data())
def test_witnesses_equivalent_to_skolem_form(rules, prop, data):
    spec = parse_spec(ground_trs_text(rules))
    phi = instantiate_property(PropertyTemplate.parse(prop), spec)
    R = theory_for(spec, phi)
    sig = R.signature
    T = [parse_term(c, sig) for c in CONSTS]
    base = R.union(suh_ground(sig, S, T).theory())
    sk = skolemize(to_prenex(negate(phi)), sig)
    goal = base.with_sentences([sk.to_formula()], "goal", signature=base.signature.merge(sk.signature))
    res = find_model(goal, SearchConfig(default_range=(1, 4)))
    assume(res.sat)
    A = res.model
    m = ground_value_map(A, sig)
    W = refutation_witnesses(sk, A, m)
    assert not W.truncated
    assert W.witnesses
    for w in W.witnesses:
        assert evaluate(A, w.sentence)
    # flip one predicate tuple: the witness set and the Skolem form must agree
    p = data.draw(st.sampled_from([step_pred(S), star_pred(S)]))
    n = A.size(S)
    tup = data.draw(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)))
    B = A.with_tables(predicates={p: A.predicates[p] ^ {tup}})
    assert evaluate(B, sk.to_formula()) == all(evaluate(B, w.sentence) for w in W.witnesses)

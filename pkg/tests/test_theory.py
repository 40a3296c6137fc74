from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import load_spec
from modelsmith.closure import deductive_closure
from modelsmith.fol import check_formula, format_formula, is_closed
from modelsmith.structure import evaluate
from modelsmith.terms import App, RewriteSpec, Rule, Signature, SpecError, Var, ground_terms, subterms
from modelsmith.theory import (
    TEMPLATES,
    PropertyTemplate,
    full_signature,
    generate_nstep_theory,
    generate_rewrite_theory,
    generate_topmost_theory,
    instantiate_property,
    star_pred,
    step_pred,
    top_pred,
)


def listing(T):
    return [format_formula(f) for f in T.sentences]


def test_addmul_rewrite_theory():
    T = generate_rewrite_theory(load_spec("exaddmul"))
    labels = [l for l, _ in T.labelled()]
    assert len(T) == 11
    assert labels[:2] == ["refl_S", "trans_S"]
    assert sum(l.startswith("cong_") for l in labels) == 5
    assert sum(l.startswith("rule") for l in labels) == 4
    assert "(forall x:S)(forall y:S) add(s(x), y) ->_S s(add(x, y))" in listing(T)
    assert "(forall x:S)(forall y:S)(forall z:S) x ->_S y /\\ y ->*_S z => x ->*_S z" in listing(T)


def test_conditional_rule_becomes_premise():
    T = generate_rewrite_theory(load_spec("ctrs"))
    assert listing(T) == [
        "(forall x:S) x ->*_S x",
        "(forall x:S)(forall y:S)(forall z:S) x ->_S y /\\ y ->*_S z => x ->*_S z",
        "b ->_S a",
        "c ->*_S b => a ->_S b",
    ]


def test_no_rules_gives_structural_sentences_only():
    from modelsmith.terms import parse_spec
    spec = parse_spec("sort S . op a : -> S .")
    T = generate_rewrite_theory(spec)
    assert len(T) == 2
    cl = deductive_closure(T, 2)
    assert not cl.atoms[step_pred("S")]
    assert {(str(u), str(v)) for u, v in cl.atoms[star_pred("S")]} == {("a", "a")}


def test_topmost_theory():
    T = generate_topmost_theory(load_spec("topterm"))
    assert listing(T) == [
        "non ->top_S f(g, f(non, g))",
        "g ->top_S a",
        "(forall x:S) f(a, x) ->top_S a",
        "f(b, b) ->top_S b",
        "f(b, a) ->top_S b",
    ]
    with pytest.raises(SpecError):
        generate_topmost_theory(load_spec("ctrs"))
    from modelsmith.terms import parse_spec
    assert len(generate_topmost_theory(parse_spec("sort S . op a : -> S ."))) == 0


def test_nstep_theory_adds_two_sentences():
    spec = load_spec("topterm")
    T = generate_nstep_theory(spec)
    assert len(T) == 2
    assert T.signature.predicates["->n_S"] == ("S", "Nat", "S")
    assert listing(T)[0] == "(forall x:S)(forall y:S)(forall z:S) x ->*_S y /\\ y ->top_S z => ->n_S(x, 0, z)"


def test_nstep_theory_holds_in_linear_structure():
    from helpers import load_structure
    A = load_structure("topterm_linear")
    T = generate_nstep_theory(load_spec("topterm"))
    assert all(evaluate(A, f) for f in T.sentences)


def test_template_instances():
    head = load_spec("exaddmulhead")
    inst = lambda p, s=head: format_formula(instantiate_property(PropertyTemplate.parse(p), s))
    assert inst("CompletelyDefinedSymbol:head") == "(forall xs:LN)(exists x:N) head(xs) ->_N x"
    assert inst("Joinability:add(x,y),add(y,x)") == \
        "(forall x:N)(forall y:N)(exists z:N) add(x, y) ->*_N z /\\ add(y, x) ->*_N z"
    wcr = load_spec("wcr")
    assert inst("WCR", wcr) == \
        "(forall x:S)(forall y:S)(forall z:S) x ->_S y /\\ x ->_S z => ((exists u:S) y ->*_S u /\\ z ->*_S u)"
    assert inst("TopTermination:S", load_spec("topterm")) == \
        "~((exists x:S)(forall n:Nat)(exists y:S) ->n_S(x, n, y))"


def test_template_parameter_errors():
    head = load_spec("exaddmulhead")
    with pytest.raises(SpecError):
        instantiate_property(PropertyTemplate.parse("CompletelyDefinedSymbol"), head)
    with pytest.raises(SpecError):
        instantiate_property(PropertyTemplate.parse("CompletelyDefinedSymbol:cons"), head)
    with pytest.raises(SpecError):
        instantiate_property(PropertyTemplate.parse("Joinability:Z,nil"), head)
    with pytest.raises(SpecError):
        PropertyTemplate.parse("Commutativity")
    no_cons = load_spec("wcr")
    # every symbol of the ground system heads some rule except a and d
    assert "a" in no_cons.constructors()


TEMPLATE_CASES = [
    ("exaddmulhead", "GroundReducible:head(nil)"),
    ("exaddmulhead", "CompletelyDefinedSymbol:add"),
    ("exaddmulhead", "CompletelyDefinedTRS"),
    ("exaddmulhead", "Productive:N"),
    ("exaddmulhead", "NormalizingTerm:head(cons(Z,nil))"),
    ("exaddmulhead", "NormalizingTRS:LN"),
    ("exaddmulhead", "Reachability:add(x,Z),x"),
    ("exaddmulhead", "Joinability:mul(x,y),mul(y,x)"),
    ("wcr", "WCR"),
    ("wcr", "CR"),
    ("wcr", "WN"),
    ("topterm", "TopTermination:S"),
    ("topterm", "Nonterminating:S"),
    ("topterm", "InfinitelyRootReducible:S"),
    ("exaddmul", "Formula:(exists x:S) s(x) ->_S x"),
]


@pytest.mark.parametrize("fixture,prop", TEMPLATE_CASES)
def test_every_template_is_closed_and_well_sorted(fixture, prop):
    spec = load_spec(fixture)
    phi = instantiate_property(PropertyTemplate.parse(prop), spec)
    assert is_closed(phi)
    check_formula(full_signature(spec), phi)


def test_template_cases_cover_all_templates():
    assert {PropertyTemplate.parse(p).name for _, p in TEMPLATE_CASES} == set(TEMPLATES)


# ---------------------------------------------------------------- rewriting oracle

S = "S"
SIG = Signature((S,), {"a": ((), S), "b": ((), S), "f": ((S,), S), "g": ((S, S), S)})
X, Y = Var("x", S), Var("y", S)
BOUND = 1
UNIVERSE = ground_terms(SIG, S, BOUND)


def patterns(depth: int):
    leaf = st.sampled_from([X, Y, App("a", (), S), App("b", (), S)])
    if depth == 0:
        return leaf
    sub = patterns(depth - 1)
    return st.one_of(leaf, sub.map(lambda t: App("f", (t,), S)),
                     st.tuples(sub, sub).map(lambda p: App("g", p, S)))


def pattern_vars(t) -> set:
    return {u for u in subterms(t) if isinstance(u, Var)}


@st.composite
def rules(draw):
    lhs = draw(patterns(1).filter(lambda t: isinstance(t, App)))
    rhs = draw(patterns(1).filter(lambda t: pattern_vars(t) <= pattern_vars(lhs)))
    return Rule(lhs, rhs)


def match(p, t, env):
    if isinstance(p, Var):
        if p in env:
            return env if env[p] == t else None
        return {**env, p: t}
    if p.symbol != t.symbol:
        return None
    for a, b in zip(p.args, t.args):
        env = match(a, b, env)
        if env is None:
            return None
    return env


def inst(t, env):
    if isinstance(t, Var):
        return env[t]
    return App(t.symbol, tuple(inst(a, env) for a in t.args), t.sort)


def one_step(t, rs):
    """All one-step reducts of ``t`` by direct matching at every position."""
    out = set()
    for r in rs:
        env = match(r.lhs, t, {})
        if env is not None:
            out.add(inst(r.rhs, env))
    for i, a in enumerate(t.args):
        for a2 in one_step(a, rs):
            out.add(App(t.symbol, t.args[:i] + (a2,) + t.args[i + 1:], t.sort))
    return out


@settings(max_examples=200, deadline=None)
@given(st.lists(rules(), max_size=3))
def test_closure_matches_direct_rewriting(rs):
    spec = RewriteSpec(SIG, tuple(rs), {"x": X, "y": Y})
    R = generate_rewrite_theory(spec)
    cl = deductive_closure(R, BOUND)
    members = set(UNIVERSE)
    step = {(s, t) for s in UNIVERSE for t in one_step(s, rs) if t in members}
    assert set(cl.atoms[step_pred(S)]) == step
    star = {(t, t) for t in UNIVERSE} | step
    while True:
        more = {(s, u) for (s, t) in step for (t2, u) in star if t == t2} - star
        if not more:
            break
        star |= more
    assert set(cl.atoms[star_pred(S)]) == star


@settings(max_examples=200, deadline=None)
@given(st.lists(rules(), min_size=1, max_size=3))
def test_topmost_steps_are_steps(rs):
    spec = RewriteSpec(SIG, tuple(rs), {"x": X, "y": Y})
    T = generate_rewrite_theory(spec).union(generate_topmost_theory(spec))
    cl = deductive_closure(T, BOUND)
    assert set(cl.atoms[top_pred(S)]) <= set(cl.atoms[step_pred(S)])

from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import ground_trs_text, load_spec, load_structure
from modelsmith.closure import deductive_closure
from modelsmith.finder import SearchConfig
from modelsmith.fol import parse_formula
from modelsmith.pipeline import (
    DISPROVED,
    PROVED,
    UNKNOWN,
    Certificate,
    Job,
    RefusedJob,
    disprove,
    format_goal_table,
    parse_ground_set,
    prove_by_sat,
    run,
    run_goal_table,
)
from modelsmith.structure import evaluate
from modelsmith.terms import SpecError, parse_spec
from modelsmith.theory import PropertyTemplate, generate_rewrite_theory, instantiate_property

WCR = load_spec("wcr")
HEAD = load_spec("exaddmulhead")
ADDMUL = load_spec("exaddmul")


def test_job_validation():
    with pytest.raises(ValueError):
        Job(WCR, "CR", mode="refute")
    with pytest.raises(ValueError):
        Job(WCR, "CR", surjectivity="ground:x")
    with pytest.raises(ValueError):
        Job(WCR, "CR", surjectivity="ground-set")
    with pytest.raises(ValueError):
        Job(WCR, "CR", negatives="file")
    with pytest.raises(ValueError):
        disprove(Job(WCR, "CR", mode="prove"))
    with pytest.raises(ValueError):
        prove_by_sat(Job(WCR, "CR"))


def test_universal_property_without_surjectivity_is_refused():
    job = Job(ADDMUL, "Joinability:add(x,y),add(y,x)", surjectivity="none")
    with pytest.raises(RefusedJob, match="surjectivity"):
        run(job)


def test_confluence_certificate():
    c = run(Job(WCR, "CR", search=SearchConfig(sizes={"S": (1, 3)})))
    assert c.verdict == DISPROVED and c.decided
    assert c.recheck()
    text = c.to_text()
    assert text.startswith("verdict: Disproved\nmode: disprove\nproperty: CR\n")
    for section in ("[theories]", "[preconditions]", "[structure]", "[witnesses]", "[notes]"):
        assert section in text
    assert "N(->*_S): 6 literals, auto" in text


def test_definite_verdicts_need_passing_rows():
    c = run(Job(WCR, "CR"))
    with pytest.raises(AssertionError):
        Certificate(PROVED, "prove", "CR", c.sentence, c.falsified)
    with pytest.raises(AssertionError):
        replace(c, rows=c.rows + (replace(c.rows[0], status="fail"),))
    with pytest.raises(ValueError):
        replace(c, verdict="Maybe")


def test_supplied_structure_is_rechecked():
    good = run(Job(WCR, "CR", structure=load_structure("cr_three")))
    assert good.verdict == DISPROVED
    also = run(Job(WCR, "CR", structure=load_structure("wcr_four")))
    assert also.verdict == DISPROVED
    broken = load_structure("cr_three").with_tables(predicates={"->*_S": frozenset()})
    bad = run(Job(WCR, "CR", structure=broken))
    assert bad.verdict == UNKNOWN and bad.reason.startswith("supplied structure fails: refl_S")


def test_no_model_within_bounds():
    c = run(Job(WCR, "WCR", search=SearchConfig(sizes={"S": (1, 3)})))
    assert c.verdict == UNKNOWN and "no model within bounds" in c.reason
    assert not c.recheck()


def test_segment_cannot_certify_nat_sentences():
    job = Job(load_spec("topterm"), "TopTermination:S", mode="prove", nat=None,
              structure=None, search=SearchConfig(sizes={"S": (1, 2)}, nat_bound=3, timeout=30))
    c = run(job)
    assert c.verdict == UNKNOWN


def test_open_universe_negatives_block_disproof():
    # negated joinability has negative ->* literals; N(->*) is not finite here
    c = run(Job(HEAD, "Joinability:add(x,y),add(y,x)", surjectivity="nat",
                search=SearchConfig(sizes={"N": (2, 2), "LN": (2, 2)}, nat_bound=4)))
    assert c.verdict == DISPROVED
    c = run(Job(HEAD, "Reachability:add(x,Z),x", mode="prove", surjectivity="nat",
                search=SearchConfig(sizes={"N": (1, 2), "LN": (1, 2)}, nat_bound=4, timeout=30)))
    assert c.verdict == UNKNOWN


def test_goal_table():
    rows = run_goal_table(load_spec("ctrs"), ["b -> a", "~(b -> a)", "a -> b", "~(a -> b)"])
    assert [r.verdict for r in rows] == ["true", "false", "false", "true"]
    assert [r.derivable for r in rows] == [True, False, False, False]
    assert rows[3].reason == "model of the goal, side conditions hold"
    assert "not concluded" in rows[3].blocked
    assert not any(r.blocked for r in rows[:3])
    table = format_goal_table(rows)
    assert table.splitlines()[0].split() == ["goal", "R|-", "A|=~", "I|=", "how"]
    with pytest.raises(SpecError):
        run_goal_table(load_spec("ctrs"), ["a -> b /\\ b -> a"])


def test_parse_ground_set():
    T = parse_ground_set("0\n# comment\ns(0)  # one\n", ADDMUL.signature)
    assert [str(t) for t in T] == ["0", "s(0)"]
    with pytest.raises(SpecError, match="line 2"):
        parse_ground_set("0\nq", ADDMUL.signature)


# ---------------------------------------------------------------- soundness on ground systems

CONSTS = ("a", "b", "c", "d")
rule = st.tuples(st.sampled_from(CONSTS), st.sampled_from(CONSTS))
PROPERTIES = ["CR", "WCR", "WN", "Joinability:b,c", "Reachability:a,d", "GroundReducible:a"]


def initial_model(spec):
    R = generate_rewrite_theory(spec)
    return deductive_closure(R, 0).herbrand_structure(R.signature)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(rule, max_size=5), st.sampled_from(PROPERTIES), st.sampled_from(["disprove", "prove"]))
def test_verdicts_agree_with_the_initial_model(rules, prop, mode):
    spec = parse_spec(ground_trs_text(rules))
    phi = instantiate_property(PropertyTemplate.parse(prop), spec)
    I = initial_model(spec)
    truth = evaluate(I, phi)
    c = run(Job(spec, prop, mode, search=SearchConfig(default_range=(1, 4))))
    if c.verdict == DISPROVED:
        assert not truth
    if c.verdict == PROVED:
        assert truth
    if c.decided:
        assert c.recheck()
        # witnesses are statements about ground terms and hold in the initial model
        for w in c.witnesses.witnesses:
            assert evaluate(I, w.sentence)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(rule, max_size=5), st.sampled_from(PROPERTIES))
def test_no_contradictory_verdicts(rules, prop):
    spec = parse_spec(ground_trs_text(rules))
    cfg = SearchConfig(default_range=(1, 4))
    a = run(Job(spec, prop, "disprove", search=cfg))
    b = run(Job(spec, prop, "prove", search=cfg))
    assert not (a.verdict == DISPROVED and b.verdict == PROVED)


def test_explicit_formula_job():
    sig = generate_rewrite_theory(ADDMUL).signature
    phi = parse_formula("(exists x:S) s(x) ->_S x", sig)
    c = run(Job(ADDMUL, formula=phi, surjectivity="none", search=SearchConfig(sizes={"S": (1, 2)})))
    assert c.verdict == DISPROVED
    assert c.property == "Formula:(exists x:S) s(x) ->_S x"

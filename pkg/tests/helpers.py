from __future__ import annotations

import itertools
from pathlib import Path

from hypothesis import strategies as st

from modelsmith.fol import And, Atom, Exists, Forall, Implies, Not, Or, eq
from modelsmith.structure import SortedStructure, parse_structure
from modelsmith.terms import App, Signature, Var, parse_spec

FIXTURES = Path(__file__).parent / "fixtures"


def load_spec(name: str):
    return parse_spec((FIXTURES / f"{name}.maude").read_text())


def load_structure(name: str) -> SortedStructure:
    return parse_structure((FIXTURES / "structures" / f"{name}.txt").read_text())


def all_structures(sig: Signature, n: int):
    """Every structure over a one-sorted signature with carrier size ``n``."""
    (sort,) = sig.sorts
    fns = sorted(sig.functions.items())
    preds = sorted(sig.predicates.items())
    fn_choices = []
    for f, (w, _) in fns:
        args = list(itertools.product(range(n), repeat=len(w)))
        fn_choices.append([dict(zip(args, vals)) for vals in itertools.product(range(n), repeat=len(args))])
    pred_choices = []
    for p, w in preds:
        args = list(itertools.product(range(n), repeat=len(w)))
        pred_choices.append([frozenset(a for a, bit in zip(args, bits) if bit)
                             for bits in itertools.product((0, 1), repeat=len(args))])
    for ftabs in itertools.product(*fn_choices):
        for ptabs in itertools.product(*pred_choices):
            yield SortedStructure(
                {sort: n},
                dict(sig.functions),
                dict(sig.predicates),
                {f: t for (f, _), t in zip(fns, ftabs)},
                {p: t for (p, _), t in zip(preds, ptabs)},
            )


def ground_trs_text(rules, constants=("a", "b", "c", "d"), conditional=()) -> str:
    lines = ["mod Rand is", "  sort S .", f"  ops {' '.join(constants)} : -> S ."]
    lines += [f"  rl {l} => {r} ." for l, r in rules]
    lines += [f"  crl {l} => {r} if {u} => {v} ." for l, r, u, v in conditional]
    lines.append("endm")
    return "\n".join(lines)


# ---------------------------------------------------------------- random formulas

S = "S"
X, Y, Z = Var("x", S), Var("y", S), Var("z", S)
VARS = (X, Y, Z)
FULL_SIG = Signature((S,), {"a": ((), S), "b": ((), S), "f": ((S,), S)}, {"P": (S,), "R": (S, S)})


def terms_over(fns):
    base = [st.sampled_from(VARS)]
    if "a" in fns:
        base.append(st.just(App("a", (), S)))
    if "b" in fns:
        base.append(st.just(App("b", (), S)))
    leaf = st.one_of(*base)
    if "f" in fns:
        return st.one_of(leaf, leaf.map(lambda t: App("f", (t,), S)))
    return leaf


def formulas(fns=("a", "b", "f"), preds=("P", "R"), max_leaves=6):
    t = terms_over(fns)
    atoms = [st.builds(lambda u, v: eq(u, v), t, t)]
    if "P" in preds:
        atoms.append(t.map(lambda u: Atom("P", (u,))))
    if "R" in preds:
        atoms.append(st.builds(lambda u, v: Atom("R", (u, v)), t, t))
    leaf = st.one_of(*atoms)

    def extend(inner):
        return st.one_of(
            inner.map(Not),
            st.builds(lambda p, q: And((p, q)), inner, inner),
            st.builds(lambda p, q: Or((p, q)), inner, inner),
            st.builds(Implies, inner, inner),
            st.builds(lambda v, p: Forall(v, p), st.sampled_from(VARS), inner),
            st.builds(lambda v, p: Exists(v, p), st.sampled_from(VARS), inner),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def close(f, quants):
    for v, q in zip(VARS, quants):
        f = Forall(v, f) if q else Exists(v, f)
    return f


def sentences(**kw):
    return st.builds(close, formulas(**kw), st.lists(st.booleans(), min_size=3, max_size=3))


@st.composite
def structures(draw, sig=FULL_SIG, max_size=3):
    n = draw(st.integers(1, max_size))
    fns = {}
    for f, (w, _) in sig.functions.items():
        fns[f] = {args: draw(st.integers(0, n - 1)) for args in itertools.product(range(n), repeat=len(w))}
    preds = {}
    for p, w in sig.predicates.items():
        preds[p] = frozenset(a for a in itertools.product(range(n), repeat=len(w)) if draw(st.booleans()))
    return SortedStructure({S: n}, dict(sig.functions), dict(sig.predicates), fns, preds)

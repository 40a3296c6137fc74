"""Sentences that force the ground-term homomorphism onto a model to be surjective."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .fol import FALSE, TRUE, Atom, Formula, Implies, Not, conj, disj, eq, exists, forall, format_formula
from .terms import GT, NAT, App, Signature, SpecError, Term, Var, is_ground
from .fol import relevant_sorts
from .theory import NatSymbols, Theory, _nat_builtins, nat_extension


def term_pred(sort: str) -> str:
    return f"term_{sort}"


@dataclass(frozen=True)
class SurjectivityTheory:
    sentences: tuple[Formula, ...]
    extended_signature: Signature
    kind: str  # "ground" or "nat"
    sorts: tuple[str, ...]
    terms: tuple[Term, ...] = ()
    nat: NatSymbols | None = None

    def theory(self) -> Theory:
        labels = tuple(f"suh{i + 1}" for i in range(len(self.sentences)))
        builtins = _nat_builtins(self.nat) if self.nat else {}
        return Theory(self.extended_signature, self.sentences, labels, builtins, "SuH")

    def listing(self) -> str:
        return "\n".join(format_formula(f) for f in self.sentences)


def _check_ground_set(sig: Signature, s: str, T: Sequence[Term]) -> None:
    if not T:
        raise SpecError("surjectivity term set is empty")
    for t in T:
        if not is_ground(t):
            raise SpecError(f"{t} is not ground")
        if t.sort != s:
            raise SpecError(f"{t} has sort {t.sort}, expected {s}")
        sig.check_term(t)


def suh_ground(sig: Signature, s: str, T: Sequence[Term]) -> SurjectivityTheory:
    """``(forall x:s) x = t1 \\/ ... \\/ x = tn``."""
    if s not in sig.sorts:
        raise SpecError(f"undeclared sort {s}")
    T = list(dict.fromkeys(T))
    _check_ground_set(sig, s, T)
    x = Var("x", s)
    sent = forall([x], disj(*(eq(x, t) for t in T)))
    return SurjectivityTheory((sent,), sig, "ground", (s,), tuple(T))


def suh_distinct(T: Sequence[Term]) -> Formula:
    """Pairwise disequations between the members of ``T``."""
    T = list(dict.fromkeys(T))
    parts = [Not(eq(t, u)) for t, u in itertools.combinations(T, 2)]
    return conj(*parts) if parts else TRUE


def suh_terms(sig: Signature, s: str) -> SurjectivityTheory:
    """The Nat-indexed height predicates for every sort relevant to ``s``."""
    K = relevant_sorts(sig, s)
    ext, ns = nat_extension(sig)
    ext = ext.extend(predicates={term_pred(k): (k, NAT) for k in sorted(K)})
    zero = App(ns.zero, (), NAT)
    n, m = Var("n", NAT), Var("m", NAT)
    sents: list[Formula] = []
    for k in [q for q in sig.sorts if q in K]:
        x = Var("x", k)
        sents.append(forall([x], exists([n], Atom(term_pred(k), (x, n)))))
        consts = [App(c, (), k) for c in sig.constants(k)]
        sents.append(forall([x], Implies(Atom(term_pred(k), (x, zero)),
                                         disj(*(eq(x, c) for c in consts)) if consts else FALSE)))
        alts: list[Formula] = [Atom(term_pred(k), (x, m))]
        for f in sig.symbols_into(k):
            w, _ = sig.functions[f]
            if not w:
                continue
            ys = [Var(f"y{i + 1}", si) for i, si in enumerate(w)]
            body = conj(eq(x, App(f, tuple(ys), k)), *(Atom(term_pred(y.sort), (y, m)) for y in ys))
            alts.append(exists(ys, body))
        prem = conj(Atom(GT, (n, zero)), Atom(term_pred(k), (x, n)))
        concl = conj(Atom(GT, (n, m)), disj(*alts))
        sents.append(forall([x, n], exists([m], Implies(prem, concl))))
    return SurjectivityTheory(tuple(sents), ext, "nat", tuple(q for q in sig.sorts if q in K), (), ns)


def merge_surjectivity(parts: Iterable[SurjectivityTheory]) -> Theory | None:
    out: Theory | None = None
    for p in parts:
        out = p.theory() if out is None else out.union(p.theory())
    return out

"""Inverting the ground-term homomorphism into a finite structure and building
refutation witnesses from a model of a Skolemized sentence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .closure import PreconditionRow
from .fol import Formula, PrenexSentence, SkolemizedSentence, forall, format_formula, numeral, quantifier_analysis, substitute
from .structure import EvalError, SortedStructure, evaluate, eval_term
from .terms import NAT, App, Signature, Term, Var, term_key

DEFAULT_WITNESS_LIMIT = 64
DEFAULT_EXPLORATION_BOUND = 8
DEFAULT_NAT_SEARCH = 64


class WitnessError(Exception):
    pass


@dataclass(frozen=True)
class GroundValueMap:
    terms: Mapping[str, Mapping[int, Term]]  # sort -> element -> minimal term
    unreached: Mapping[str, frozenset]
    fixpoint: bool
    rounds: int

    def term_for(self, sort: str, e: int) -> Term:
        if sort == NAT:
            return numeral(e)
        try:
            return self.terms[sort][e]
        except KeyError:
            raise WitnessError(f"no ground term of sort {sort} denotes element {e}") from None


def ground_value_map(A: SortedStructure, sig: Signature,
                     height_bound: int = DEFAULT_EXPLORATION_BOUND) -> GroundValueMap:
    """Breadth-first evaluation of ground terms, one representative per value.

    A round builds ``f(t1..tk)`` from the representatives reached so far, so
    a value first appears at the least height of a term denoting it; ties are
    broken by :func:`term_key`.
    """
    sorts = [s for s in sig.sorts if s != NAT]
    reps: dict[str, dict[int, Term]] = {s: {} for s in sorts}
    fns = [(f, w, s) for f, (w, s) in sorted(sig.functions.items()) if s != NAT and NAT not in w]
    fixpoint = False
    rounds = 0
    for r in range(height_bound + 1):
        rounds = r + 1
        found: dict[str, dict[int, Term]] = {s: {} for s in sorts}
        for f, w, s in fns:
            if r == 0 and w:
                continue
            if r > 0 and not w:
                continue
            pools = [list(reps[si].values()) for si in w]
            for args in itertools.product(*pools):
                t = App(f, tuple(args), s)
                try:
                    v = eval_term(A, t, {})
                except EvalError:
                    continue
                if v in reps[s]:
                    continue
                cur = found[s].get(v)
                if cur is None or term_key(t) < term_key(cur):
                    found[s][v] = t
        if not any(found.values()):
            fixpoint = True
            break
        for s in sorts:
            reps[s].update(found[s])
    unreached = {s: frozenset(e for e in A.elements(s) if e not in reps[s]) for s in sorts}
    return GroundValueMap({s: dict(sorted(reps[s].items())) for s in sorts}, unreached, fixpoint, rounds)


def surjectivity_report(m: GroundValueMap, sorts: Iterable[str]) -> list[PreconditionRow]:
    rows = []
    for s in sorts:
        if s == NAT:
            rows.append(PreconditionRow("surjectivity", s, "pass", "Nat values are denoted by numerals"))
            continue
        miss = m.unreached.get(s)
        if miss is None:
            rows.append(PreconditionRow("surjectivity", s, "fail", "sort has no carrier"))
        elif not miss:
            rows.append(PreconditionRow("surjectivity", s, "pass", "every element is denoted by a ground term"))
        elif m.fixpoint:
            rows.append(PreconditionRow("surjectivity", s, "fail",
                                        f"no ground term denotes {sorted(miss)}"))
        else:
            rows.append(PreconditionRow("surjectivity", s, "inconclusive",
                                        f"{sorted(miss)} unreached within {m.rounds} rounds"))
    return rows


def format_value_map(m: GroundValueMap, A: SortedStructure | None = None) -> str:
    lines = []
    for s, tab in m.terms.items():
        for e, t in tab.items():
            lab = A.label(s, e) if A is not None else e
            lines.append(f"[{t}] = {lab} : {s}")
        if m.unreached[s]:
            lines.append(f"unreached {s}: {sorted(m.unreached[s])}")
    return "\n".join(lines)


# ---------------------------------------------------------------- witnesses

@dataclass(frozen=True)
class Witness:
    valuation: tuple[tuple[str, int], ...]  # (variable, element label)
    sentence: Formula

    def __str__(self) -> str:
        tag = ", ".join(f"{v}={e}" for v, e in self.valuation) or "-"
        return f"[{tag}] {format_formula(self.sentence)}"


@dataclass(frozen=True)
class WitnessSet:
    witnesses: tuple[Witness, ...]
    truncated: bool = False
    skolem_values: Mapping[str, Mapping[tuple, int]] = field(default_factory=dict)

    @property
    def sentences(self) -> list[Formula]:
        return [w.sentence for w in self.witnesses]

    def listing(self) -> str:
        out = [str(w) for w in self.witnesses]
        if self.truncated:
            out.append("... (truncated)")
        return "\n".join(out)


def _mixed_value(A: SortedStructure, sort: str, e: int):
    if sort == NAT and A.symbolic:
        from .lia import Lin
        return Lin.num(e)
    return e


def _domain(A: SortedStructure, sort: str, nat_search: int) -> Sequence[int]:
    if sort == NAT and A.symbolic:
        return range(nat_search)
    return A.elements(sort)


def _suffix(psi: PrenexSentence, start: int) -> Formula:
    from .fol import Exists, Forall
    m = psi.matrix_formula()
    for q, v in reversed(psi.prefix[start:]):
        m = Forall(v, m) if q == "forall" else Exists(v, m)
    return m


def skolem_value(A: SortedStructure, sk: SkolemizedSentence, pos: int, env: Mapping[Var, int],
                 nat_search: int = DEFAULT_NAT_SEARCH) -> int:
    """Value of the existential at 1-based prefix position ``pos`` under ``env``.

    Uses the Skolem function table when ``A`` interprets it; otherwise the
    least element making the remaining sentence true.
    """
    psi = sk.source
    t = sk.skolem_terms[pos]
    if isinstance(t, App) and (t.symbol in A.functions or t.symbol in A.linear_functions):
        return eval_term(A, t, env)
    x = psi.prefix[pos - 1][1]
    rest = _suffix(psi, pos)
    for v in _domain(A, x.sort, nat_search):
        full = {k: _mixed_value(A, k.sort, e) for k, e in env.items()}
        full[x] = _mixed_value(A, x.sort, v)
        if evaluate(A, rest, full):
            return v
    raise WitnessError(f"no value for {x.name} within the search range under {dict((k.name, e) for k, e in env.items())}")


def refutation_witnesses(sk: SkolemizedSentence, A: SortedStructure, m: GroundValueMap,
                         limit: int = DEFAULT_WITNESS_LIMIT,
                         nat_search: int = DEFAULT_NAT_SEARCH) -> WitnessSet:
    """One sentence per valuation of the universals preceding the last
    existential: those universals and every existential are replaced by
    minimal ground terms denoting their values, the trailing universals stay
    quantified."""
    psi = sk.source
    qa = quantifier_analysis(psi)
    u_ex = [psi.prefix[i - 1][1] for i in qa.U_exists]
    u_all = [psi.prefix[i - 1][1] for i in qa.U_forall]
    body = psi.body if psi.body is not None else psi.matrix_formula()
    domains = [_domain(A, v.sort, nat_search) for v in u_ex]
    infinite = any(v.sort == NAT and A.symbolic for v in u_ex)
    seen: set[str] = set()
    out: list[Witness] = []
    sk_tabs: dict[str, dict[tuple, int]] = {}
    truncated = False
    for combo in itertools.product(*domains):
        env = dict(zip(u_ex, combo))
        sigma: dict[Var, Term] = {}
        for v, e in env.items():
            sigma[v] = m.term_for(v.sort, e)
        for pos in qa.E:
            x = psi.prefix[pos - 1][1]
            val = skolem_value(A, sk, pos, env, nat_search)
            env[x] = val
            t = sk.skolem_terms[pos]
            sk_tabs.setdefault(t.symbol, {})[tuple(env[u] for u in t.args)] = val
            sigma[x] = m.term_for(x.sort, val)
        f = forall(u_all, substitute(body, sigma))
        key = format_formula(f)
        if key in seen:
            continue
        if len(out) >= limit:
            truncated = True
            break
        seen.add(key)
        tag = tuple((v.name, A.label(v.sort, e)) for v, e in zip(u_ex, combo))
        out.append(Witness(tag, f))
    if infinite and not truncated:
        truncated = True
    return WitnessSet(tuple(out), truncated, sk_tabs)

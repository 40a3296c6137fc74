"""Depth-bounded ground deductive closure of Horn theories, closed-world
negative theories, and the negative-literal precondition check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .fol import And, Atom, Forall, Formula, Implies, Not, PrenexSentence, TRUE, format_atom, parse_formula
from .structure import EvalError, SortedStructure, eval_atom, eval_term
from .terms import EQ, App, Signature, SpecError, Term, Var, count_ground_terms, ground_terms, term_key

DEFAULT_HEIGHT_BOUND = 4
MAX_UNIVERSE = 20000
MAX_HEAD_INSTANCES = 200000


class ClosureError(Exception):
    pass


class NotHornError(ClosureError):
    pass


class RefusedNegatives(ClosureError):
    """The complement of a predicate cannot be computed soundly at this bound."""


@dataclass(frozen=True)
class PreconditionRow:
    kind: str  # "surjectivity" or "negatives"
    subject: str  # sort or predicate
    status: str  # "pass", "fail", "vacuous-pass" or "inconclusive"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "vacuous-pass")

    def __str__(self) -> str:
        tail = f"  {self.detail}" if self.detail else ""
        return f"{self.kind:<12} {self.subject:<12} {self.status}{tail}"


# ---------------------------------------------------------------- Horn clauses

@dataclass(frozen=True)
class HornClause:
    variables: tuple[Var, ...]
    premises: tuple[Atom, ...]
    head: Atom


def horn_clause(f: Formula) -> HornClause | None:
    """Split ``(forall xs) p1 /\\ ... /\\ pk => q``; ``None`` for ``true``."""
    vs: list[Var] = []
    while isinstance(f, Forall):
        vs.append(f.var)
        f = f.body
    if f == TRUE:
        return None
    if isinstance(f, Atom):
        prem: list[Atom] = []
        head = f
    elif isinstance(f, Implies) and isinstance(f.rhs, Atom):
        prem = []
        stack = [f.lhs]
        while stack:
            g = stack.pop(0)
            if isinstance(g, And):
                stack[:0] = list(g.args)
            elif isinstance(g, Atom):
                prem.append(g)
            else:
                raise NotHornError(f"premise is not a conjunction of atoms: {g}")
        head = f.rhs
    else:
        raise NotHornError("sentence is not a Horn clause")
    for a in (*prem, head):
        if a.pred == EQ:
            raise NotHornError("equality atoms are not supported in Horn clauses")
    return HornClause(tuple(vs), tuple(prem), head)


def _match(p: Term, t: Term, env: dict) -> dict | None:
    if isinstance(p, Var):
        got = env.get(p)
        if got is None:
            env = dict(env)
            env[p] = t
            return env
        return env if got == t else None
    if not isinstance(t, App) or p.symbol != t.symbol or len(p.args) != len(t.args):
        return None
    for a, b in zip(p.args, t.args):
        env = _match(a, b, env)
        if env is None:
            return None
    return env


def _ground(t: Term, env: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return env[t]
    if not t.args:
        return t
    return App(t.symbol, tuple(_ground(a, env) for a in t.args), t.sort)


def _term_vars(t: Term, out: list) -> None:
    if isinstance(t, Var):
        if t not in out:
            out.append(t)
    else:
        for a in t.args:
            _term_vars(a, out)


# ---------------------------------------------------------------- closure

@dataclass(frozen=True)
class GroundAtomSet:
    """Derivable ground atoms over terms of height at most ``term_height_bound``.

    ``saturated`` records that one more height level derives nothing new
    within the bound; ``universe_closed`` that the bounded term universe
    already contains every ground term.
    """
    atoms: Mapping[str, frozenset]
    term_height_bound: int
    saturated: bool
    universe: Mapping[str, tuple[Term, ...]] = field(default_factory=dict)
    universe_closed: bool = False
    pred_ranks: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def holds(self, pred: str, args: Sequence[Term]) -> bool:
        return tuple(args) in self.atoms.get(pred, frozenset())

    def contains(self, a: Atom) -> bool:
        return self.holds(a.pred, a.args)

    def count(self) -> int:
        return sum(len(v) for v in self.atoms.values())

    def restricted(self, pred: str) -> list[tuple]:
        return sorted(self.atoms.get(pred, frozenset()), key=lambda tup: [term_key(t) for t in tup])

    def all_tuples(self, pred: str) -> Iterable[tuple]:
        return itertools.product(*(self.universe[s] for s in self.pred_ranks[pred]))

    def herbrand_structure(self, sig: Signature) -> SortedStructure:
        """The finite term structure induced by a closed universe."""
        if not self.universe_closed:
            raise ClosureError("the term universe is not closed; no finite Herbrand structure")
        index = {s: {t: i for i, t in enumerate(ts)} for s, ts in self.universe.items()}
        fns = {}
        for f, (w, s) in sig.functions.items():
            tab = {}
            for args in itertools.product(*(self.universe[si] for si in w)):
                t = App(f, tuple(args), s)
                tab[tuple(index[si][a] for si, a in zip(w, args))] = index[s][t]
            fns[f] = tab
        preds = {p: frozenset(tuple(index[si][a] for si, a in zip(w, tup)) for tup in self.atoms.get(p, ()))
                 for p, w in self.pred_ranks.items()}
        return SortedStructure({s: len(ts) for s, ts in self.universe.items()}, dict(sig.functions),
                               dict(self.pred_ranks), fns, preds)


def _universe(sig: Signature, bound: int) -> dict[str, tuple[Term, ...]]:
    counts = count_ground_terms(sig, bound)
    total = sum(counts.values())
    if total > MAX_UNIVERSE:
        raise ClosureError(f"ground term universe at height {bound} has {total} terms (limit {MAX_UNIVERSE})")
    return {s: tuple(ground_terms(sig, s, bound)) for s in sig.sorts}


def universe_is_closed(sig: Signature, bound: int) -> bool:
    return count_ground_terms(sig, bound) == count_ground_terms(sig, bound + 1)


def _fixpoint(clauses: Sequence[HornClause], universe: Mapping[str, tuple[Term, ...]]) -> dict[str, set]:
    members = {s: set(ts) for s, ts in universe.items()}
    facts: dict[str, set] = {}

    def fits(tup: tuple) -> bool:
        return all(t in members[t.sort] for t in tup)

    def heads(c: HornClause, env: dict) -> Iterable[tuple]:
        free: list[Var] = []
        for t in c.head.args:
            _term_vars(t, free)
        free = [v for v in free if v not in env]
        n = 1
        for v in free:
            n *= len(universe[v.sort])
        if n > MAX_HEAD_INSTANCES:
            raise ClosureError(f"too many head instances ({n}) for {format_atom(c.head)}")
        for vals in itertools.product(*(universe[v.sort] for v in free)):
            e = {**env, **dict(zip(free, vals))}
            yield tuple(_ground(t, e) for t in c.head.args)

    def join(prem: Sequence[Atom], env: dict, source: Mapping[str, set]) -> Iterable[dict]:
        if not prem:
            yield env
            return
        a = prem[0]
        for tup in list(source.get(a.pred, ())):
            e = env
            for p, t in zip(a.args, tup):
                e = _match(p, t, e)
                if e is None:
                    break
            if e is not None:
                yield from join(prem[1:], e, source)

    delta: dict[str, set] = {}

    def emit(pred: str, tup: tuple, out: dict) -> None:
        if fits(tup) and tup not in facts.get(pred, ()) and tup not in out.get(pred, ()):
            out.setdefault(pred, set()).add(tup)

    for c in clauses:
        if not c.premises:
            for tup in heads(c, {}):
                emit(c.head.pred, tup, delta)
    while delta:
        for p, ts in delta.items():
            facts.setdefault(p, set()).update(ts)
        new: dict[str, set] = {}
        for c in clauses:
            for i, a in enumerate(c.premises):
                if a.pred not in delta:
                    continue
                rest = c.premises[:i] + c.premises[i + 1:]
                for env in join((a,), {}, delta):
                    for e in join(rest, env, facts):
                        for tup in heads(c, e):
                            emit(c.head.pred, tup, new)
        delta = new
    return facts


def deductive_closure(S, height_bound: int = DEFAULT_HEIGHT_BOUND) -> GroundAtomSet:
    """Least fixpoint of ground Horn instantiation within ``height_bound``."""
    if height_bound < 0:
        raise ValueError("height bound must be non-negative")
    clauses = [c for c in (horn_clause(f) for f in S.sentences) if c is not None]
    sig = S.signature
    uni = _universe(sig, height_bound)
    facts = _fixpoint(clauses, uni)
    closed = universe_is_closed(sig, height_bound)
    if closed:
        saturated = True
    else:
        try:
            bigger = _fixpoint(clauses, _universe(sig, height_bound + 1))
        except ClosureError:
            saturated = False
        else:
            members = {s: set(ts) for s, ts in uni.items()}
            saturated = all(
                tup in facts.get(p, ())
                for p, ts in bigger.items() for tup in ts
                if all(t in members[t.sort] for t in tup))
    ranks = {p: w for p, w in sig.predicates.items() if p != EQ}
    return GroundAtomSet({p: frozenset(facts.get(p, ())) for p in ranks}, height_bound, saturated,
                         uni, closed, ranks)


# ---------------------------------------------------------------- negative theories

@dataclass(frozen=True)
class NegativeTheory:
    literals: tuple[Atom, ...]  # each stands for its negation
    predicate: str | None = None
    source: str = "auto"

    def sentences(self) -> list[Formula]:
        return [Not(a) for a in self.literals]

    def __len__(self) -> int:
        return len(self.literals)

    def listing(self) -> str:
        return "\n".join(f"~({format_atom(a)})" for a in self.literals)


def negative_theory(S, P: str, height_bound: int = DEFAULT_HEIGHT_BOUND,
                    closure: GroundAtomSet | None = None) -> NegativeTheory:
    """Complement of ``P`` in the initial model, when it is finitely computable.

    Refuses unless the bounded term universe is closed and the closure is
    saturated; otherwise the complement would contain derivable atoms.
    """
    sig = S.signature
    if P not in sig.predicates:
        raise ClosureError(f"unknown predicate {P}")
    if not universe_is_closed(sig, height_bound):
        raise RefusedNegatives(f"N({P}) refused: ground terms are unbounded, the complement is not finitely computable")
    cl = closure if closure is not None else deductive_closure(S, height_bound)
    if not cl.saturated:
        raise RefusedNegatives(f"N({P}) refused: closure not saturated at height {height_bound}")
    lits = []
    for tup in cl.all_tuples(P):
        if tup not in cl.atoms[P]:
            lits.append(Atom(P, tuple(tup)))
    lits.sort(key=lambda a: [term_key(t) for t in a.args])
    return NegativeTheory(tuple(lits), P, "auto")


def load_negatives(text: str, sig: Signature) -> list[NegativeTheory]:
    """One ground negative literal per line, e.g. ``~(a ->* b)``; ``#`` comments."""
    groups: dict[str, list[Atom]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            f = parse_formula(line, sig)
        except SpecError as e:
            raise SpecError(f"negatives line {n}: {e}") from None
        if not (isinstance(f, Not) and isinstance(f.arg, Atom)):
            raise SpecError(f"negatives line {n}: expected a negated ground atom")
        a = f.arg
        if any(not _is_ground(t) for t in a.args):
            raise SpecError(f"negatives line {n}: literal is not ground")
        groups.setdefault(a.pred, []).append(a)
    return [NegativeTheory(tuple(v), p, "file") for p, v in groups.items()]


def _is_ground(t: Term) -> bool:
    return isinstance(t, App) and all(_is_ground(a) for a in t.args)


def check_condition_b(A: SortedStructure, psi: PrenexSentence, negatives: Mapping[str, NegativeTheory | str],
                      ) -> list[PreconditionRow]:
    """A satisfies N(P) for each predicate P negated in ``psi``.

    ``negatives`` maps a predicate to its negative theory, or to a string
    explaining why none is available.
    """
    preds = psi.negative_predicates()
    if not preds:
        return [PreconditionRow("negatives", "-", "vacuous-pass", "no negative literals")]
    rows = []
    for P in preds:
        if P == EQ:
            rows.append(PreconditionRow("negatives", P, "fail", "negated equality is not covered"))
            continue
        N = negatives.get(P)
        if N is None:
            rows.append(PreconditionRow("negatives", P, "fail", f"no N({P}) supplied"))
            continue
        if isinstance(N, str):
            rows.append(PreconditionRow("negatives", P, "fail", N))
            continue
        bad = None
        for a in N.literals:
            try:
                vals = [eval_term(A, t, {}) for t in a.args]
                if eval_atom(A, a.pred, vals, [t.sort for t in a.args]):
                    bad = a
                    break
            except EvalError as e:
                rows.append(PreconditionRow("negatives", P, "fail", str(e)))
                bad = False
                break
        if bad is None:
            rows.append(PreconditionRow("negatives", P, "pass", f"A satisfies N({P}) ({len(N)} literals, {N.source})"))
        elif bad is not False:
            rows.append(PreconditionRow("negatives", P, "fail", f"A satisfies {format_atom(bad)}, which is not derivable"))
    return rows

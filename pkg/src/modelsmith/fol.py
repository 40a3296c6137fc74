"""Many-sorted first-order formulas.

Besides the AST this module provides negation normal form, prenex/DNF
conversion, Skolemization, the quantifier index sets used to build
refutation witnesses, relevant-sort computation and a reader/printer for the
one-sentence-per-line listing format used in reports.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from .terms import (
    EQ,
    App,
    Signature,
    SpecError,
    Term,
    Var,
    apply_substitution,
    term_vars,
)

DNF_LITERAL_LIMIT = 512


class FormulaError(Exception):
    pass


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Forall, Exists]
TRUE = And(())
FALSE = Or(())


def conj(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if isinstance(f, And):
            flat.extend(f.args)
        else:
            flat.append(f)
    if any(f == FALSE for f in flat):
        return FALSE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if isinstance(f, Or):
            flat.extend(f.args)
        else:
            flat.append(f)
    if any(f == TRUE for f in flat):
        return TRUE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def forall(vs: Iterable[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Forall(v, body)
    return body


def exists(vs: Iterable[Var], body: Formula) -> Formula:
    for v in reversed(list(vs)):
        body = Exists(v, body)
    return body


def eq(a: Term, b: Term) -> Atom:
    return Atom(EQ, (a, b))


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def to_formula(self) -> Formula:
        return self.atom if self.positive else Not(self.atom)


# ---------------------------------------------------------------- traversal

def free_vars(f: Formula) -> set[Var]:
    if isinstance(f, Atom):
        return {v for t in f.args for v in term_vars(t)}
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (And, Or)):
        return set().union(*(free_vars(a) for a in f.args)) if f.args else set()
    if isinstance(f, Implies):
        return free_vars(f.lhs) | free_vars(f.rhs)
    return free_vars(f.body) - {f.var}


def is_closed(f: Formula) -> bool:
    return not free_vars(f)


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms(a)
    elif isinstance(f, Implies):
        yield from atoms(f.lhs)
        yield from atoms(f.rhs)
    else:
        yield from atoms(f.body)


def function_symbols(f: Formula) -> set[str]:
    out: set[str] = set()

    def walk(t: Term) -> None:
        if isinstance(t, App):
            out.add(t.symbol)
            for a in t.args:
                walk(a)

    for a in atoms(f):
        for t in a.args:
            walk(t)
    return out


def substitute(f: Formula, sigma: Mapping[Var, Term]) -> Formula:
    """Replace free variables; bound variables shadow the substitution."""
    if not sigma:
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(apply_substitution(sigma, t) for t in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.arg, sigma))
    if isinstance(f, And):
        return And(tuple(substitute(a, sigma) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, sigma) for a in f.args))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, sigma), substitute(f.rhs, sigma))
    inner = {v: t for v, t in sigma.items() if v != f.var}
    incoming = {v for t in inner.values() for v in term_vars(t)}
    if f.var in incoming:
        raise FormulaError(f"substitution would capture bound variable {f.var}")
    return type(f)(f.var, substitute(f.body, inner))


def check_formula(sig: Signature, f: Formula) -> None:
    """Raise :class:`SpecError` unless every atom in ``f`` is well-sorted."""
    for a in atoms(f):
        for t in a.args:
            sig.check_term(t)
        if a.pred == EQ:
            if len(a.args) != 2 or a.args[0].sort != a.args[1].sort:
                raise SpecError(f"ill-sorted equation {format_atom(a)}")
            continue
        if a.pred not in sig.predicates:
            raise SpecError(f"undeclared predicate {a.pred}")
        w = sig.predicates[a.pred]
        if tuple(t.sort for t in a.args) != tuple(w):
            raise SpecError(f"ill-sorted atom {format_atom(a)}")


# ---------------------------------------------------------------- normal forms

def nnf(f: Formula, negate_: bool = False) -> Formula:
    """Negation normal form of ``f`` (or of its negation)."""
    if isinstance(f, Atom):
        return Not(f) if negate_ else f
    if isinstance(f, Not):
        return nnf(f.arg, not negate_)
    if isinstance(f, And):
        parts = [nnf(a, negate_) for a in f.args]
        return disj(*parts) if negate_ else conj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, negate_) for a in f.args]
        return conj(*parts) if negate_ else disj(*parts)
    if isinstance(f, Implies):
        if negate_:
            return conj(nnf(f.lhs), nnf(f.rhs, True))
        return disj(nnf(f.lhs, True), nnf(f.rhs))
    if isinstance(f, Forall):
        return Exists(f.var, nnf(f.body, True)) if negate_ else Forall(f.var, nnf(f.body))
    return Forall(f.var, nnf(f.body, True)) if negate_ else Exists(f.var, nnf(f.body))


def negate(f: Formula) -> Formula:
    return nnf(f, True)


@dataclass(frozen=True)
class PrenexSentence:
    """``(Q1 x1:s1)...(Qk xk:sk) OR_i AND_j L_ij``.

    ``body`` keeps the quantifier-free matrix before distribution, for display.
    """
    prefix: tuple[tuple[str, Var], ...]
    matrix: tuple[tuple[Literal, ...], ...]
    body: Formula | None = None

    @property
    def variables(self) -> list[Var]:
        return [v for _, v in self.prefix]

    @property
    def positive(self) -> bool:
        return all(l.positive for c in self.matrix for l in c)

    def literals(self) -> list[Literal]:
        out: list[Literal] = []
        for c in self.matrix:
            for l in c:
                if l not in out:
                    out.append(l)
        return out

    def negative_predicates(self) -> list[str]:
        return sorted({l.atom.pred for c in self.matrix for l in c if not l.positive})

    def universal_sorts(self) -> list[str]:
        seen: list[str] = []
        for q, v in self.prefix:
            if q == "forall" and v.sort not in seen:
                seen.append(v.sort)
        return seen

    def matrix_formula(self) -> Formula:
        return disj(*(conj(*(l.to_formula() for l in c)) for c in self.matrix)) if self.matrix else FALSE

    def to_formula(self, display: bool = False) -> Formula:
        m = self.body if display and self.body is not None else self.matrix_formula()
        for q, v in reversed(self.prefix):
            m = Forall(v, m) if q == "forall" else Exists(v, m)
        return m

    def __str__(self) -> str:
        return format_formula(self.to_formula())


def _rename_apart(f: Formula, used: set[str], env: dict[Var, Var]) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(apply_substitution(env, t) for t in f.args))
    if isinstance(f, Not):
        return Not(_rename_apart(f.arg, used, env))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename_apart(a, used, env) for a in f.args))
    if isinstance(f, Implies):
        return Implies(_rename_apart(f.lhs, used, env), _rename_apart(f.rhs, used, env))
    name = f.var.name
    k = 1
    while name in used:
        k += 1
        name = f"{f.var.name}_{k}"
    used.add(name)
    nv = Var(name, f.var.sort)
    return type(f)(nv, _rename_apart(f.body, used, {**env, f.var: nv}))


def _pull(f: Formula) -> tuple[list[tuple[str, Var]], Formula]:
    if isinstance(f, Forall):
        p, m = _pull(f.body)
        return [("forall", f.var)] + p, m
    if isinstance(f, Exists):
        p, m = _pull(f.body)
        return [("exists", f.var)] + p, m
    if isinstance(f, (And, Or)):
        prefix: list[tuple[str, Var]] = []
        parts = []
        for a in f.args:
            p, m = _pull(a)
            prefix += p
            parts.append(m)
        return prefix, (conj(*parts) if isinstance(f, And) else disj(*parts))
    return [], f


def dnf(f: Formula, limit: int = DNF_LITERAL_LIMIT) -> tuple[tuple[Literal, ...], ...]:
    """Disjunctive normal form of a quantifier-free NNF formula.

    Conjuncts containing complementary literals are dropped; raises
    :class:`FormulaError` when the result would exceed ``limit`` literals.
    """
    def go(g: Formula) -> list[tuple[Literal, ...]]:
        if isinstance(g, Atom):
            return [(Literal(g, True),)]
        if isinstance(g, Not):
            if not isinstance(g.arg, Atom):
                raise FormulaError("dnf expects negation normal form")
            return [(Literal(g.arg, False),)]
        if isinstance(g, Or):
            out: list[tuple[Literal, ...]] = []
            for a in g.args:
                out.extend(go(a))
            return out
        if isinstance(g, And):
            acc: list[tuple[Literal, ...]] = [()]
            for a in g.args:
                part = go(a)
                acc = [x + y for x in acc for y in part]
                if sum(len(c) for c in acc) > limit:
                    raise FormulaError(f"DNF exceeds {limit} literals")
            return acc
        raise FormulaError("dnf expects a quantifier-free formula")

    out: list[tuple[Literal, ...]] = []
    for c in go(f):
        lits: list[Literal] = []
        for l in c:
            if l not in lits:
                lits.append(l)
        if any(l.negated() in lits for l in lits):
            continue
        t = tuple(lits)
        if t not in out:
            out.append(t)
    if sum(len(c) for c in out) > limit:
        raise FormulaError(f"DNF exceeds {limit} literals")
    return tuple(out)


def to_prenex(f: Formula, limit: int = DNF_LITERAL_LIMIT) -> PrenexSentence:
    """Prenex form with a DNF matrix.

    Quantifiers are pulled out in left-to-right syntactic order; bound
    variables are renamed apart first.
    """
    g = _rename_apart(nnf(f), {v.name for v in free_vars(f)}, {})
    prefix, body = _pull(g)
    return PrenexSentence(tuple(prefix), dnf(body, limit), body)


# ---------------------------------------------------------------- quantifier analysis

@dataclass(frozen=True)
class QuantifierAnalysis:
    """Index sets over a prenex prefix (1-based positions)."""
    U: tuple[int, ...]
    E: tuple[int, ...]
    U_eps: Mapping[int, tuple[int, ...]]
    U_exists: tuple[int, ...]
    U_forall: tuple[int, ...]

    def eta(self, e: int) -> int:
        return len(self.U_eps[e])


def quantifier_analysis(psi: PrenexSentence) -> QuantifierAnalysis:
    U = tuple(i for i, (q, _) in enumerate(psi.prefix, 1) if q == "forall")
    E = tuple(i for i, (q, _) in enumerate(psi.prefix, 1) if q == "exists")
    U_eps = {e: tuple(u for u in U if u < e) for e in E}
    last = max(E) if E else 0
    U_exists = tuple(u for u in U if u < last)
    U_forall = tuple(u for u in U if u > last)
    return QuantifierAnalysis(U, E, U_eps, U_exists, U_forall)


@dataclass(frozen=True)
class SkolemizedSentence:
    prefix: tuple[Var, ...]
    matrix: tuple[tuple[Literal, ...], ...]
    signature: Signature
    source: PrenexSentence
    skolem_terms: Mapping[int, Term] = field(default_factory=dict)
    body: Formula | None = None

    @property
    def skolem_symbols(self) -> list[str]:
        return [t.symbol for t in self.skolem_terms.values() if isinstance(t, App)]

    def to_formula(self, display: bool = False) -> Formula:
        if display and self.body is not None:
            m = self.body
        else:
            m = disj(*(conj(*(l.to_formula() for l in c)) for c in self.matrix)) if self.matrix else FALSE
        return forall(self.prefix, m)

    def __str__(self) -> str:
        return format_formula(self.to_formula(display=True))


def skolemize(psi: PrenexSentence, sig: Signature | None = None) -> SkolemizedSentence:
    """Replace each existential variable by a fresh ``sk_<name>`` applied to the
    universals preceding it."""
    sig = sig or Signature(tuple(sorted({v.sort for v in psi.variables})))
    qa = quantifier_analysis(psi)
    taken = set(sig.functions) | set(sig.predicates)
    fresh: dict[str, tuple[tuple[str, ...], str]] = {}
    sigma: dict[Var, Term] = {}
    sk_terms: dict[int, Term] = {}
    for e in qa.E:
        x = psi.prefix[e - 1][1]
        args = tuple(psi.prefix[u - 1][1] for u in qa.U_eps[e])
        name = f"sk_{x.name}"
        k = 1
        while name in taken:
            k += 1
            name = f"sk_{x.name}{k}"
        taken.add(name)
        fresh[name] = (tuple(a.sort for a in args), x.sort)
        t = App(name, args, x.sort)
        sigma[x] = t
        sk_terms[e] = t
    for i in qa.U:
        sk_terms[i] = psi.prefix[i - 1][1]
    matrix = tuple(
        tuple(Literal(Atom(l.atom.pred, tuple(apply_substitution(sigma, t) for t in l.atom.args)), l.positive) for l in c)
        for c in psi.matrix)
    body = substitute(psi.body, sigma) if psi.body is not None else None
    ext = sig.extend(sorts=[s for _, s in fresh.values() if s not in sig.sorts], functions=fresh)
    return SkolemizedSentence(tuple(psi.prefix[u - 1][1] for u in qa.U), matrix, ext, psi,
                              dict(sorted(sk_terms.items())), body)


def relevant_sorts(sig: Signature, s: str) -> set[str]:
    """Least set containing ``s`` and the argument sorts of every symbol whose
    result sort is already in the set."""
    if s not in sig.sorts:
        raise SpecError(f"undeclared sort {s}")
    out = {s}
    changed = True
    while changed:
        changed = False
        for w, r in sig.functions.values():
            if r in out:
                for si in w:
                    if si not in out:
                        out.add(si)
                        changed = True
    return out


# ---------------------------------------------------------------- printing

def _infix(pred: str) -> bool:
    return pred in (EQ, ">") or pred.startswith("->")


def format_term(t: Term) -> str:
    return str(t)


def format_atom(a: Atom) -> str:
    if _infix(a.pred) and len(a.args) == 2:
        return f"{a.args[0]} {a.pred} {a.args[1]}"
    return f"{a.pred}({', '.join(map(str, a.args))})"


_PREC = {"atom": 5, "not": 4, "and": 3, "or": 2, "implies": 1, "quant": 0}


def format_formula(f: Formula) -> str:
    def kind(g: Formula) -> str:
        if isinstance(g, Atom) or g in (TRUE, FALSE):
            return "atom"
        if isinstance(g, Not):
            return "not"
        if isinstance(g, And):
            return "and"
        if isinstance(g, Or):
            return "or"
        if isinstance(g, Implies):
            return "implies"
        return "quant"

    def go(g: Formula, ctx: int) -> str:
        k = kind(g)
        if g == TRUE:
            s = "true"
        elif g == FALSE:
            s = "false"
        elif isinstance(g, Atom):
            s = format_atom(g)
        elif isinstance(g, Not):
            inner = go(g.arg, _PREC["not"] + 1)
            s = f"~{inner}" if inner.startswith("(") else f"~({inner})"
        elif isinstance(g, And):
            s = r" /\ ".join(go(a, _PREC["and"] + 1) for a in g.args)
        elif isinstance(g, Or):
            s = r" \/ ".join(go(a, _PREC["or"] + 1) for a in g.args)
        elif isinstance(g, Implies):
            s = f"{go(g.lhs, _PREC['implies'] + 1)} => {go(g.rhs, _PREC['implies'])}"
        else:
            q = "forall" if isinstance(g, Forall) else "exists"
            s = f"({q} {g.var.name}:{g.var.sort}) {go(g.body, _PREC['quant'])}"
            s = s.replace(") (", ")(", 1) if isinstance(g.body, (Forall, Exists)) else s
        if _PREC[k] < ctx:
            return f"({s})"
        return s

    return go(f, 0)


# ---------------------------------------------------------------- reading

_FTOKEN = re.compile(r"\s+|/\\|\\/|=>|~|[(),:]|[^\s(),:~]+")


class _FormulaReader:
    def __init__(self, text: str, sig: Signature, variables: Mapping[str, Var] | None = None,
                 relation_alias=None):
        self.toks = [m.group(0) for m in _FTOKEN.finditer(text) if not m.group(0).isspace()]
        self.i = 0
        self.sig = sig
        self.scope: dict[str, Var] = dict(variables or {})
        self.alias = relation_alias

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        t = self.peek()
        if t is None:
            raise SpecError("unexpected end of formula")
        self.i += 1
        return t

    def expect(self, t: str) -> None:
        got = self.next()
        if got != t:
            raise SpecError(f"expected '{t}' but found '{got}'")

    def formula(self) -> Formula:
        lhs = self.disjunction()
        if self.peek() == "=>":
            self.next()
            return Implies(lhs, self.formula())
        return lhs

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek() == "\\/":
            self.next()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.peek() == "/\\":
            self.next()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        t = self.peek()
        if t == "~":
            self.next()
            return Not(self.unary())
        if t == "(" and self.peek(1) in ("forall", "exists"):
            self.next()
            q = self.next()
            bound: list[Var] = []
            while True:
                names = [self.next()]
                while self.peek() == ",":
                    self.next()
                    names.append(self.next())
                self.expect(":")
                sort = self.next()
                if sort not in self.sig.sorts:
                    raise SpecError(f"unknown sort {sort} in quantifier")
                bound += [Var(n, sort) for n in names]
                if self.peek() == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            saved = dict(self.scope)
            for v in bound:
                self.scope[v.name] = v
            body = self.formula()
            self.scope = saved
            return (forall if q == "forall" else exists)(bound, body)
        if t == "(":
            save = self.i
            self.next()
            try:
                inner = self.formula()
                self.expect(")")
                return inner
            except SpecError:
                self.i = save
        if t == "true":
            self.next()
            return TRUE
        if t == "false":
            self.next()
            return FALSE
        return self.atom()

    def term(self) -> Term:
        name = self.next()
        if name in "(),:":
            raise SpecError(f"unexpected '{name}' in term")
        if self.peek() == "(" and name not in self.scope:
            self.next()
            args = [self.term()]
            while self.peek() == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
            return self.sig.app(name, *args)
        if name in self.scope:
            return self.scope[name]
        if name in self.sig.functions:
            return self.sig.app(name)
        if name.isdigit() and "Nat" in self.sig.sorts:
            return numeral(int(name))
        raise SpecError(f"unknown symbol or unbound variable '{name}'")

    def atom(self) -> Formula:
        t = self.peek()
        if t in self.sig.predicates and self.peek(1) == "(":
            self.next()
            self.next()
            args = [self.term()]
            while self.peek() == ",":
                self.next()
                args.append(self.term())
            self.expect(")")
            return Atom(t, tuple(args))
        lhs = self.term()
        op = self.next()
        rhs = self.term()
        if op not in (EQ, ">") and op not in self.sig.predicates:
            if self.alias is not None:
                op = self.alias(op, lhs.sort)
            if op not in self.sig.predicates:
                raise SpecError(f"unknown relation '{op}'")
        return Atom(op, (lhs, rhs))


def default_relation_alias(op: str, sort: str) -> str:
    return f"{op}_{sort}"


def parse_formula(text: str, sig: Signature, variables: Mapping[str, Var] | None = None) -> Formula:
    """Read a formula in listing syntax.

    Unsuffixed rewrite relations such as ``->`` and ``->*`` resolve to the
    per-sort predicate of the left argument.
    """
    rd = _FormulaReader(text, sig, variables, default_relation_alias)
    f = rd.formula()
    if rd.peek() is not None:
        raise SpecError(f"unexpected '{rd.peek()}' after formula")
    check_formula(_with_numerals(sig, f), f)
    return f


def numeral(k: int) -> App:
    """Nat-sorted numeral; denotes ``k`` directly in symbolic-Nat structures."""
    return App(str(k), (), "Nat")


def _with_numerals(sig: Signature, f: Formula) -> Signature:
    nums = {s: ((), "Nat") for s in function_symbols(f) if s.isdigit() and s not in sig.functions}
    return sig.extend(functions=nums) if nums else sig

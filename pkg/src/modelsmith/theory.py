"""Compile rewrite specifications into first-order theories and property sentences."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .fol import (
    Atom,
    Formula,
    Implies,
    Not,
    check_formula,
    conj,
    disj,
    exists,
    forall,
    format_formula,
    is_closed,
    parse_formula,
)
from .terms import GT, NAT, App, RewriteSpec, Signature, SpecError, Term, Var, term_vars


def step_pred(sort: str) -> str:
    return f"->_{sort}"


def star_pred(sort: str) -> str:
    return f"->*_{sort}"


def top_pred(sort: str) -> str:
    return f"->top_{sort}"


def nstep_pred(sort: str) -> str:
    """``x (->* . ->top)^n y`` encoded as a ternary predicate of rank ``s Nat s``."""
    return f"->n_{sort}"


def iter_pred(sort: str) -> str:
    """``x ->^n y``: n+1 ordinary rewrite steps, rank ``s Nat s``."""
    return f"->iter_{sort}"


@dataclass(frozen=True)
class NatSymbols:
    zero: str
    succ: str | None = None


def nat_extension(sig: Signature, with_succ: bool = False) -> tuple[Signature, NatSymbols]:
    """Add sort ``Nat``, a zero constant, ``>`` and optionally a successor.

    Names are ``0`` and ``succ`` unless the base signature already uses them
    for something else.
    """
    def pick(base: str, rank: tuple) -> str:
        if sig.functions.get(base) == rank or base not in sig.functions and base not in sig.predicates:
            return base
        alt = f"{base}_Nat"
        if alt in sig.functions and sig.functions[alt] != rank:
            raise SpecError(f"cannot find a free name for the Nat symbol {base}")
        return alt

    zero = pick("0", ((), NAT))
    fns: dict = {zero: ((), NAT)}
    succ = None
    if with_succ:
        succ = pick("succ", ((NAT,), NAT))
        fns[succ] = ((NAT,), NAT)
    ext = sig.extend(sorts=[NAT], functions=fns, predicates={GT: (NAT, NAT)})
    return ext, NatSymbols(zero, succ)


def nat_symbols_of(sig: Signature) -> NatSymbols:
    zero = next((f for f, r in sig.functions.items() if r == ((), NAT) and f in ("0", "0_Nat")), None)
    if zero is None:
        raise SpecError("signature has no Nat zero")
    succ = next((f for f, r in sig.functions.items() if r == ((NAT,), NAT) and f in ("succ", "succ_Nat")), None)
    return NatSymbols(zero, succ)


@dataclass(frozen=True)
class Theory:
    signature: Signature
    sentences: tuple[Formula, ...] = ()
    labels: tuple[str, ...] = ()
    # symbols with a fixed meaning over Nat: name -> "zero" | "succ" | "gt"
    builtins: Mapping[str, str] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self) -> None:
        if self.labels and len(self.labels) != len(self.sentences):
            raise ValueError("labels and sentences differ in length")
        for f in self.sentences:
            if not is_closed(f):
                raise SpecError(f"sentence is not closed: {format_formula(f)}")
            check_formula(self.signature, f)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def labelled(self) -> list[tuple[str, Formula]]:
        labels = self.labels or tuple(f"{self.name or 's'}{i + 1}" for i in range(len(self.sentences)))
        return list(zip(labels, self.sentences))

    def union(self, *others: "Theory", name: str | None = None) -> "Theory":
        sig = self.signature
        sents = list(self.sentences)
        labels = [l for l, _ in self.labelled()]
        builtins = dict(self.builtins)
        for o in others:
            sig = sig.merge(o.signature)
            builtins.update(o.builtins)
            for l, f in o.labelled():
                if f not in sents:
                    sents.append(f)
                    labels.append(l)
        return Theory(sig, tuple(sents), tuple(labels), builtins, name if name is not None else self.name)

    def with_sentences(self, sentences: Iterable[Formula], label: str = "extra",
                       signature: Signature | None = None) -> "Theory":
        extra = Theory(signature or self.signature, tuple(sentences), (), {}, label)
        return self.union(extra)

    def listing(self) -> str:
        return "\n".join(format_formula(f) for f in self.sentences)

    @property
    def has_nat(self) -> bool:
        return NAT in self.signature.sorts


def empty_theory(sig: Signature) -> Theory:
    return Theory(sig)


def _nat_builtins(ns: NatSymbols) -> dict[str, str]:
    out = {ns.zero: "zero", GT: "gt"}
    if ns.succ:
        out[ns.succ] = "succ"
    return out


# ---------------------------------------------------------------- variable naming

class VarPool:
    """Fresh variable names, preferring the spec's declared variables of each sort."""

    GENERIC = ("x", "y", "z", "u", "v", "w")

    def __init__(self, spec: RewriteSpec | None = None, taken: Iterable[str] = ()):
        self.declared: dict[str, list[str]] = {}
        for name, v in (spec.variables if spec else {}).items():
            self.declared.setdefault(v.sort, []).append(name)
        self.taken = set(taken)
        if spec is not None:
            self.taken |= set(spec.signature.functions) | set(spec.signature.predicates)

    def fresh(self, sort: str, hint: str | None = None) -> Var:
        cands: list[str] = []
        if hint:
            cands.append(hint)
        cands += self.declared.get(sort, [])
        cands += list(self.GENERIC)
        for c in cands:
            if c not in self.taken:
                self.taken.add(c)
                return Var(c, sort)
        k = 1
        base = hint or (self.declared.get(sort) or ["x"])[0]
        while f"{base}{k}" in self.taken:
            k += 1
        self.taken.add(f"{base}{k}")
        return Var(f"{base}{k}", sort)


# ---------------------------------------------------------------- rewrite theory

def rewrite_sorts(spec: RewriteSpec) -> list[str]:
    """Sorts that get ``->`` and ``->*`` predicates.

    Sorts of rule subterms, closed upward through argument positions.  A spec
    without rules falls back to every declared sort.
    """
    sig = spec.signature
    found: set[str] = set()
    for r in spec.rules:
        for t in (r.lhs, r.rhs, *[x for c in r.conditions for x in c]):
            stack = [t]
            while stack:
                u = stack.pop()
                found.add(u.sort)
                if isinstance(u, App):
                    stack.extend(u.args)
    if not spec.rules:
        found = set(sig.sorts)
    changed = True
    while changed:
        changed = False
        for w, s in sig.functions.values():
            if s not in found and any(a in found for a in w):
                found.add(s)
                changed = True
    return [s for s in sig.sorts if s in found]


def rewrite_signature(spec: RewriteSpec) -> Signature:
    preds = {}
    for s in rewrite_sorts(spec):
        preds[step_pred(s)] = (s, s)
        preds[star_pred(s)] = (s, s)
    return spec.signature.extend(predicates=preds)


def _rel(pred: str, a: Term, b: Term) -> Atom:
    return Atom(pred, (a, b))


def _closure_vars(vs: Sequence[Var]) -> list[Var]:
    return list(vs)


def generate_rewrite_theory(spec: RewriteSpec) -> Theory:
    """The Horn theory of one-step and many-step rewriting for ``spec``."""
    sig = rewrite_signature(spec)
    sorts = rewrite_sorts(spec)
    sents: list[Formula] = []
    labels: list[str] = []
    for s in sorts:
        x, y, z = Var("x", s), Var("y", s), Var("z", s)
        sents.append(forall([x], _rel(star_pred(s), x, x)))
        labels.append(f"refl_{s}")
        sents.append(forall([x, y, z], Implies(conj(_rel(step_pred(s), x, y), _rel(star_pred(s), y, z)),
                                               _rel(star_pred(s), x, z))))
        labels.append(f"trans_{s}")
    for f, (w, s) in spec.signature.functions.items():
        for i, si in enumerate(w):
            if si not in sorts:
                continue
            x, y = Var("x", si), Var("y", si)
            others = [j for j in range(len(w)) if j != i]
            zs = {j: Var("z" if len(others) == 1 else f"z{k + 1}", w[j]) for k, j in enumerate(others)}
            left = tuple(x if j == i else zs[j] for j in range(len(w)))
            right = tuple(y if j == i else zs[j] for j in range(len(w)))
            qv = [x, y] + [zs[j] for j in others]
            sents.append(forall(qv, Implies(_rel(step_pred(si), x, y),
                                            _rel(step_pred(s), App(f, left, s), App(f, right, s)))))
            labels.append(f"cong_{f}_{i + 1}")
    for k, r in enumerate(spec.rules, 1):
        head = _rel(step_pred(r.sort), r.lhs, r.rhs)
        if r.conditions:
            body: Formula = Implies(conj(*(_rel(star_pred(c.sort), c, d) for c, d in r.conditions)), head)
        else:
            body = head
        sents.append(forall(r.variables(), body))
        labels.append(f"rule{k}")
    return Theory(sig, tuple(sents), tuple(labels), {}, "R")


def generate_topmost_theory(spec: RewriteSpec) -> Theory:
    """``(forall vars) l ->top r`` for each rule; no congruence."""
    if spec.is_conditional:
        raise SpecError("topmost theory is only defined for unconditional rules")
    preds = {top_pred(s): (s, s) for s in dict.fromkeys(r.sort for r in spec.rules)}
    sig = spec.signature.extend(predicates=preds)
    sents = tuple(forall(r.variables(), _rel(top_pred(r.sort), r.lhs, r.rhs)) for r in spec.rules)
    labels = tuple(f"top{k}" for k in range(1, len(sents) + 1))
    return Theory(sig, sents, labels, {}, "Rtop")


def generate_nstep_theory(spec: RewriteSpec, topmost: bool = True) -> Theory:
    """Base and inductive sentences of the Nat-indexed step relation.

    With ``topmost`` the relation is the composition ``->* . ->top``;
    otherwise it iterates plain one-step rewriting.
    """
    base_sig = rewrite_signature(spec)
    if topmost:
        base_sig = base_sig.merge(generate_topmost_theory(spec).signature)
    sig, ns = nat_extension(base_sig, with_succ=True)
    sorts = list(dict.fromkeys(r.sort for r in spec.rules)) or list(rewrite_sorts(spec))
    name_of = nstep_pred if topmost else iter_pred
    sig = sig.extend(predicates={name_of(s): (s, NAT, s) for s in sorts})
    zero = App(ns.zero, (), NAT)
    n = Var("n", NAT)
    sents: list[Formula] = []
    labels: list[str] = []
    for s in sorts:
        x, y, z = Var("x", s), Var("y", s), Var("z", s)
        p = name_of(s)
        if topmost:
            prem = conj(_rel(star_pred(s), x, y), _rel(top_pred(s), y, z))
            sents.append(forall([x, y, z], Implies(prem, Atom(p, (x, zero, z)))))
        else:
            sents.append(forall([x, y], Implies(_rel(step_pred(s), x, y), Atom(p, (x, zero, y)))))
        labels.append(f"{'nstep' if topmost else 'iter'}_base_{s}")
        prem = conj(Atom(p, (x, zero, y)), Atom(p, (y, n, z)))
        sents.append(forall([x, y, z, n], Implies(prem, Atom(p, (x, App(ns.succ, (n,), NAT), z)))))
        labels.append(f"{'nstep' if topmost else 'iter'}_step_{s}")
    return Theory(sig, tuple(sents), tuple(labels), _nat_builtins(ns), "Rn")


def theory_for(spec: RewriteSpec, formula: Formula | None = None) -> Theory:
    """Rewrite theory plus whatever auxiliary theories ``formula`` refers to."""
    th = generate_rewrite_theory(spec)
    if formula is None:
        return th
    preds = {a.pred for a in _atoms(formula)}
    if any(p.startswith("->n_") or p.startswith("->top_") for p in preds):
        th = th.union(generate_topmost_theory(spec), generate_nstep_theory(spec, True))
    if any(p.startswith("->iter_") for p in preds):
        th = th.union(generate_nstep_theory(spec, False))
    return th


def _atoms(f: Formula):
    from .fol import atoms
    return atoms(f)


def full_signature(spec: RewriteSpec) -> Signature:
    """Base signature with every rewrite-related predicate, for parsing formulas."""
    sig = rewrite_signature(spec)
    if spec.rules and not spec.is_conditional:
        sig = sig.merge(generate_topmost_theory(spec).signature)
        sig = sig.merge(generate_nstep_theory(spec, True).signature)
        sig = sig.merge(generate_nstep_theory(spec, False).signature)
    return sig


# ---------------------------------------------------------------- property templates

TEMPLATES = (
    "GroundReducible", "CompletelyDefinedSymbol", "CompletelyDefinedTRS", "Productive",
    "NormalizingTerm", "NormalizingTRS", "WCR", "CR", "TopTermination",
    "InfinitelyRootReducible", "Nonterminating", "Joinability", "Reachability", "Formula",
)

_ALIASES = {"WN": "NormalizingTRS", "GR": "GroundReducible"}


@dataclass(frozen=True)
class PropertyTemplate:
    name: str
    params: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.name not in TEMPLATES:
            raise SpecError(f"unknown property template {self.name}")

    @classmethod
    def parse(cls, text: str) -> "PropertyTemplate":
        """``Name`` or ``Name:p1,p2`` (commas inside parentheses do not split)."""
        name, _, rest = text.partition(":")
        name = _ALIASES.get(name.strip(), name.strip())
        if name == "Formula":
            return cls(name, (rest,))
        return cls(name, tuple(_split_params(rest)) if rest.strip() else ())

    def __str__(self) -> str:
        return self.name + (":" + ",".join(self.params) if self.params else "")


def _split_params(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def _single_sort(spec: RewriteSpec, params: Sequence[str], what: str) -> str:
    if params:
        if params[0] not in spec.signature.sorts:
            raise SpecError(f"{what}: unknown sort {params[0]}")
        return params[0]
    sorts = rewrite_sorts(spec)
    if len(sorts) != 1:
        raise SpecError(f"{what} needs a sort parameter for a many-sorted spec")
    return sorts[0]


def _parse_param_term(spec: RewriteSpec, text: str) -> Term:
    from .terms import parse_term
    return parse_term(text, spec.signature, spec.variables)


def instantiate_property(template: PropertyTemplate, spec: RewriteSpec) -> Formula:
    """The closed sentence for ``template`` over the signature of ``spec``."""
    sig = spec.signature
    p = template.params
    name = template.name

    def need(k: int) -> None:
        if len(p) != k:
            raise SpecError(f"{name} expects {k} parameter(s), got {len(p)}")

    if name == "Formula":
        return parse_formula(p[0], full_signature(spec))

    if name == "GroundReducible":
        need(1)
        t = _parse_param_term(spec, p[0])
        pool = VarPool(spec, [v.name for v in term_vars(t)])
        y = pool.fresh(t.sort)
        return forall(term_vars(t), exists([y], _rel(step_pred(t.sort), t, y)))

    if name == "CompletelyDefinedSymbol":
        need(1)
        f = p[0]
        if f not in sig.functions:
            raise SpecError(f"unknown symbol {f}")
        if f not in spec.defined_symbols():
            raise SpecError(f"{f} is not a defined symbol")
        w, s = sig.functions[f]
        pool = VarPool(spec)
        xs = [pool.fresh(si) for si in w]
        y = pool.fresh(s)
        return forall(xs, exists([y], _rel(step_pred(s), App(f, tuple(xs), s), y)))

    if name == "CompletelyDefinedTRS":
        need(0)
        pool = VarPool(spec)
        xs_all: list[Var] = []
        ys: list[Var] = []
        parts = []
        for f in spec.defined_symbols():
            w, s = sig.functions[f]
            xs = [pool.fresh(si) for si in w]
            y = pool.fresh(s)
            xs_all += xs
            ys.append(y)
            parts.append(_rel(step_pred(s), App(f, tuple(xs), s), y))
        return forall(xs_all, exists(ys, conj(*parts)))

    if name == "Productive":
        s = _single_sort(spec, p, name)
        cons = [c for c in spec.constructors() if sig.functions[c][1] == s]
        if not cons:
            raise SpecError(f"Productive: no constructors of sort {s}")
        pool = VarPool(spec)
        x = pool.fresh(s)
        ys: list[Var] = []
        parts = []
        for c in cons:
            w, _ = sig.functions[c]
            cy = [pool.fresh(si) for si in w]
            ys += cy
            parts.append(_rel(star_pred(s), x, App(c, tuple(cy), s)))
        return forall([x], exists(ys, disj(*parts)))

    if name == "NormalizingTerm":
        need(1)
        t = _parse_param_term(spec, p[0])
        pool = VarPool(spec, [v.name for v in term_vars(t)])
        x = pool.fresh(t.sort)
        y = pool.fresh(t.sort)
        body = conj(_rel(star_pred(t.sort), t, x), Not(exists([y], _rel(step_pred(t.sort), x, y))))
        return forall(term_vars(t), exists([x], body))

    if name == "NormalizingTRS":
        s = _single_sort(spec, p, name)
        x, y, z = Var("x", s), Var("y", s), Var("z", s)
        body = conj(_rel(star_pred(s), x, y), Not(exists([z], _rel(step_pred(s), y, z))))
        return forall([x], exists([y], body))

    if name in ("WCR", "CR"):
        s = _single_sort(spec, p, name)
        x, y, z, u = (Var(n, s) for n in "xyzu")
        rel = step_pred(s) if name == "WCR" else star_pred(s)
        join = exists([u], conj(_rel(star_pred(s), y, u), _rel(star_pred(s), z, u)))
        return forall([x, y, z], Implies(conj(_rel(rel, x, y), _rel(rel, x, z)), join))

    if name in ("TopTermination", "InfinitelyRootReducible", "Nonterminating"):
        s = _single_sort(spec, p, name)
        if spec.is_conditional:
            raise SpecError(f"{name} needs an unconditional spec")
        x, y, n = Var("x", s), Var("y", s), Var("n", NAT)
        pred = iter_pred(s) if name == "Nonterminating" else nstep_pred(s)
        infinite = exists([x], forall([n], exists([y], Atom(pred, (x, n, y)))))
        return Not(infinite) if name == "TopTermination" else infinite

    if name == "Joinability":
        need(2)
        t, u = (_parse_param_term(spec, q) for q in p)
        if t.sort != u.sort:
            raise SpecError("Joinability: terms have different sorts")
        vs = list(dict.fromkeys(term_vars(t) + term_vars(u)))
        pool = VarPool(spec, [v.name for v in vs])
        z = pool.fresh(t.sort)
        return forall(vs, exists([z], conj(_rel(star_pred(t.sort), t, z), _rel(star_pred(t.sort), u, z))))

    if name == "Reachability":
        need(2)
        t, u = (_parse_param_term(spec, q) for q in p)
        if t.sort != u.sort:
            raise SpecError("Reachability: terms have different sorts")
        vs = list(dict.fromkeys(term_vars(t) + term_vars(u)))
        return exists(vs, _rel(star_pred(t.sort), t, u))

    raise SpecError(f"unhandled template {name}")

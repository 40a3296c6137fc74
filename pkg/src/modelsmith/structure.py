"""Finite many-sorted structures, sentence evaluation and a plain-text format."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .fol import And, Atom, Forall, Formula, Implies, Not, Or
from .lia import (
    LinearFunction,
    LinearPredicate,
    LiaError,
    format_presburger,
    parse_linear_expr,
    parse_linear_formula,
    evaluate_presburger,
)
from .terms import EQ, GT, NAT, Signature, Term, Var


class EvalError(Exception):
    pass


class StructureFormatError(Exception):
    pass


@dataclass(frozen=True)
class NatMode:
    kind: str  # "segment" or "symbolic"
    bound: int = 0

    @staticmethod
    def segment(B: int) -> "NatMode":
        if B < 0:
            raise ValueError("segment bound must be non-negative")
        return NatMode("segment", B)

    @staticmethod
    def symbolic() -> "NatMode":
        return NatMode("symbolic", 0)

    @property
    def symbolic_(self) -> bool:
        return self.kind == "symbolic"

    def __str__(self) -> str:
        return f"segment {self.bound}" if self.kind == "segment" else "symbolic"


@dataclass(frozen=True)
class SortedStructure:
    """Carriers are ``0..n-1`` per finite sort; ``labels`` give the printed names.

    Function tables map argument tuples to element indices.  A ``Nat`` segment
    ``{0..B}`` uses the numbers themselves as elements.
    """
    carriers: Mapping[str, int]
    fn_ranks: Mapping[str, tuple[tuple[str, ...], str]] = field(default_factory=dict)
    pred_ranks: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple, int]] = field(default_factory=dict)
    predicates: Mapping[str, frozenset] = field(default_factory=dict)
    labels: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    nat: NatMode | None = None
    linear_functions: Mapping[str, LinearFunction] = field(default_factory=dict)
    linear_predicates: Mapping[str, LinearPredicate] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for s, n in self.carriers.items():
            if s == NAT:
                raise ValueError("Nat is described by the nat mode, not a carrier size")
            if n < 1:
                raise ValueError(f"carrier of {s} must be non-empty")
            lab = self.labels.get(s)
            if lab is not None and (len(lab) != n or len(set(lab)) != n):
                raise ValueError(f"labels of {s} must be {n} distinct integers")

    # ------------------------------------------------------------ carriers
    @property
    def symbolic(self) -> bool:
        return self.nat is not None and self.nat.kind == "symbolic"

    def size(self, sort: str) -> int:
        if sort == NAT:
            if self.nat is None:
                raise EvalError("structure has no Nat carrier")
            if self.symbolic:
                raise EvalError("Nat is symbolic; use evaluate_mixed")
            return self.nat.bound + 1
        try:
            return self.carriers[sort]
        except KeyError:
            raise EvalError(f"no carrier for sort {sort}") from None

    def elements(self, sort: str) -> range:
        return range(self.size(sort))

    def label(self, sort: str, e: int) -> int:
        if sort == NAT:
            return e
        lab = self.labels.get(sort)
        return lab[e] if lab else e

    def element_of_label(self, sort: str, lab: int) -> int:
        if sort == NAT:
            return lab
        labs = self.labels.get(sort) or tuple(range(self.carriers[sort]))
        try:
            return labs.index(lab)
        except ValueError:
            raise EvalError(f"{lab} is not an element of {sort}") from None

    @property
    def sorts(self) -> list[str]:
        out = list(self.carriers)
        if self.nat is not None:
            out.append(NAT)
        return out

    def domain_size(self) -> int:
        return sum(self.carriers.values())

    # ------------------------------------------------------------ derived structures
    def with_linear_predicate(self, name: str, lp: LinearPredicate) -> "SortedStructure":
        lps = dict(self.linear_predicates)
        lps[name] = lp
        return replace(self, linear_predicates=lps)

    def with_tables(self, functions: Mapping | None = None, predicates: Mapping | None = None,
                    fn_ranks: Mapping | None = None, pred_ranks: Mapping | None = None) -> "SortedStructure":
        return replace(
            self,
            functions={**self.functions, **(functions or {})},
            predicates={**self.predicates, **(predicates or {})},
            fn_ranks={**self.fn_ranks, **(fn_ranks or {})},
            pred_ranks={**self.pred_ranks, **(pred_ranks or {})},
        )

    def reduct(self, sig: Signature) -> "SortedStructure":
        """Forget every symbol and sort not in ``sig``."""
        keep_f = {f for f in self.fn_ranks if f in sig.functions}
        keep_p = {p for p in self.pred_ranks if p in sig.predicates}
        return SortedStructure(
            {s: n for s, n in self.carriers.items() if s in sig.sorts},
            {f: r for f, r in self.fn_ranks.items() if f in keep_f},
            {p: r for p, r in self.pred_ranks.items() if p in keep_p},
            {f: t for f, t in self.functions.items() if f in keep_f},
            {p: t for p, t in self.predicates.items() if p in keep_p},
            {s: l for s, l in self.labels.items() if s in sig.sorts},
            self.nat if NAT in sig.sorts else None,
            {f: t for f, t in self.linear_functions.items() if f in keep_f},
            {p: t for p, t in self.linear_predicates.items() if p in keep_p},
        )

    def relabel(self, perm: Mapping[str, Sequence[int]]) -> "SortedStructure":
        """Isomorphic copy: element ``e`` of sort ``s`` becomes ``perm[s][e]``."""
        def mp(s: str, e: int) -> int:
            return perm[s][e] if s in perm else e

        fns = {}
        for f, tab in self.functions.items():
            w, s = self.fn_ranks[f]
            fns[f] = {tuple(mp(si, a) for si, a in zip(w, args)): mp(s, v) for args, v in tab.items()}
        preds = {}
        for p, tab in self.predicates.items():
            w = self.pred_ranks[p]
            preds[p] = frozenset(tuple(mp(si, a) for si, a in zip(w, t)) for t in tab)
        labels = {}
        for s, lab in self.labels.items():
            if s in perm:
                new = [0] * len(lab)
                for e, l in enumerate(lab):
                    new[perm[s][e]] = l
                labels[s] = tuple(new)
            else:
                labels[s] = lab
        return replace(self, functions=fns, predicates=preds, labels=labels)


def check_nat_hypotheses(A: SortedStructure) -> None:
    """Zero denotes 0 and ``>`` is the standard order, when present."""
    if A.nat is None:
        return
    for f, (w, s) in A.fn_ranks.items():
        if s == NAT and not w and f in ("0", "0_Nat"):
            if f in A.linear_functions:
                e = A.linear_functions[f].expr
                if e.coeffs or e.const != 0:
                    raise EvalError(f"Nat zero {f} must denote 0")
            elif f in A.functions and A.functions[f].get(()) != 0:
                raise EvalError(f"Nat zero {f} must denote 0")
    if GT in A.predicates and A.nat.kind == "segment":
        std = {(a, b) for a in range(A.nat.bound + 1) for b in range(A.nat.bound + 1) if a > b}
        if set(A.predicates[GT]) != std:
            raise EvalError("> must be the standard order on Nat")
    if GT in A.linear_predicates:
        lp = A.linear_predicates[GT]
        for a in range(6):
            for b in range(6):
                if evaluate_presburger(lp.formula, dict(zip(lp.slots, (a, b)))) != (a > b):
                    raise EvalError("> must be the standard order on Nat")


# ---------------------------------------------------------------- evaluation

def eval_term(A: SortedStructure, t: Term, alpha: Mapping[Var, int]) -> int:
    if isinstance(t, Var):
        try:
            return alpha[t]
        except KeyError:
            raise EvalError(f"unbound variable {t.name}") from None
    args = tuple(eval_term(A, a, alpha) for a in t.args)
    tab = A.functions.get(t.symbol)
    if tab is not None:
        try:
            return tab[args]
        except KeyError:
            raise EvalError(f"table of {t.symbol} has no entry for {args}") from None
    if t.symbol in A.linear_functions:
        lf = A.linear_functions[t.symbol]
        w = A.fn_ranks[t.symbol][0]
        env = {sl: A.label(si, a) for sl, si, a in zip(lf.slots, w, args)}
        return A.element_of_label(t.sort, lf.expr.value(env))
    if t.sort == NAT and t.symbol.isdigit() and not t.args:
        k = int(t.symbol)
        if A.nat is not None and A.nat.kind == "segment" and k > A.nat.bound:
            raise EvalError(f"numeral {k} exceeds the Nat segment")
        return k
    raise EvalError(f"no interpretation for function symbol {t.symbol}")


def eval_atom(A: SortedStructure, pred: str, vals: Sequence[int], sorts: Sequence[str] = ()) -> bool:
    if pred == EQ:
        return vals[0] == vals[1]
    tab = A.predicates.get(pred)
    if tab is not None:
        return tuple(vals) in tab
    if pred in A.linear_predicates:
        lp = A.linear_predicates[pred]
        w = A.pred_ranks.get(pred, sorts)
        env = {sl: A.label(si, v) for sl, si, v in zip(lp.slots, w, vals)}
        return evaluate_presburger(lp.formula, env)
    if pred == GT and A.nat is not None:
        return vals[0] > vals[1]
    raise EvalError(f"no interpretation for predicate {pred}")


def evaluate(A: SortedStructure, phi: Formula, alpha: Mapping[Var, int] | None = None) -> bool:
    """Truth of ``phi`` in a finite structure under ``alpha``."""
    if A.symbolic:
        from .lia import evaluate_mixed
        return evaluate_mixed(A, phi, alpha)
    return _eval(A, phi, dict(alpha or {}))


def _eval(A: SortedStructure, f: Formula, env: dict) -> bool:
    if isinstance(f, Atom):
        vals = [eval_term(A, t, env) for t in f.args]
        return eval_atom(A, f.pred, vals, [t.sort for t in f.args])
    if isinstance(f, Not):
        return not _eval(A, f.arg, env)
    if isinstance(f, And):
        return all(_eval(A, g, env) for g in f.args)
    if isinstance(f, Or):
        return any(_eval(A, g, env) for g in f.args)
    if isinstance(f, Implies):
        return (not _eval(A, f.lhs, env)) or _eval(A, f.rhs, env)
    v = f.var
    saved = env.get(v, None)
    had = v in env
    try:
        if isinstance(f, Forall):
            for e in A.elements(v.sort):
                env[v] = e
                if not _eval(A, f.body, env):
                    return False
            return True
        for e in A.elements(v.sort):
            env[v] = e
            if _eval(A, f.body, env):
                return True
        return False
    finally:
        if had:
            env[v] = saved
        else:
            env.pop(v, None)


@dataclass(frozen=True)
class ModelReport:
    rows: tuple[tuple[str, bool], ...]

    @property
    def ok(self) -> bool:
        return all(v for _, v in self.rows)

    def failures(self) -> list[str]:
        return [l for l, v in self.rows if not v]

    def __str__(self) -> str:
        return "\n".join(f"{'ok  ' if v else 'FAIL'} {l}" for l, v in self.rows)


def check_model(A: SortedStructure, theory) -> ModelReport:
    """Per-sentence truth of ``theory`` in ``A``."""
    rows = []
    for label, f in theory.labelled():
        rows.append((label, bool(evaluate(A, f))))
    return ModelReport(tuple(rows))


# ---------------------------------------------------------------- text format

def _arg_tuples(A: SortedStructure, w: Sequence[str]) -> Iterable[tuple]:
    return itertools.product(*(A.elements(s) for s in w))


def format_structure(A: SortedStructure) -> str:
    lines = []
    for s, n in A.carriers.items():
        lab = A.labels.get(s)
        extra = f" labels {' '.join(map(str, lab))}" if lab and tuple(lab) != tuple(range(n)) else ""
        lines.append(f"sort {s} {n}{extra}")
    if A.nat is not None:
        lines.append(f"sort {NAT} {A.nat}")
    for f, (w, s) in A.fn_ranks.items():
        if f in A.linear_functions:
            lf = A.linear_functions[f]
            slots = ", ".join(f"{sl}:{si}" for sl, si in zip(lf.slots, w))
            lines.append(f"fn {f}({slots}) -> {s} := {lf.expr}")
        elif f in A.functions:
            tab = A.functions[f]
            vals = [str(A.label(s, tab[args])) for args in _arg_tuples(A, w)]
            lines.append(f"fn {f} : {' '.join(w)} -> {s} = {' '.join(vals)}".replace(":  ->", ": ->"))
    for p, w in A.pred_ranks.items():
        if p in A.linear_predicates:
            lp = A.linear_predicates[p]
            slots = ", ".join(f"{sl}:{si}" for sl, si in zip(lp.slots, w))
            lines.append(f"pred {p}({slots}) := {format_presburger(lp.formula)}")
        elif p in A.predicates:
            tups = sorted(A.predicates[p])
            body = " ".join("(" + ",".join(str(A.label(si, e)) for si, e in zip(w, t)) + ")" for t in tups)
            lines.append(f"pred {p} : {' '.join(w)} = {body}".rstrip())
    return "\n".join(lines) + "\n"


_FN_TABLE = re.compile(r"fn\s+(\S+)\s*:\s*(.*?)\s*->\s*(\S+)\s*=\s*(.*)$")
_FN_LIN = re.compile(r"fn\s+([^\s(]+)\s*\((.*?)\)\s*->\s*(\S+)\s*:=\s*(.*)$")
_PRED_TABLE = re.compile(r"pred\s+(\S+)\s*:\s*(.*?)\s*=\s*(.*)$")
_PRED_LIN = re.compile(r"pred\s+([^\s(]+)\s*\((.*?)\)\s*:=\s*(.*)$")


def _slots(text: str) -> tuple[list[str], list[str]]:
    names, sorts = [], []
    for part in [p.strip() for p in text.split(",") if p.strip()]:
        n, _, s = part.partition(":")
        if not s:
            raise StructureFormatError(f"slot {part!r} needs a sort")
        names.append(n.strip())
        sorts.append(s.strip())
    return names, sorts


def parse_structure(text: str) -> SortedStructure:
    """Read the text format written by :func:`format_structure`.

    Linear definitions over finite sorts only are compiled into tables;
    those touching a symbolic ``Nat`` stay linear.
    """
    carriers: dict[str, int] = {}
    labels: dict[str, tuple[int, ...]] = {}
    nat: NatMode | None = None
    fn_ranks: dict = {}
    pred_ranks: dict = {}
    functions: dict = {}
    predicates: dict = {}
    lfun: dict = {}
    lpred: dict = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("sort "):
                parts = line.split()
                s = parts[1]
                if s == NAT:
                    if parts[2] == "segment":
                        nat = NatMode.segment(int(parts[3]))
                    elif parts[2] == "symbolic":
                        nat = NatMode.symbolic()
                    else:
                        raise StructureFormatError("Nat must be 'segment B' or 'symbolic'")
                    continue
                carriers[s] = int(parts[2])
                if len(parts) > 3:
                    if parts[3] != "labels":
                        raise StructureFormatError("expected 'labels'")
                    labels[s] = tuple(int(x) for x in parts[4:])
            elif line.startswith("fn ") or line.startswith("pred "):
                pending.append((lineno, line))
            else:
                raise StructureFormatError(f"unknown declaration {line.split()[0]!r}")
        except (ValueError, IndexError) as e:
            raise StructureFormatError(f"line {lineno}: {e}") from None
    base = SortedStructure(carriers, labels=labels, nat=nat)

    def elems(s: str) -> range:
        if s == NAT:
            if nat is None or nat.kind != "segment":
                raise StructureFormatError("finite table over a non-segment Nat")
            return range(nat.bound + 1)
        return range(carriers[s])

    def elem(s: str, lab: int) -> int:
        try:
            return base.element_of_label(s, lab)
        except EvalError as e:
            raise StructureFormatError(str(e)) from None

    for lineno, line in pending:
        try:
            if line.startswith("fn "):
                m = _FN_LIN.match(line)
                if m:
                    f, slots, s, body = m.groups()
                    names, w = _slots(slots)
                    fn_ranks[f] = (tuple(w), s)
                    lf = LinearFunction(tuple(names), parse_linear_expr(body))
                    if (nat is not None and nat.kind == "symbolic") and (s == NAT or NAT in w):
                        lfun[f] = lf
                    else:
                        tab = {}
                        for args in itertools.product(*(elems(si) for si in w)):
                            env = {n: base.label(si, a) for n, si, a in zip(names, w, args)}
                            tab[args] = elem(s, lf.expr.value(env))
                        functions[f] = tab
                    continue
                m = _FN_TABLE.match(line)
                if not m:
                    raise StructureFormatError("malformed fn line")
                f, ws, s, body = m.groups()
                w = tuple(ws.split())
                fn_ranks[f] = (w, s)
                vals = [int(x) for x in body.split()]
                args_list = list(itertools.product(*(elems(si) for si in w)))
                if len(vals) != len(args_list):
                    raise StructureFormatError(f"{f}: expected {len(args_list)} values, got {len(vals)}")
                functions[f] = {a: elem(s, v) for a, v in zip(args_list, vals)}
            else:
                m = _PRED_LIN.match(line)
                if m:
                    p, slots, body = m.groups()
                    names, w = _slots(slots)
                    pred_ranks[p] = tuple(w)
                    lp = LinearPredicate(tuple(names), parse_linear_formula(body))
                    if nat is not None and nat.kind == "symbolic" and NAT in w:
                        lpred[p] = lp
                    else:
                        tups = set()
                        for args in itertools.product(*(elems(si) for si in w)):
                            env = {n: base.label(si, a) for n, si, a in zip(names, w, args)}
                            if evaluate_presburger(lp.formula, env):
                                tups.add(args)
                        predicates[p] = frozenset(tups)
                    continue
                m = _PRED_TABLE.match(line)
                if not m:
                    raise StructureFormatError("malformed pred line")
                p, ws, body = m.groups()
                w = tuple(ws.split())
                pred_ranks[p] = w
                tups = set()
                for tm in re.finditer(r"\(([^)]*)\)", body):
                    labs = [int(x) for x in tm.group(1).split(",") if x.strip()]
                    if len(labs) != len(w):
                        raise StructureFormatError(f"{p}: tuple arity mismatch")
                    tups.add(tuple(elem(si, l) for si, l in zip(w, labs)))
                predicates[p] = frozenset(tups)
        except (ValueError, LiaError, KeyError) as e:
            raise StructureFormatError(f"line {lineno}: {e}") from None
    return SortedStructure(carriers, fn_ranks, pred_ranks, functions, predicates, labels, nat, lfun, lpred)

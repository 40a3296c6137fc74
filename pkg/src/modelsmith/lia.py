"""Linear integer arithmetic over the naturals.

Cooper-style quantifier elimination decides closed Presburger sentences.
``evaluate_mixed`` decides many-sorted sentences in structures whose ``Nat``
carrier is the true naturals and whose Nat-touching symbols carry linear
interpretations; ``grid_search_linear`` enumerates small linear certificates.
"""
from __future__ import annotations

import itertools
import math
import re
import time
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Mapping, Sequence, Union

from .fol import And, Atom, Exists, Forall, Implies, Not, Or, atoms
from .terms import EQ, GT, NAT, Var

COEFF_LIMIT = 10 ** 40


class LiaError(Exception):
    pass


# ---------------------------------------------------------------- linear terms

@dataclass(frozen=True)
class Lin:
    """``sum(c * v) + const`` with integer coefficients."""
    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | None = None, const: int = 0) -> "Lin":
        items = tuple(sorted((v, c) for v, c in (coeffs or {}).items() if c))
        for _, c in items:
            if abs(c) > COEFF_LIMIT:
                raise LiaError("coefficient overflow")
        if abs(const) > COEFF_LIMIT:
            raise LiaError("constant overflow")
        return Lin(items, const)

    @staticmethod
    def var(name: str) -> "Lin":
        return Lin(((name, 1),), 0)

    @staticmethod
    def num(k: int) -> "Lin":
        return Lin((), k)

    def coeff(self, v: str) -> int:
        for name, c in self.coeffs:
            if name == v:
                return c
        return 0

    @property
    def variables(self) -> set[str]:
        return {v for v, _ in self.coeffs}

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def __add__(self, o: "Lin") -> "Lin":
        d = self.as_dict()
        for v, c in o.coeffs:
            d[v] = d.get(v, 0) + c
        return Lin.of(d, self.const + o.const)

    def __neg__(self) -> "Lin":
        return Lin.of({v: -c for v, c in self.coeffs}, -self.const)

    def __sub__(self, o: "Lin") -> "Lin":
        return self + (-o)

    def scale(self, k: int) -> "Lin":
        return Lin.of({v: c * k for v, c in self.coeffs}, self.const * k)

    def subst(self, v: str, e: "Lin") -> "Lin":
        c = self.coeff(v)
        if not c:
            return self
        d = self.as_dict()
        del d[v]
        return Lin.of(d, self.const) + e.scale(c)

    def substitute(self, env: Mapping[str, "Lin"]) -> "Lin":
        out = Lin.of({}, self.const)
        for v, c in self.coeffs:
            out = out + (env[v].scale(c) if v in env else Lin.of({v: c}))
        return out

    def value(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.coeffs)

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            parts.append(("-" if c < 0 else "+") + f" {mag}{v}")
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+") + f" {abs(self.const)}")
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class Lt0:
    """``0 < t``"""
    t: Lin


@dataclass(frozen=True)
class Dvd:
    """``d | t`` (or its negation)."""
    d: int
    t: Lin
    negated: bool = False


@dataclass(frozen=True)
class PAnd:
    args: tuple


@dataclass(frozen=True)
class POr:
    args: tuple


@dataclass(frozen=True)
class PNot:
    arg: object


@dataclass(frozen=True)
class PEx:
    var: str
    body: object
    nat: bool = True


@dataclass(frozen=True)
class PAll:
    var: str
    body: object
    nat: bool = True


PFormula = Union[bool, Lt0, Dvd, PAnd, POr, PNot, PEx, PAll]


def p_and(*fs) -> PFormula:
    out = []
    for f in fs:
        if f is False:
            return False
        if f is True:
            continue
        if isinstance(f, PAnd):
            out.extend(f.args)
        elif f not in out:
            out.append(f)
    if not out:
        return True
    return out[0] if len(out) == 1 else PAnd(tuple(out))


def p_or(*fs) -> PFormula:
    out = []
    for f in fs:
        if f is True:
            return True
        if f is False:
            continue
        if isinstance(f, POr):
            out.extend(f.args)
        elif f not in out:
            out.append(f)
    if not out:
        return False
    return out[0] if len(out) == 1 else POr(tuple(out))


def cmp(a: Lin, op: str, b: Lin) -> PFormula:
    """Comparison ``a op b`` as a quantifier-free formula."""
    if op == ">":
        return _lt0(a - b)
    if op == ">=":
        return _lt0(a - b + Lin.num(1))
    if op == "<":
        return _lt0(b - a)
    if op == "<=":
        return _lt0(b - a + Lin.num(1))
    if op == "=":
        return p_and(_lt0(a - b + Lin.num(1)), _lt0(b - a + Lin.num(1)))
    if op == "!=":
        return p_or(_lt0(a - b), _lt0(b - a))
    raise LiaError(f"unknown comparison {op}")


def _lt0(t: Lin) -> PFormula:
    if not t.coeffs:
        return t.const > 0
    return Lt0(t)


def _dvd(d: int, t: Lin, negated: bool = False) -> PFormula:
    d = abs(d)
    if d == 0:
        raise LiaError("divisibility by zero")
    if d == 1:
        return not negated
    t = Lin.of({v: c % d for v, c in t.coeffs}, t.const % d)
    if not t.coeffs:
        return (t.const % d == 0) != negated
    return Dvd(d, t, negated)


def p_nnf(f: PFormula, neg: bool = False) -> PFormula:
    if isinstance(f, bool):
        return f != neg
    if isinstance(f, Lt0):
        return _lt0(-f.t + Lin.num(1)) if neg else f
    if isinstance(f, Dvd):
        return _dvd(f.d, f.t, f.negated != neg)
    if isinstance(f, PNot):
        return p_nnf(f.arg, not neg)
    if isinstance(f, PAnd):
        parts = [p_nnf(a, neg) for a in f.args]
        return p_or(*parts) if neg else p_and(*parts)
    if isinstance(f, POr):
        parts = [p_nnf(a, neg) for a in f.args]
        return p_and(*parts) if neg else p_or(*parts)
    if isinstance(f, PEx):
        return PAll(f.var, p_nnf(f.body, True), f.nat) if neg else PEx(f.var, p_nnf(f.body), f.nat)
    if isinstance(f, PAll):
        return PEx(f.var, p_nnf(f.body, True), f.nat) if neg else PAll(f.var, p_nnf(f.body), f.nat)
    raise LiaError(f"not a Presburger formula: {f!r}")


def p_subst(f: PFormula, v: str, e: Lin) -> PFormula:
    if isinstance(f, bool):
        return f
    if isinstance(f, Lt0):
        return _lt0(f.t.subst(v, e))
    if isinstance(f, Dvd):
        return _dvd(f.d, f.t.subst(v, e), f.negated)
    if isinstance(f, PAnd):
        return p_and(*(p_subst(a, v, e) for a in f.args))
    if isinstance(f, POr):
        return p_or(*(p_subst(a, v, e) for a in f.args))
    if isinstance(f, PNot):
        inner = p_subst(f.arg, v, e)
        return (not inner) if isinstance(inner, bool) else PNot(inner)
    if isinstance(f, (PEx, PAll)):
        if f.var == v:
            return f
        if v in e.variables and False:
            pass
        if f.var in e.variables:
            raise LiaError("substitution would capture a bound variable")
        return type(f)(f.var, p_subst(f.body, v, e), f.nat)
    raise LiaError(f"not a Presburger formula: {f!r}")


def p_free(f: PFormula) -> set[str]:
    if isinstance(f, bool):
        return set()
    if isinstance(f, (Lt0, Dvd)):
        return f.t.variables
    if isinstance(f, (PAnd, POr)):
        return set().union(*(p_free(a) for a in f.args)) if f.args else set()
    if isinstance(f, PNot):
        return p_free(f.arg)
    return p_free(f.body) - {f.var}


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _atoms_of(f: PFormula) -> Iterator[PFormula]:
    if isinstance(f, (Lt0, Dvd)):
        yield f
    elif isinstance(f, (PAnd, POr)):
        for a in f.args:
            yield from _atoms_of(a)


def _map_atoms(f: PFormula, fn) -> PFormula:
    if isinstance(f, bool):
        return f
    if isinstance(f, (Lt0, Dvd)):
        return fn(f)
    if isinstance(f, PAnd):
        return p_and(*(_map_atoms(a, fn) for a in f.args))
    if isinstance(f, POr):
        return p_or(*(_map_atoms(a, fn) for a in f.args))
    raise LiaError("expected a quantifier-free formula in negation normal form")


def eliminate_exists(x: str, phi: PFormula) -> PFormula:
    """Cooper elimination of ``exists x`` over the integers from an NNF matrix."""
    phi = p_nnf(phi)
    coefs = [a.t.coeff(x) for a in _atoms_of(phi) if a.t.coeff(x)]
    if not coefs:
        return phi
    L = reduce(_lcm, (abs(c) for c in coefs), 1)

    def normalize(a):
        c = a.t.coeff(x)
        if not c:
            return a
        k = L // abs(c)
        t = a.t.scale(k)
        sign = 1 if c > 0 else -1
        d = t.as_dict()
        d[x] = sign
        t = Lin.of(d, t.const)
        if isinstance(a, Lt0):
            return Lt0(t)
        return Dvd(a.d * k, t, a.negated)

    phi = _map_atoms(phi, normalize)
    if L > 1:
        phi = p_and(phi, Dvd(L, Lin.var(x)))
    delta = 1
    lower: list[Lin] = []
    upper: list[Lin] = []
    for a in _atoms_of(phi):
        c = a.t.coeff(x)
        if not c:
            continue
        if isinstance(a, Dvd):
            delta = _lcm(delta, a.d)
        elif c > 0:
            lower.append(-(a.t.subst(x, Lin.num(0))))      # x > b
        else:
            upper.append(a.t.subst(x, Lin.num(0)))         # x < a
    lower = list(dict.fromkeys(lower))
    upper = list(dict.fromkeys(upper))
    use_lower = len(lower) <= len(upper)
    if delta > 10 ** 6:
        raise LiaError("divisibility period too large")

    def infinite(a):
        c = a.t.coeff(x)
        if isinstance(a, Dvd) or not c:
            return a
        if use_lower:
            return c < 0   # x -> -inf: lower bounds false, upper bounds true
        return c > 0

    phi_inf = _map_atoms(phi, infinite)
    out: list[PFormula] = []
    for j in range(1, delta + 1):
        if use_lower:
            out.append(p_subst(phi_inf, x, Lin.num(j)))
            for b in lower:
                out.append(p_subst(phi, x, b + Lin.num(j)))
        else:
            out.append(p_subst(phi_inf, x, Lin.num(-j)))
            for a in upper:
                out.append(p_subst(phi, x, a - Lin.num(j)))
        if any(o is True for o in out):
            return True
    return p_or(*out)


def eliminate(f: PFormula) -> PFormula:
    """Remove every quantifier, innermost first."""
    if isinstance(f, (bool, Lt0, Dvd)):
        return f
    if isinstance(f, PAnd):
        return p_and(*(eliminate(a) for a in f.args))
    if isinstance(f, POr):
        return p_or(*(eliminate(a) for a in f.args))
    if isinstance(f, PNot):
        return p_nnf(eliminate(f.arg), True)
    body = eliminate(f.body)
    if isinstance(f, PEx):
        if f.nat:
            body = p_and(_lt0(Lin.var(f.var) + Lin.num(1)), body)
        return eliminate_exists(f.var, body)
    neg = p_nnf(body, True)
    if f.nat:
        neg = p_and(_lt0(Lin.var(f.var) + Lin.num(1)), neg)
    return p_nnf(eliminate_exists(f.var, neg), True)


def decide(f: PFormula) -> bool:
    """Truth value of a closed Presburger sentence (Nat-bounded quantifiers over N)."""
    free = p_free(f)
    if free:
        raise LiaError(f"sentence has free variables {sorted(free)}")
    r = eliminate(f)
    if not isinstance(r, bool):
        raise LiaError(f"elimination left a non-ground residue: {r!r}")
    return r


def evaluate_presburger(f: PFormula, env: Mapping[str, int], bound: int | None = None) -> bool:
    """Direct evaluation; quantifiers range over ``0..bound`` (test oracle)."""
    if isinstance(f, bool):
        return f
    if isinstance(f, Lt0):
        return f.t.value(env) > 0
    if isinstance(f, Dvd):
        return (f.t.value(env) % f.d == 0) != f.negated
    if isinstance(f, PAnd):
        return all(evaluate_presburger(a, env, bound) for a in f.args)
    if isinstance(f, POr):
        return any(evaluate_presburger(a, env, bound) for a in f.args)
    if isinstance(f, PNot):
        return not evaluate_presburger(f.arg, env, bound)
    if bound is None:
        raise LiaError("bounded evaluation needs a bound for quantifiers")
    rng = range(0, bound + 1)
    if isinstance(f, PEx):
        return any(evaluate_presburger(f.body, {**env, f.var: k}, bound) for k in rng)
    return all(evaluate_presburger(f.body, {**env, f.var: k}, bound) for k in rng)


def format_presburger(f: PFormula) -> str:
    if f is True:
        return "true"
    if f is False:
        return "false"
    if isinstance(f, Lt0):
        return f"{f.t} > 0"
    if isinstance(f, Dvd):
        s = f"{f.d} | {f.t}"
        return f"~({s})" if f.negated else s
    if isinstance(f, PAnd):
        return " /\\ ".join(_paren(a) for a in f.args)
    if isinstance(f, POr):
        return " \\/ ".join(_paren(a) for a in f.args)
    if isinstance(f, PNot):
        return f"~({format_presburger(f.arg)})"
    q = "exists" if isinstance(f, PEx) else "forall"
    return f"({q} {f.var}) {_paren(f.body)}"


def _paren(f: PFormula) -> str:
    s = format_presburger(f)
    return f"({s})" if isinstance(f, (PAnd, POr)) else s


# ---------------------------------------------------------------- text syntax

_LTOK = re.compile(r"\s+|<=|>=|!=|=>|/\\|\\/|[-+*()<>=~,]|\d+|[A-Za-z_][A-Za-z0-9_']*")


def _ltokens(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = _LTOK.match(text, pos)
        if not m:
            raise LiaError(f"unexpected character {text[pos]!r} in linear formula")
        if not m.group(0).isspace():
            out.append(m.group(0))
        pos = m.end()
    return out


class _LinReader:
    def __init__(self, text: str):
        self.toks = _ltokens(text)
        self.i = 0

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        t = self.peek()
        if t is None:
            raise LiaError("unexpected end of linear formula")
        self.i += 1
        return t

    def expect(self, t: str) -> None:
        got = self.next()
        if got != t:
            raise LiaError(f"expected {t!r}, found {got!r}")

    def formula(self) -> PFormula:
        lhs = self.disj()
        if self.peek() == "=>":
            self.next()
            return p_or(PNot(lhs), self.formula())
        return lhs

    def disj(self) -> PFormula:
        parts = [self.conj()]
        while self.peek() == "\\/":
            self.next()
            parts.append(self.conj())
        return p_or(*parts)

    def conj(self) -> PFormula:
        parts = [self.unary()]
        while self.peek() == "/\\":
            self.next()
            parts.append(self.unary())
        return p_and(*parts)

    def unary(self) -> PFormula:
        t = self.peek()
        if t == "~":
            self.next()
            return PNot(self.unary())
        if t == "(" and self.peek(1) in ("exists", "forall"):
            self.next()
            q = self.next()
            names = [self.next()]
            while self.peek() == ",":
                self.next()
                names.append(self.next())
            self.expect(")")
            # a quantifier scopes as far right as possible, as in first-order formulas
            body = self.formula()
            for n in reversed(names):
                body = PEx(n, body) if q == "exists" else PAll(n, body)
            return body
        if t == "(":
            save = self.i
            self.next()
            try:
                f = self.formula()
                self.expect(")")
                if self.peek() in ("<", "<=", ">", ">=", "=", "!=", "+", "-", "*"):
                    raise LiaError("parenthesized expression")
                return f
            except LiaError:
                self.i = save
        if t == "true":
            self.next()
            return True
        if t == "false":
            self.next()
            return False
        return self.comparison()

    def comparison(self) -> PFormula:
        terms = [self.expr()]
        ops = []
        while self.peek() in ("<", "<=", ">", ">=", "=", "!="):
            ops.append(self.next())
            terms.append(self.expr())
        if not ops:
            raise LiaError("expected a comparison")
        return p_and(*(cmp(terms[i], ops[i], terms[i + 1]) for i in range(len(ops))))

    def expr(self) -> Lin:
        sign = 1
        if self.peek() in ("-", "+"):
            sign = -1 if self.next() == "-" else 1
        acc = self.product().scale(sign)
        while self.peek() in ("+", "-"):
            op = self.next()
            t = self.product()
            acc = acc + t if op == "+" else acc - t
        return acc

    def product(self) -> Lin:
        t = self.atom()
        while self.peek() == "*":
            self.next()
            u = self.atom()
            if not t.coeffs:
                t = u.scale(t.const)
            elif not u.coeffs:
                t = t.scale(u.const)
            else:
                raise LiaError("non-linear product")
        return t

    def atom(self) -> Lin:
        t = self.next()
        if t.isdigit():
            return Lin.num(int(t))
        if t == "(":
            e = self.expr()
            self.expect(")")
            return e
        if t == "-":
            return -self.atom()
        if re.match(r"[A-Za-z_]", t):
            return Lin.var(t)
        raise LiaError(f"unexpected {t!r} in linear expression")


def parse_linear_formula(text: str) -> PFormula:
    rd = _LinReader(text)
    f = rd.formula()
    if rd.peek() is not None:
        raise LiaError(f"trailing input {rd.peek()!r}")
    return f


def parse_linear_expr(text: str) -> Lin:
    rd = _LinReader(text)
    e = rd.expr()
    if rd.peek() is not None:
        raise LiaError(f"trailing input {rd.peek()!r}")
    return e


# ---------------------------------------------------------------- interpretations

@dataclass(frozen=True)
class LinearFunction:
    slots: tuple[str, ...]
    expr: Lin

    def __str__(self) -> str:
        return str(self.expr)


@dataclass(frozen=True)
class LinearPredicate:
    slots: tuple[str, ...]
    formula: PFormula

    def instantiate(self, args: Sequence[Lin]) -> PFormula:
        env = dict(zip(self.slots, args))
        return _instantiate(self.formula, env)

    def __str__(self) -> str:
        return format_presburger(self.formula)


def _instantiate(f: PFormula, env: Mapping[str, Lin]) -> PFormula:
    if isinstance(f, bool):
        return f
    if isinstance(f, Lt0):
        return _lt0(f.t.substitute(env))
    if isinstance(f, Dvd):
        return _dvd(f.d, f.t.substitute(env), f.negated)
    if isinstance(f, PAnd):
        return p_and(*(_instantiate(a, env) for a in f.args))
    if isinstance(f, POr):
        return p_or(*(_instantiate(a, env) for a in f.args))
    if isinstance(f, PNot):
        inner = _instantiate(f.arg, env)
        return (not inner) if isinstance(inner, bool) else PNot(inner)
    inner_env = {k: v for k, v in env.items() if k != f.var}
    return type(f)(f.var, _instantiate(f.body, inner_env), f.nat)


# ---------------------------------------------------------------- mixed evaluation

def _eval_error(msg: str) -> Exception:
    from .structure import EvalError
    return EvalError(msg)


def evaluate_mixed(A, phi, valuation: Mapping | None = None) -> bool:
    """Decide ``phi`` in a structure with a symbolic-naturals ``Nat`` carrier.

    Quantifiers over finite sorts are expanded pointwise; once a Nat
    quantifier is met the remaining subformula is compiled to a Presburger
    sentence and decided by quantifier elimination.
    """
    from .structure import check_nat_hypotheses
    check_nat_hypotheses(A)
    return _MixedEval(A).holds(phi, dict(valuation or {}))


class _MixedEval:
    def __init__(self, A):
        self.A = A
        self.fresh = itertools.count()

    # values: finite sorts -> element index; Nat -> Lin
    def term(self, t, env):
        A = self.A
        if isinstance(t, Var):
            if t not in env:
                raise _eval_error(f"unbound variable {t.name}")
            return env[t]
        if t.sort != NAT and all(a.sort != NAT for a in t.args) and t.symbol in A.functions:
            args = tuple(self.term(a, env) for a in t.args)
            return A.functions[t.symbol][args]
        if t.symbol in A.linear_functions:
            lf = A.linear_functions[t.symbol]
            args = [self._as_lin(a, self.term(a, env)) for a in t.args]
            e = lf.expr.substitute(dict(zip(lf.slots, args)))
            if t.sort == NAT:
                return e
            if e.coeffs:
                raise _eval_error(f"{t.symbol} maps symbolic naturals into finite sort {t.sort}")
            return A.element_of_label(t.sort, e.const)
        if t.sort == NAT and t.symbol.isdigit() and not t.args:
            return Lin.num(int(t.symbol))
        if t.sort == NAT and t.symbol in ("succ", "succ_Nat") and len(t.args) == 1 and t.args[0].sort == NAT:
            return self.term(t.args[0], env) + Lin.num(1)
        if t.symbol in A.functions:
            args = tuple(self._concrete(a, self.term(a, env)) for a in t.args)
            v = A.functions[t.symbol][args]
            return Lin.num(v) if t.sort == NAT else v
        raise _eval_error(f"no interpretation for {t.symbol}")

    def _as_lin(self, t, v) -> Lin:
        if t.sort == NAT:
            return v
        return Lin.num(self.A.label(t.sort, v))

    def _concrete(self, t, v):
        if t.sort == NAT:
            if v.coeffs:
                raise _eval_error("finite table applied to a symbolic natural")
            return v.const
        return v

    def atom(self, a, env) -> PFormula:
        A = self.A
        vals = [self.term(t, env) for t in a.args]
        touches = any(t.sort == NAT for t in a.args)
        if a.pred == EQ:
            if a.args[0].sort == NAT:
                return cmp(vals[0], "=", vals[1])
            return vals[0] == vals[1]
        if a.pred == GT and touches and a.pred not in A.linear_predicates:
            return cmp(vals[0], ">", vals[1])
        if a.pred in A.linear_predicates:
            lins = [self._as_lin(t, v) for t, v in zip(a.args, vals)]
            return A.linear_predicates[a.pred].instantiate(lins)
        if a.pred in A.predicates:
            if touches:
                vals = [self._concrete(t, v) for t, v in zip(a.args, vals)]
            return tuple(vals) in A.predicates[a.pred]
        raise _eval_error(f"missing interpretation for predicate {a.pred}")

    def compile(self, f, env) -> PFormula:
        """Presburger formula for ``f``; Nat variables become integer variables."""
        if isinstance(f, Atom):
            return self.atom(f, env)
        if isinstance(f, Not):
            inner = self.compile(f.arg, env)
            return (not inner) if isinstance(inner, bool) else PNot(inner)
        if isinstance(f, And):
            out = []
            for g in f.args:
                c = self.compile(g, env)
                if c is False:
                    return False
                out.append(c)
            return p_and(*out)
        if isinstance(f, Or):
            out = []
            for g in f.args:
                c = self.compile(g, env)
                if c is True:
                    return True
                out.append(c)
            return p_or(*out)
        if isinstance(f, Implies):
            lhs = self.compile(f.lhs, env)
            if lhs is False:
                return True
            return p_or(p_nnf(lhs, True) if not isinstance(lhs, bool) else not lhs, self.compile(f.rhs, env))
        v = f.var
        if v.sort == NAT:
            name = f"{v.name}#{next(self.fresh)}"
            body = self.compile(f.body, {**env, v: Lin.var(name)})
            return PEx(name, body) if isinstance(f, Exists) else PAll(name, body)
        parts = []
        for e in range(self.A.size(v.sort)):
            c = self.compile(f.body, {**env, v: e})
            if isinstance(f, Forall) and c is False:
                return False
            if isinstance(f, Exists) and c is True:
                return True
            parts.append(c)
        return p_and(*parts) if isinstance(f, Forall) else p_or(*parts)

    def holds(self, f, env) -> bool:
        if isinstance(f, (Forall, Exists)) and f.var.sort != NAT:
            it = (self.holds(f.body, {**env, f.var: e}) for e in range(self.A.size(f.var.sort)))
            return all(it) if isinstance(f, Forall) else any(it)
        if isinstance(f, And):
            return all(self.holds(g, env) for g in f.args)
        if isinstance(f, Or):
            return any(self.holds(g, env) for g in f.args)
        if isinstance(f, Not):
            return not self.holds(f.arg, env)
        if isinstance(f, Implies):
            return (not self.holds(f.lhs, env)) or self.holds(f.rhs, env)
        c = self.compile(f, env)
        return c if isinstance(c, bool) else decide(c)


# ---------------------------------------------------------------- grid search

@dataclass(frozen=True)
class GridResult:
    assignment: dict | None
    tried: int
    exhausted: bool

    @property
    def found(self) -> bool:
        return self.assignment is not None


def template_family(slots: Sequence[str], coeff_bound: int) -> Iterator[LinearPredicate]:
    """``c1*s1 + ... + ck*sk + c0 > 0`` and ``... >= 0``, smallest total
    coefficient weight first."""
    rng = range(-coeff_bound, coeff_bound + 1)
    combos = sorted(itertools.product(rng, repeat=len(slots) + 1),
                    key=lambda cs: (sum(map(abs, cs)), [abs(c) for c in cs], cs))
    for cs in combos:
        e = Lin.of(dict(zip(slots, cs[:-1])), cs[-1])
        for op in (">", ">="):
            yield LinearPredicate(tuple(slots), cmp(e, op, Lin.num(0)))


def grid_search_linear(theory, base, predicates: Sequence[str], coeff_bound: int,
                       deadline: float | None = None) -> GridResult:
    """Search linear interpretations for ``predicates`` so that ``base``
    extended with them satisfies every sentence of ``theory``.

    Candidates for each predicate are tried in template order; sentences that
    mention only already-fixed predicates prune the search early.  Candidates
    over finite sorts only are compared by their extension, so templates
    denoting the same relation are tried once.
    """
    sentences = list(theory.sentences)
    preds = list(predicates)
    need: list[list] = [[] for _ in preds]
    fixed_ok = []
    for s in sentences:
        used = {a.pred for a in atoms(s)}
        idx = max((i for i, p in enumerate(preds) if p in used), default=-1)
        if idx < 0:
            fixed_ok.append(s)
        else:
            need[idx].append(s)

    def nat_quantified(f) -> bool:
        while isinstance(f, (Forall, Exists)):
            if f.var.sort == NAT:
                return True
            f = f.body
        return _has_nat_quantifier(f)

    for group in need:
        group.sort(key=nat_quantified)
    for s in fixed_ok:
        if not evaluate_mixed(base, s):
            return GridResult(None, 0, True)
    ranks = theory.signature.predicates
    families = []
    for p in preds:
        w = ranks[p]
        slots = [f"a{i}" for i in range(len(w))]
        cands = list(template_family(slots, coeff_bound))
        if NAT in w:
            seen_sig = set()
            uniq_nat = []
            for c in cands:
                sig = _nat_signature(c, w, base)
                if sig is not None and sig in seen_sig:
                    continue
                seen_sig.add(sig)
                uniq_nat.append((c, None))
            families.append(uniq_nat)
            continue
        seen = set()
        uniq = []
        for c in cands:
            tab = frozenset(
                args for args in itertools.product(*(range(base.size(si)) for si in w))
                if evaluate_presburger(c.formula, {sl: base.label(si, a) for sl, si, a in zip(slots, w, args)}))
            if tab not in seen:
                seen.add(tab)
                uniq.append((c, tab))
        families.append(uniq)
    tried = 0
    chosen: dict = {}
    picks: dict = {}
    # predicates fixed before position i that later sentences still read
    later = []
    for i in range(len(preds)):
        used = set()
        for group in need[i:]:
            for s in group:
                used |= {a.pred for a in atoms(s)}
        later.append([q for q in preds[:i] if q in used])
    dead: set = set()

    def go(i: int, A):
        nonlocal tried
        if i == len(preds):
            return A
        key = (i, tuple(picks[q] for q in later[i]))
        if key in dead:
            return None
        p = preds[i]
        for k, (cand, tab) in enumerate(families[i]):
            picks[p] = tab if tab is not None else k
            if deadline is not None and time.monotonic() > deadline:
                raise TimeoutError("grid search budget exhausted")
            tried += 1
            if tab is None:
                B = A.with_linear_predicate(p, cand)
            else:
                B = A.with_tables(predicates={p: tab}, pred_ranks={p: ranks[p]})
            if all(evaluate_mixed(B, s) for s in need[i]):
                chosen[p] = cand
                r = go(i + 1, B)
                if r is not None:
                    return r
        dead.add(key)
        return None

    found = go(0, base)
    if found is None:
        return GridResult(None, tried, True)
    return GridResult({p: chosen[p] for p in preds}, tried, True)


def _nat_signature(c: LinearPredicate, rank: Sequence[str], base):
    """Extension of ``c`` when it has a single Nat slot: for each tuple of
    finite arguments, the satisfying naturals as ``(lo, hi)`` with ``hi`` None
    for unbounded.  None when no such summary exists."""
    nat_slots = [sl for sl, so in zip(c.slots, rank) if so == NAT]
    if len(nat_slots) != 1:
        return None
    fin = [(sl, so) for sl, so in zip(c.slots, rank) if so != NAT]
    out = []
    for args in itertools.product(*(range(base.size(so)) for _, so in fin)):
        env = {sl: Lin.num(base.label(so, a)) for (sl, so), a in zip(fin, args)}
        f = _instantiate(c.formula, env)
        if isinstance(f, bool):
            out.append((0, None) if f else (1, 0))
            continue
        if not isinstance(f, Lt0) or len(f.t.coeffs) != 1:
            return None
        k, b = f.t.coeffs[0][1], f.t.const
        # k*n + b > 0 over n >= 0
        if k > 0:
            lo = max(0, (-b) // k + 1)
            out.append((lo, None))
        else:
            hi = (b - 1) // (-k)
            out.append((0, hi) if hi >= 0 else (1, 0))
    return tuple(out)


def _has_nat_quantifier(f) -> bool:
    if isinstance(f, (Forall, Exists)):
        return f.var.sort == NAT or _has_nat_quantifier(f.body)
    if isinstance(f, (And, Or)):
        return any(_has_nat_quantifier(g) for g in f.args)
    if isinstance(f, Not):
        return _has_nat_quantifier(f.arg)
    if isinstance(f, Implies):
        return _has_nat_quantifier(f.lhs) or _has_nat_quantifier(f.rhs)
    return False

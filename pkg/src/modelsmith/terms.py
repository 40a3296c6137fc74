"""Sorted signatures, terms, substitutions, rewrite rules and the Maude-lite reader."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

NAT = "Nat"
EQ = "="
GT = ">"
DUMMY_SORT = "S"


class SpecError(Exception):
    """Raised for malformed specifications, ill-sorted terms and undeclared symbols."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple["Term", ...]
    sort: str

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({', '.join(map(str, self.args))})"


Term = Union[Var, App]
Substitution = Mapping[Var, Term]


def sort_of(t: Term) -> str:
    return t.sort


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return all(is_ground(a) for a in t.args)


def term_vars(t: Term) -> list[Var]:
    """Variables of ``t`` in left-to-right order of first occurrence."""
    out: list[Var] = []

    def walk(u: Term) -> None:
        if isinstance(u, Var):
            if u not in out:
                out.append(u)
        else:
            for a in u.args:
                walk(a)

    walk(t)
    return out


def height(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(height(a) for a in t.args)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


@lru_cache(maxsize=None)
def term_key(t: Term) -> tuple:
    """Height-then-lexicographic ordering key."""
    if isinstance(t, Var):
        return (0, "", t.name)
    return (height(t), t.symbol, tuple(term_key(a) for a in t.args))


def apply_substitution(sigma: Substitution, t: Term) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    if not t.args:
        return t
    return App(t.symbol, tuple(apply_substitution(sigma, a) for a in t.args), t.sort)


def make_substitution(pairs: Mapping[Var, Term]) -> dict[Var, Term]:
    """Build a substitution, rejecting bindings that change the sort of a variable."""
    for v, t in pairs.items():
        if v.sort != t.sort:
            raise SpecError(f"substitution {v} -> {t} maps sort {v.sort} to {t.sort}")
    return dict(pairs)


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...]
    functions: Mapping[str, tuple[tuple[str, ...], str]] = field(default_factory=dict)
    predicates: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.sorts)) != len(self.sorts):
            raise SpecError("duplicate sort declaration")
        known = set(self.sorts)
        clash = set(self.functions) & set(self.predicates)
        if clash:
            raise SpecError(f"symbols declared both as function and predicate: {sorted(clash)}")
        if EQ in self.functions or EQ in self.predicates:
            raise SpecError("'=' is the built-in identity and cannot be declared")
        for f, (w, s) in self.functions.items():
            for x in (*w, s):
                if x not in known:
                    raise SpecError(f"symbol {f} uses undeclared sort {x}")
        for p, w in self.predicates.items():
            for x in w:
                if x not in known:
                    raise SpecError(f"predicate {p} uses undeclared sort {x}")

    def __hash__(self) -> int:
        return hash((self.sorts, tuple(sorted(self.functions.items())), tuple(sorted(self.predicates.items()))))

    def constants(self, sort: str) -> list[str]:
        return sorted(f for f, (w, s) in self.functions.items() if s == sort and not w)

    def symbols_into(self, sort: str) -> list[str]:
        return sorted(f for f, (w, s) in self.functions.items() if s == sort)

    def app(self, symbol: str, *args: Term) -> App:
        """Build a well-sorted application, checking arity and argument sorts."""
        if symbol not in self.functions:
            raise SpecError(f"undeclared function symbol {symbol}")
        w, s = self.functions[symbol]
        if len(w) != len(args):
            raise SpecError(f"{symbol} expects {len(w)} arguments, got {len(args)}")
        for i, (a, si) in enumerate(zip(args, w)):
            if a.sort != si:
                raise SpecError(f"argument {i + 1} of {symbol}(...) has sort {a.sort}, expected {si}")
        return App(symbol, tuple(args), s)

    def extend(self, sorts: Iterable[str] = (), functions: Mapping | None = None,
               predicates: Mapping | None = None) -> "Signature":
        new_sorts = tuple(self.sorts) + tuple(s for s in sorts if s not in self.sorts)
        fns = dict(self.functions)
        for f, r in (functions or {}).items():
            if f in fns and fns[f] != r:
                raise SpecError(f"function {f} redeclared with a different rank")
            fns[f] = r
        preds = dict(self.predicates)
        for p, w in (predicates or {}).items():
            if p in preds and preds[p] != tuple(w):
                raise SpecError(f"predicate {p} redeclared with a different rank")
            preds[p] = tuple(w)
        return Signature(new_sorts, fns, preds)

    def merge(self, other: "Signature") -> "Signature":
        return self.extend(other.sorts, other.functions, other.predicates)

    def check_term(self, t: Term) -> None:
        if isinstance(t, Var):
            if t.sort not in self.sorts:
                raise SpecError(f"variable {t.name} has undeclared sort {t.sort}")
            return
        if t.symbol not in self.functions:
            raise SpecError(f"undeclared function symbol {t.symbol}")
        w, s = self.functions[t.symbol]
        if len(w) != len(t.args) or s != t.sort:
            raise SpecError(f"ill-formed application of {t.symbol}")
        for a, si in zip(t.args, w):
            if a.sort != si:
                raise SpecError(f"argument of {t.symbol} has sort {a.sort}, expected {si}")
            self.check_term(a)


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    conditions: tuple[tuple[Term, Term], ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise SpecError(f"left-hand side of a rule cannot be a variable ({self.lhs})")
        if self.lhs.sort != self.rhs.sort:
            raise SpecError(f"rule {self.lhs} => {self.rhs}: lhs sort {self.lhs.sort} differs from rhs sort {self.rhs.sort}")
        for c, d in self.conditions:
            if c.sort != d.sort:
                raise SpecError(f"condition {c} => {d} relates different sorts")

    @property
    def sort(self) -> str:
        return self.lhs.sort

    def variables(self) -> list[Var]:
        out: list[Var] = []
        for t in (self.lhs, self.rhs, *itertools.chain.from_iterable(self.conditions)):
            for v in term_vars(t):
                if v not in out:
                    out.append(v)
        return out

    def __str__(self) -> str:
        base = f"{self.lhs} => {self.rhs}"
        if self.conditions:
            base += " if " + r" /\ ".join(f"{c} => {d}" for c, d in self.conditions)
        return base


@dataclass(frozen=True)
class RewriteSpec:
    signature: Signature
    rules: tuple[Rule, ...]
    variables: Mapping[str, Var] = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self) -> None:
        for r in self.rules:
            for t in (r.lhs, r.rhs, *itertools.chain.from_iterable(r.conditions)):
                self.signature.check_term(t)

    def defined_symbols(self) -> list[str]:
        return sorted({r.lhs.symbol for r in self.rules})

    def constructors(self) -> list[str]:
        d = set(self.defined_symbols())
        return sorted(f for f in self.signature.functions if f not in d)

    @property
    def is_conditional(self) -> bool:
        return any(r.conditions for r in self.rules)


# ---------------------------------------------------------------- ground terms

def ground_terms(sig: Signature, sort: str, height_bound: int) -> list[App]:
    """All ground terms of ``sort`` with height at most ``height_bound``.

    Ordered by height, then lexicographically by symbol and arguments.
    """
    if height_bound < 0:
        raise ValueError("height_bound must be non-negative")
    levels = _ground_levels(sig, height_bound)
    return [t for h in range(height_bound + 1) for t in levels[h].get(sort, [])]


def _ground_levels(sig: Signature, bound: int) -> list[dict[str, list[App]]]:
    levels: list[dict[str, list[App]]] = []
    upto: dict[str, list[App]] = {s: [] for s in sig.sorts}
    for h in range(bound + 1):
        level: dict[str, list[App]] = {s: [] for s in sig.sorts}
        for f in sorted(sig.functions):
            w, s = sig.functions[f]
            if h == 0:
                if not w:
                    level[s].append(App(f, (), s))
                continue
            if not w:
                continue
            pools = [upto[si] for si in w]
            for args in itertools.product(*pools):
                if max(height(a) for a in args) == h - 1:
                    level[s].append(App(f, tuple(args), s))
        for s in level:
            level[s].sort(key=term_key)
            upto[s] = upto[s] + level[s]
        levels.append(level)
    return levels


def count_ground_terms(sig: Signature, height_bound: int) -> dict[str, int]:
    """Number of ground terms per sort with height at most ``height_bound``."""
    upto = {s: len(sig.constants(s)) for s in sig.sorts}
    for _ in range(height_bound):
        new = {s: len(sig.constants(s)) for s in sig.sorts}
        for f, (w, s) in sig.functions.items():
            if w:
                new[s] += _product(upto[si] for si in w)
        upto = new
    return upto


def _product(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out *= x
    return out


# ---------------------------------------------------------------- Maude-lite reader

_TOKEN = re.compile(r"\*\*\*[^\n]*|\s+|[(),]|[^\s(),]+")

_KEYWORDS = {"mod", "is", "endm", "sort", "sorts", "op", "ops", "var", "vars", "rl", "crl"}


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    for m in _TOKEN.finditer(text):
        s = m.group(0)
        if not (s.isspace() or s.startswith("***")):
            toks.append(_Tok(s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
    return toks


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else _Tok("", 1, 1)
            raise SpecError("unexpected end of input", last.line, last.col)
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise SpecError(f"expected '{text}', found '{t.text}'", t.line, t.col)
        return t

    def statement(self) -> list[_Tok]:
        """Tokens up to (not including) the terminating '.'."""
        out = []
        while True:
            t = self.next()
            if t.text == ".":
                return out
            out.append(t)


def parse_spec(text: str) -> RewriteSpec:
    """Read a Maude-lite module.

    Supported statements: ``mod NAME is`` / ``endm`` (optional), ``sort(s)``,
    ``op(s)``, ``var(s)``, ``rl l => r .`` and ``crl l => r if c => d /\\ ... .``.
    When no sort is declared, the single sort ``S`` is declared implicitly.
    """
    rd = _Reader(text)
    name = None
    sorts: list[str] = []
    fns: dict[str, tuple[tuple[str, ...], str]] = {}
    var_decls: dict[str, str] = {}
    raw_rules: list[tuple[str, list[_Tok]]] = []
    pending_fns: list[tuple[_Tok, list[str], list[str], str]] = []
    pending_vars: list[tuple[_Tok, list[str], str]] = []

    first = rd.peek()
    if first is not None and first.text == "mod":
        rd.next()
        name = rd.next().text
        rd.expect("is")
    while rd.peek() is not None:
        t = rd.peek()
        if t.text == "endm":
            rd.next()
            if rd.peek() is not None:
                x = rd.peek()
                raise SpecError(f"unexpected '{x.text}' after endm", x.line, x.col)
            break
        head = rd.next()
        kw = head.text
        if kw not in _KEYWORDS or kw in ("mod", "is", "endm"):
            raise SpecError(f"unexpected '{kw}' at start of statement", head.line, head.col)
        body = rd.statement()
        if kw in ("sort", "sorts"):
            if not body:
                raise SpecError("empty sort declaration", head.line, head.col)
            for b in body:
                if b.text == NAT:
                    raise SpecError("sort name 'Nat' is reserved", b.line, b.col)
                if b.text in sorts:
                    raise SpecError(f"sort {b.text} declared twice", b.line, b.col)
                sorts.append(b.text)
        elif kw in ("op", "ops"):
            texts = [b.text for b in body]
            if ":" not in texts or "->" not in texts:
                raise SpecError("operator declaration needs ': ... -> ...'", head.line, head.col)
            c, a = texts.index(":"), texts.index("->")
            names, dom, rng = texts[:c], texts[c + 1:a], texts[a + 1:]
            if not names or len(rng) != 1 or a < c:
                raise SpecError("malformed operator declaration", head.line, head.col)
            if kw == "op" and len(names) != 1:
                raise SpecError("'op' declares a single symbol; use 'ops'", head.line, head.col)
            pending_fns.append((head, names, dom, rng[0]))
        elif kw in ("var", "vars"):
            texts = [b.text for b in body]
            if ":" not in texts or len(texts) < 3 or texts.index(":") != len(texts) - 2:
                raise SpecError("malformed variable declaration", head.line, head.col)
            pending_vars.append((head, texts[:-2], texts[-1]))
        else:
            raw_rules.append((kw, body))

    if not sorts:
        sorts = [DUMMY_SORT]
    for head, names, dom, rng in pending_fns:
        for n in names:
            if n in fns:
                raise SpecError(f"operator {n} declared twice", head.line, head.col)
            if n == EQ:
                raise SpecError("'=' is the built-in identity and cannot be declared", head.line, head.col)
            for s in (*dom, rng):
                if s not in sorts:
                    raise SpecError(f"undeclared sort {s} in declaration of {n}", head.line, head.col)
            fns[n] = (tuple(dom), rng)
    for head, names, s in pending_vars:
        if s not in sorts:
            raise SpecError(f"undeclared sort {s} in variable declaration", head.line, head.col)
        for n in names:
            if n in fns:
                raise SpecError(f"variable {n} clashes with an operator", head.line, head.col)
            var_decls[n] = s
    sig = Signature(tuple(sorts), fns, {})
    variables = {n: Var(n, s) for n, s in var_decls.items()}

    rules = []
    for kw, body in raw_rules:
        rules.append(_parse_rule(kw, body, sig, variables))
    return RewriteSpec(sig, tuple(rules), variables, name)


def _split(toks: list[_Tok], sep: str) -> list[list[_Tok]]:
    parts: list[list[_Tok]] = [[]]
    depth = 0
    for t in toks:
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            depth -= 1
        if t.text == sep and depth == 0:
            parts.append([])
        else:
            parts[-1].append(t)
    return parts


def _parse_rule(kw: str, body: list[_Tok], sig: Signature, variables: Mapping[str, Var]) -> Rule:
    if not body:
        raise SpecError(f"empty {kw} statement")
    anchor = body[0]
    conds: list[tuple[Term, Term]] = []
    if kw == "crl":
        parts = _split(body, "if")
        if len(parts) != 2:
            raise SpecError("conditional rule needs exactly one 'if'", anchor.line, anchor.col)
        body = parts[0]
        for c in _split(parts[1], "/\\"):
            sides = _split(c, "=>")
            if len(sides) != 2 or not sides[0] or not sides[1]:
                raise SpecError("malformed rule condition", anchor.line, anchor.col)
            conds.append((_parse_term_toks(sides[0], sig, variables), _parse_term_toks(sides[1], sig, variables)))
        if not conds:
            raise SpecError("conditional rule without conditions", anchor.line, anchor.col)
    elif any(t.text == "if" for t in body):
        raise SpecError("'if' is only allowed in crl statements", anchor.line, anchor.col)
    sides = _split(body, "=>")
    if len(sides) != 2 or not sides[0] or not sides[1]:
        raise SpecError("rule needs the form 'l => r'", anchor.line, anchor.col)
    lhs = _parse_term_toks(sides[0], sig, variables)
    rhs = _parse_term_toks(sides[1], sig, variables)
    try:
        return Rule(lhs, rhs, tuple(conds))
    except SpecError as e:
        raise SpecError(str(e), anchor.line, anchor.col) from None


def _parse_term_toks(toks: list[_Tok], sig: Signature, variables: Mapping[str, Var]) -> Term:
    pos = 0

    def term() -> Term:
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1]
            raise SpecError("unexpected end of term", last.line, last.col)
        t = toks[pos]
        pos += 1
        if t.text in "(),":
            raise SpecError(f"unexpected '{t.text}' in term", t.line, t.col)
        if pos < len(toks) and toks[pos].text == "(":
            pos += 1
            args = [term()]
            while pos < len(toks) and toks[pos].text == ",":
                pos += 1
                args.append(term())
            if pos >= len(toks) or toks[pos].text != ")":
                raise SpecError("missing ')'", t.line, t.col)
            pos += 1
            try:
                return sig.app(t.text, *args)
            except SpecError as e:
                raise SpecError(f"sort error in {t.text}(...): {e}", t.line, t.col) from None
        if t.text in variables:
            return variables[t.text]
        if t.text in sig.functions:
            try:
                return sig.app(t.text)
            except SpecError as e:
                raise SpecError(str(e), t.line, t.col) from None
        raise SpecError(f"undeclared symbol or variable '{t.text}'", t.line, t.col)

    result = term()
    if pos != len(toks):
        t = toks[pos]
        raise SpecError(f"unexpected '{t.text}' after term", t.line, t.col)
    return result


def parse_term(text: str, sig: Signature, variables: Mapping[str, Var] | None = None) -> Term:
    toks = _tokenize(text)
    if not toks:
        raise SpecError("empty term")
    return _parse_term_toks(toks, sig, variables or {})


def format_spec(spec: RewriteSpec) -> str:
    """Render ``spec`` in the Maude-lite syntax accepted by :func:`parse_spec`."""
    sig = spec.signature
    lines = [f"mod {spec.name or 'SPEC'} is", f"  sorts {' '.join(sig.sorts)} ."]
    for f in sorted(sig.functions):
        w, s = sig.functions[f]
        lines.append(f"  op {f} : {' '.join(w)}{' ' if w else ''}-> {s} .")
    for n in sorted(spec.variables):
        lines.append(f"  var {n} : {spec.variables[n].sort} .")
    for r in spec.rules:
        kw = "crl" if r.conditions else "rl"
        lines.append(f"  {kw} {_maude_term(r.lhs)} => {_maude_term(r.rhs)}"
                     + ("".join([" if ", r" /\ ".join(f"{_maude_term(c)} => {_maude_term(d)}" for c, d in r.conditions)])
                        if r.conditions else "") + " .")
    lines.append("endm")
    return "\n".join(lines) + "\n"


def _maude_term(t: Term) -> str:
    if isinstance(t, Var) or not t.args:
        return t.name if isinstance(t, Var) else t.symbol
    return f"{t.symbol}({','.join(_maude_term(a) for a in t.args)})"

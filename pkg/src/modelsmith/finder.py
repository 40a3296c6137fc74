"""Finite model search by propositional flattening over the DPLL core.

Every sentence is ground-instantiated over candidate carriers.  Each function
cell ``f(a1..ak) = v`` and each predicate tuple gets a propositional variable;
nested terms get auxiliary value variables.  Connectives are encoded with
Tseitin definitions, except at the top of a sentence where conjunctions and
disjunctions become clauses directly.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .fol import And, Atom, Exists, Forall, Formula, Implies, Not, Or
from .sat import CNF
from .structure import NatMode, SortedStructure, check_model
from .terms import EQ, GT, NAT, Term, Var

TRUE, FALSE = CNF.TRUE, CNF.FALSE


class SearchTimeout(Exception):
    pass


class ModelCheckFailure(AssertionError):
    """A decoded model failed re-verification (indicates an encoder bug)."""


@dataclass(frozen=True)
class SearchConfig:
    sizes: Mapping[str, tuple[int, int]] = field(default_factory=dict)
    default_range: tuple[int, int] = (1, 4)
    timeout: float | None = None
    symmetry: bool = True
    nat_bound: int | None = None
    backend: str | None = None

    def __post_init__(self) -> None:
        for s, (lo, hi) in {**self.sizes, "*": self.default_range}.items():
            if lo < 1 or hi < lo:
                raise ValueError(f"bad size range for {s}: {lo}..{hi}")

    def range_for(self, sort: str) -> tuple[int, int]:
        return self.sizes.get(sort, self.default_range)


@dataclass
class SearchResult:
    status: str  # "sat", "unsat" (at the explored bounds) or "timeout"
    model: SortedStructure | None = None
    sizes: dict | None = None
    log: list = field(default_factory=list)

    @property
    def sat(self) -> bool:
        return self.status == "sat"


def size_grid(sorts: Sequence[str], cfg: SearchConfig) -> list[dict[str, int]]:
    """Size assignments ordered by total size, then lexicographically."""
    ranges = [range(cfg.range_for(s)[0], cfg.range_for(s)[1] + 1) for s in sorts]
    combos = sorted(itertools.product(*ranges), key=lambda c: (sum(c), c))
    return [dict(zip(sorts, c)) for c in combos]


class Encoder:
    def __init__(self, theory, sizes: Mapping[str, int], nat_bound: int | None,
                 symmetry: bool = True, deadline: float = 0.0):
        self.theory = theory
        self.sig = theory.signature
        self.sizes = dict(sizes)
        self.nat_bound = nat_bound
        if NAT in self.sig.sorts:
            if nat_bound is None:
                raise ValueError("theory mentions Nat; a segment bound is required")
            self.sizes[NAT] = nat_bound + 1
        self.builtins = dict(theory.builtins)
        self.cnf = CNF()
        self.cells: dict[tuple, list[int]] = {}
        self.preds: dict[tuple, int] = {}
        self.vals: dict[tuple, list[int]] = {}
        self.atoms: dict[tuple, int] = {}
        self.deadline = deadline
        self._tick = 0
        for s in self.sig.sorts:
            if s not in self.sizes:
                raise ValueError(f"no size for sort {s}")
        if symmetry:
            self._break_symmetry()

    # ------------------------------------------------------------ cells
    def _fixed_value(self, f: str, args: tuple[int, ...]) -> int | None:
        kind = self.builtins.get(f)
        if kind == "zero":
            return 0
        if kind == "succ":
            return min(args[0] + 1, self.nat_bound)
        if f not in self.sig.functions and f.isdigit():
            k = int(f)
            if k > self.nat_bound:
                raise ValueError(f"numeral {k} exceeds the Nat segment")
            return k
        return None

    def cell(self, f: str, args: tuple[int, ...], sort: str) -> list[int]:
        key = (f, args)
        got = self.cells.get(key)
        if got is not None:
            return got
        n = self.sizes[sort]
        fixed = self._fixed_value(f, args)
        if fixed is not None:
            lits = [TRUE if v == fixed else FALSE for v in range(n)]
        elif n == 1:
            lits = [TRUE]
        else:
            lits = [self.cnf.new_var(phase=1, priority=0) for _ in range(n)]
            self.cnf.add(lits)
            for a, b in itertools.combinations(lits, 2):
                self.cnf.add((-a, -b))
        self.cells[key] = lits
        return lits

    def pred(self, p: str, args: tuple[int, ...]) -> int:
        if p == EQ:
            return TRUE if args[0] == args[1] else FALSE
        if self.builtins.get(p) == "gt" or (p == GT and NAT in self.sig.sorts):
            return TRUE if args[0] > args[1] else FALSE
        key = (p, args)
        got = self.preds.get(key)
        if got is None:
            got = self.cnf.new_var(phase=0, priority=1)
            self.preds[key] = got
        return got

    def free_entries(self) -> tuple[list, list]:
        """Table entries no sentence instance mentions; any value works there."""
        fns = []
        for f, (w, s) in self.sig.functions.items():
            for args in itertools.product(*(range(self.sizes[si]) for si in w)):
                if (f, args) not in self.cells and self._fixed_value(f, args) is None:
                    fns.append((f, args, s))
        preds = []
        for p, w in self.sig.predicates.items():
            if p == EQ or self.builtins.get(p) == "gt" or (p == GT and NAT in self.sig.sorts):
                continue
            for args in itertools.product(*(range(self.sizes[si]) for si in w)):
                if (p, args) not in self.preds:
                    preds.append((p, args))
        return fns, preds

    def _break_symmetry(self) -> None:
        for s in self.sig.sorts:
            if s == NAT:
                continue
            consts = [c for c in self.sig.constants(s) if c not in self.builtins]
            for i, c in enumerate(consts):
                lits = self.cell(c, (), s)
                for v in range(i + 1, len(lits)):
                    self.cnf.add((-lits[v],))

    # ------------------------------------------------------------ terms
    @staticmethod
    def _known(vl: list[int]) -> int | None:
        for i, l in enumerate(vl):
            if l == TRUE:
                return i
        return None

    def term(self, t: Term, env: Mapping[Var, int]) -> list[int]:
        if isinstance(t, Var):
            e = env[t]
            return [TRUE if v == e else FALSE for v in range(self.sizes[t.sort])]
        arg_vls = [self.term(a, env) for a in t.args]
        known = [self._known(vl) for vl in arg_vls]
        if all(k is not None for k in known):
            return self.cell(t.symbol, tuple(known), t.sort)
        key = (t.symbol, tuple(tuple(vl) for vl in arg_vls))
        got = self.vals.get(key)
        if got is not None:
            return got
        n = self.sizes[t.sort]
        out = [self.cnf.new_var() for _ in range(n)]
        choices = [[(v, l) for v, l in enumerate(vl) if l != FALSE] for vl in arg_vls]
        for combo in itertools.product(*choices):
            args = tuple(v for v, _ in combo)
            guard = [-l for _, l in combo]
            cl = self.cell(t.symbol, args, t.sort)
            for v in range(n):
                self.cnf.add(guard + [-cl[v], out[v]])
                self.cnf.add(guard + [-out[v], cl[v]])
        self.vals[key] = out
        return out

    # ------------------------------------------------------------ formulas
    def atom(self, a: Atom, env: Mapping[Var, int]) -> int:
        vls = [self.term(t, env) for t in a.args]
        known = [self._known(vl) for vl in vls]
        if all(k is not None for k in known):
            return self.pred(a.pred, tuple(known))
        key = (a.pred, tuple(tuple(vl) for vl in vls))
        got = self.atoms.get(key)
        if got is not None:
            return got
        if a.pred == EQ:
            tv, uv = vls
            if known[0] is not None:
                lit = uv[known[0]]
            elif known[1] is not None:
                lit = tv[known[1]]
            else:
                lit = self.cnf.new_var()
                for v in range(len(tv)):
                    self.cnf.add((-tv[v], -uv[v], lit))
                    self.cnf.add((-lit, -tv[v], uv[v]))
            self.atoms[key] = lit
            return lit
        lit = self.cnf.new_var()
        choices = [[(v, l) for v, l in enumerate(vl) if l != FALSE] for vl in vls]
        for combo in itertools.product(*choices):
            guard = [-l for _, l in combo]
            p = self.pred(a.pred, tuple(v for v, _ in combo))
            self.cnf.add(guard + [-lit, p])
            self.cnf.add(guard + [lit, -p])
        self.atoms[key] = lit
        return lit

    def _check_time(self) -> None:
        self._tick += 1
        if self.deadline and (self._tick & 1023) == 0 and time.monotonic() > self.deadline:
            raise SearchTimeout("encoding exceeded the time budget")

    def _instances(self, f, env):
        v = f.var
        for e in range(self.sizes[v.sort]):
            yield {**env, v: e}

    def encode(self, f: Formula, env: Mapping[Var, int]) -> int:
        self._check_time()
        if isinstance(f, Atom):
            return self.atom(f, env)
        if isinstance(f, Not):
            return -self.encode(f.arg, env)
        if isinstance(f, Implies):
            return self._gate(False, [lambda: -self.encode(f.lhs, env), lambda: self.encode(f.rhs, env)])
        if isinstance(f, And):
            return self._gate(True, [(lambda g=g: self.encode(g, env)) for g in f.args])
        if isinstance(f, Or):
            return self._gate(False, [(lambda g=g: self.encode(g, env)) for g in f.args])
        insts = [(lambda e=e: self.encode(f.body, e)) for e in self._instances(f, env)]
        return self._gate(isinstance(f, Forall), insts)

    def _gate(self, conj: bool, parts) -> int:
        absorbing = FALSE if conj else TRUE
        neutral = -absorbing
        lits: list[int] = []
        for mk in parts:
            l = mk()
            if l == absorbing:
                return absorbing
            if l == neutral:
                continue
            if -l in lits:
                return absorbing
            if l not in lits:
                lits.append(l)
        if not lits:
            return neutral
        if len(lits) == 1:
            return lits[0]
        g = self.cnf.new_var()
        if conj:
            for l in lits:
                self.cnf.add((-g, l))
            self.cnf.add([g] + [-l for l in lits])
        else:
            for l in lits:
                self.cnf.add((g, -l))
            self.cnf.add([-g] + lits)
        return g

    def assert_(self, f: Formula, env: Mapping[Var, int] | None = None) -> None:
        env = env or {}
        self._check_time()
        if isinstance(f, And):
            for g in f.args:
                self.assert_(g, env)
        elif isinstance(f, Forall):
            for e in self._instances(f, env):
                self.assert_(f.body, e)
        elif isinstance(f, Or):
            self.cnf.add([self.encode(g, env) for g in f.args])
        elif isinstance(f, Implies):
            self.cnf.add([-self.encode(f.lhs, env), self.encode(f.rhs, env)])
        elif isinstance(f, Exists):
            self.cnf.add([self.encode(f.body, e) for e in self._instances(f, env)])
        else:
            self.cnf.add([self.encode(f, env)])

    def encode_theory(self) -> None:
        for f in self.theory.sentences:
            self.assert_(f)

    # ------------------------------------------------------------ decoding
    def decode(self, values: Sequence[int]) -> SortedStructure:
        def truth(l: int) -> bool:
            if l == TRUE:
                return True
            if l == FALSE:
                return False
            return bool(values[l]) if l > 0 else not values[-l]

        functions: dict[str, dict] = {}
        for f, (w, s) in self.sig.functions.items():
            tab = {}
            for args in itertools.product(*(range(self.sizes[si]) for si in w)):
                lits = self.cells.get((f, args))
                if lits is None:
                    fixed = self._fixed_value(f, args)
                    tab[args] = fixed if fixed is not None else 0
                else:
                    tab[args] = next(v for v, l in enumerate(lits) if truth(l))
            functions[f] = tab
        predicates: dict[str, frozenset] = {}
        for p, w in self.sig.predicates.items():
            if p == GT and NAT in self.sig.sorts:
                predicates[p] = frozenset((a, b) for a in range(self.sizes[NAT])
                                          for b in range(self.sizes[NAT]) if a > b)
                continue
            predicates[p] = frozenset(args for (q, args), l in self.preds.items() if q == p and truth(l))
        carriers = {s: n for s, n in self.sizes.items() if s != NAT}
        nat = NatMode.segment(self.nat_bound) if NAT in self.sig.sorts else None
        return SortedStructure(carriers, dict(self.sig.functions), dict(self.sig.predicates),
                               functions, predicates, {}, nat)

    def blocking_clause(self, values: Sequence[int]) -> list[int]:
        out = []
        for lits in self.cells.values():
            for l in lits:
                if l not in (TRUE, FALSE) and values[l]:
                    out.append(-l)
        for l in self.preds.values():
            out.append(-l if values[l] else l)
        return out


def proper_sorts(theory) -> list[str]:
    return [s for s in theory.signature.sorts if s != NAT]


def default_nat_bound(sizes: Mapping[str, int]) -> int:
    return sum(n for s, n in sizes.items() if s != NAT)


def _solve_at(theory, sizes, cfg: SearchConfig, deadline: float):
    B = cfg.nat_bound if cfg.nat_bound is not None else default_nat_bound(sizes)
    enc = Encoder(theory, sizes, B if NAT in theory.signature.sorts else None, cfg.symmetry, deadline)
    enc.encode_theory()
    try:
        values = enc.cnf.solve(deadline, cfg.backend)
    except TimeoutError as e:
        raise SearchTimeout(str(e)) from None
    return enc, values


def find_model(theory, cfg: SearchConfig | None = None) -> SearchResult:
    """Smallest model over the size grid, re-verified before it is returned."""
    cfg = cfg or SearchConfig()
    start = time.monotonic()
    deadline = start + cfg.timeout if cfg.timeout else 0.0
    log = []
    for sizes in size_grid(proper_sorts(theory), cfg):
        t0 = time.monotonic()
        try:
            enc, values = _solve_at(theory, sizes, cfg, deadline)
        except SearchTimeout:
            log.append((sizes, "timeout", time.monotonic() - t0))
            return SearchResult("timeout", None, sizes, log)
        log.append((sizes, "sat" if values else "unsat", time.monotonic() - t0,
                    enc.cnf.nvars, enc.cnf.num_clauses))
        if values is not None:
            A = enc.decode(values)
            report = check_model(A, theory)
            if not report.ok:
                raise ModelCheckFailure(f"decoded model violates {report.failures()}")
            return SearchResult("sat", A, sizes, log)
    return SearchResult("unsat", None, None, log)


def iter_models(theory, sizes: Mapping[str, int], cfg: SearchConfig | None = None,
                limit: int = 100) -> Iterator[SortedStructure]:
    """Distinct models at fixed carrier sizes (up to ``limit``).

    Every symbol of the signature is enumerated, including those the theory
    leaves unconstrained.
    """
    cfg = cfg or SearchConfig()
    deadline = time.monotonic() + cfg.timeout if cfg.timeout else 0.0
    B = cfg.nat_bound if cfg.nat_bound is not None else default_nat_bound(sizes)
    enc = Encoder(theory, sizes, B if NAT in theory.signature.sorts else None, cfg.symmetry, deadline)
    enc.encode_theory()
    free_fns, free_preds = enc.free_entries()
    fn_choices = [range(enc.sizes[s]) for _, _, s in free_fns]
    emitted = 0
    while emitted < limit:
        try:
            values = enc.cnf.solve(deadline, cfg.backend)
        except TimeoutError as e:
            raise SearchTimeout(str(e)) from None
        if values is None:
            return
        A = enc.decode(values)
        report = check_model(A, theory)
        if not report.ok:
            raise ModelCheckFailure(f"decoded model violates {report.failures()}")
        # the solver only sees constrained entries; expand the rest here
        for fvals in itertools.product(*fn_choices):
            for bits in itertools.product((False, True), repeat=len(free_preds)):
                if emitted >= limit:
                    return
                yield _complete(A, free_fns, fvals, free_preds, bits)
                emitted += 1
        block = enc.blocking_clause(values)
        if not block:
            return
        enc.cnf.add(block)


def _complete(A: SortedStructure, fns, fvals, preds, bits) -> SortedStructure:
    if not fns and not preds:
        return A
    functions = {f: dict(t) for f, t in A.functions.items()}
    for (f, args, _), v in zip(fns, fvals):
        functions[f][args] = v
    predicates = {p: set(t) for p, t in A.predicates.items()}
    for (p, args), b in zip(preds, bits):
        if b:
            predicates[p].add(args)
    return A.with_tables(functions=functions, predicates={p: frozenset(t) for p, t in predicates.items()})

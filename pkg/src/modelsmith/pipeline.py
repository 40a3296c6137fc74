"""End-to-end drivers: disproving and proving properties of the initial model
by finding finite models, then certifying the side conditions that make the
model's verdict transfer to the ground-term semantics.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .closure import (
    DEFAULT_HEIGHT_BOUND,
    ClosureError,
    NegativeTheory,
    PreconditionRow,
    RefusedNegatives,
    check_condition_b,
    deductive_closure,
    load_negatives,
    negative_theory,
)
from .finder import SearchConfig, SearchTimeout, find_model, iter_models, size_grid
from .fol import (
    Atom,
    Formula,
    Not,
    atoms,
    format_formula,
    negate,
    parse_formula,
    skolemize,
    to_prenex,
)
from .lia import grid_search_linear
from .structure import NatMode, SortedStructure, check_model, format_structure
from .surjectivity import SurjectivityTheory, merge_surjectivity, suh_ground, suh_terms
from .terms import EQ, GT, NAT, RewriteSpec, Signature, SpecError, Term, count_ground_terms, ground_terms, parse_term
from .theory import PropertyTemplate, Theory, full_signature, instantiate_property, theory_for
from .witness import WitnessError, WitnessSet, ground_value_map, refutation_witnesses

DISPROVED, PROVED, UNKNOWN = "Disproved", "Proved", "Unknown"
MODES = ("disprove", "prove")
GROUND_NOTE = "statements concern ground terms only (truth in the initial model)"


class RefusedJob(Exception):
    """The job cannot yield a sound verdict as configured."""


@dataclass(frozen=True)
class Job:
    spec: RewriteSpec
    property: str = "Formula:true"
    mode: str = "disprove"
    surjectivity: str = "auto"  # auto | ground:<h> | ground-set | nat | none
    ground_set: tuple[Term, ...] = ()
    negatives: str = "auto"  # auto | file | none
    negatives_text: str | None = None
    search: SearchConfig = field(default_factory=SearchConfig)
    nat: NatMode | None = None
    structure: SortedStructure | None = None
    formula: Formula | None = None
    height_bound: int = DEFAULT_HEIGHT_BOUND
    coeff_bound: int = 2
    model_limit: int = 50
    witness_limit: int = 64
    spec_path: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        s = self.surjectivity
        if not (s in ("auto", "ground-set", "nat", "none") or s == "ground" or s.startswith("ground:")):
            raise ValueError(f"unknown surjectivity strategy {s}")
        if s.startswith("ground:") and not s[7:].isdigit():
            raise ValueError("ground:<height> needs a non-negative integer")
        if s == "ground-set" and not self.ground_set:
            raise ValueError("ground-set strategy needs a term set")
        if self.negatives not in ("auto", "file", "none"):
            raise ValueError("negatives must be auto, file or none")
        if self.negatives == "file" and self.negatives_text is None:
            raise ValueError("negatives=file needs the file contents")

    def sentence(self) -> Formula:
        if self.formula is not None:
            return self.formula
        return instantiate_property(PropertyTemplate.parse(self.property), self.spec)


@dataclass(frozen=True)
class Certificate:
    verdict: str
    mode: str
    property: str
    sentence: str
    falsified: str
    structure: SortedStructure | None = None
    rows: tuple[PreconditionRow, ...] = ()
    witnesses: WitnessSet | None = None
    provenance: tuple[tuple[str, str], ...] = ()
    theory: Theory | None = None
    notes: tuple[str, ...] = ()
    reason: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in (DISPROVED, PROVED, UNKNOWN):
            raise ValueError(f"bad verdict {self.verdict}")
        if self.verdict != UNKNOWN:
            bad = [r for r in self.rows if not r.ok]
            if bad:
                raise AssertionError(f"verdict {self.verdict} with failing precondition {bad[0]}")
            if self.structure is None:
                raise AssertionError("a definite verdict needs a structure")

    @property
    def decided(self) -> bool:
        return self.verdict != UNKNOWN

    def recheck(self) -> bool:
        """Re-evaluate the recorded sentence set in the recorded structure."""
        if self.structure is None or self.theory is None:
            return False
        return check_model(self.structure, self.theory).ok

    def to_text(self) -> str:
        out = [
            f"verdict: {self.verdict}",
            f"mode: {self.mode}",
            f"property: {self.property}",
            f"sentence: {self.sentence}",
            f"falsified: {self.falsified}",
        ]
        if self.reason:
            out.append(f"reason: {self.reason}")
        out.append("")
        out.append("[theories]")
        out += [f"{k}: {v}" for k, v in self.provenance]
        out.append("")
        out.append("[preconditions]")
        out += [str(r) for r in self.rows] or ["(none)"]
        out.append("")
        out.append("[structure]")
        out.append(format_structure(self.structure).rstrip() if self.structure is not None else "(none)")
        out.append("")
        out.append("[witnesses]")
        out.append(self.witnesses.listing() if self.witnesses and self.witnesses.witnesses else "(none)")
        if self.notes:
            out.append("")
            out.append("[notes]")
            out += self.notes
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------- helpers

def _sort_closed(sig: Signature, s: str, h: int) -> bool:
    return count_ground_terms(sig, h)[s] == count_ground_terms(sig, h + 1)[s]


def _surjectivity_theory(job: Job, sorts: Sequence[str]) -> tuple[list[SurjectivityTheory], str]:
    sig = job.spec.signature
    strategy = job.surjectivity
    if not sorts:
        return [], "not needed"
    if strategy == "none":
        raise RefusedJob(
            "the falsified sentence quantifies universally over "
            f"{', '.join(sorts)}; a model without surjectivity constraints may use values no ground term "
            "denotes, so its verdict would not transfer. Choose --surjectivity ground:<h>, ground-set or nat.")
    if strategy == "auto":
        strategy = "ground" if all(_sort_closed(sig, s, job.height_bound) for s in sorts) else "nat"
    parts: list[SurjectivityTheory] = []
    if strategy == "nat":
        for s in sorts:
            parts.append(suh_terms(sig, s))
        return parts, "nat"
    if strategy == "ground-set":
        for s in sorts:
            T = [t for t in job.ground_set if t.sort == s]
            if not T:
                raise RefusedJob(f"ground term set has no term of sort {s}")
            parts.append(suh_ground(sig, s, T))
        return parts, "ground-set"
    h = job.height_bound if strategy == "ground" else int(strategy[7:])
    for s in sorts:
        T = ground_terms(sig, s, h)
        if not T:
            raise RefusedJob(f"sort {s} has no ground terms of height <= {h}")
        parts.append(suh_ground(sig, s, T))
    return parts, f"ground:{h}"


def _mentions_nat(f: Formula) -> bool:
    for a in atoms(f):
        if any(t.sort == NAT for t in a.args):
            return True
    return False


def _drop_nat(sig: Signature) -> Signature:
    return Signature(tuple(s for s in sig.sorts if s != NAT),
                     {f: r for f, r in sig.functions.items() if NAT not in r[0] and r[1] != NAT},
                     {p: w for p, w in sig.predicates.items() if NAT not in w})


def _symbolic_search(job: Job, S: Theory, deadline: float) -> tuple[SortedStructure | None, str]:
    """Finite tables for the Nat-free sentences, then linear interpretations
    for the Nat-indexed predicates, decided over the true naturals."""
    nat_free = [(l, f) for l, f in S.labelled() if not _mentions_nat(f)]
    nat_part = [f for _, f in S.labelled() if _mentions_nat(f)]
    sig = S.signature
    fsig = _drop_nat(sig)
    finite = Theory(fsig, tuple(f for _, f in nat_free), tuple(l for l, _ in nat_free), {}, "finite")
    preds = [p for p, w in sig.predicates.items() if NAT in w and p != GT]
    rest = Theory(sig, tuple(nat_part), (), dict(S.builtins), "nat")
    cfg = job.search
    tried = 0
    for sizes in size_grid([s for s in fsig.sorts], cfg):
        remaining = deadline - time.monotonic() if deadline else None
        sub = replace(cfg, timeout=remaining if remaining is None else max(remaining, 0.001))
        try:
            for B in iter_models(finite, sizes, sub, limit=job.model_limit):
                tried += 1
                base = SortedStructure(B.carriers, dict(sig.functions), dict(sig.predicates),
                                       B.functions, B.predicates, B.labels, NatMode.symbolic())
                try:
                    res = grid_search_linear(rest, base, preds, job.coeff_bound, deadline or None)
                except TimeoutError:
                    return None, "time budget exceeded during linear search"
                if res.found:
                    A = base
                    for p, lp in res.assignment.items():
                        A = A.with_linear_predicate(p, lp)
                    return A, ""
        except SearchTimeout:
            return None, "time budget exceeded during finite search"
    return None, f"no linear interpretation found over {tried} finite candidates"


def _negatives(job: Job, base: Theory, preds: Sequence[str]) -> dict[str, NegativeTheory | str]:
    out: dict[str, NegativeTheory | str] = {}
    if job.negatives == "none":
        return out
    if job.negatives == "file":
        loaded = {N.predicate: N for N in load_negatives(job.negatives_text, full_signature(job.spec))}
        for P in preds:
            if P in loaded:
                out[P] = loaded[P]
        return out
    closure = None
    for P in preds:
        if P == EQ:
            continue
        try:
            if closure is None:
                from .closure import universe_is_closed
                if not universe_is_closed(base.signature, job.height_bound):
                    raise RefusedNegatives(
                        f"N({P}) refused: ground terms are unbounded, the complement is not finitely computable")
                closure = deductive_closure(base, job.height_bound)
            out[P] = negative_theory(base, P, job.height_bound, closure)
        except (RefusedNegatives, ClosureError) as e:
            out[P] = str(e)
    return out


# ---------------------------------------------------------------- drivers

def _attempt(job: Job, phi: Formula, chi: Formula) -> Certificate:
    """Find a model of ``not chi`` and certify that ``chi`` fails in the initial model."""
    start = time.monotonic()
    deadline = start + job.search.timeout if job.search.timeout else 0.0
    spec = job.spec
    sig = spec.signature
    base = theory_for(spec, phi)
    psi_chi = to_prenex(chi)
    target = to_prenex(negate(chi))
    need = [s for s in psi_chi.universal_sorts() if s != NAT]
    nat_in_chi = _mentions_nat(chi)
    provenance = [("rewrite theory", f"{len(base)} sentences")]
    notes = [GROUND_NOTE]

    parts, how = _surjectivity_theory(job, need)
    S = base
    suh = merge_surjectivity(parts)
    if suh is not None:
        S = S.union(suh)
        provenance.append(("surjectivity", f"{how} for {', '.join(need)} ({len(suh)} sentences)"))
    neg_preds = psi_chi.negative_predicates()
    negmap = _negatives(job, base, neg_preds)
    for P, N in negmap.items():
        if isinstance(N, NegativeTheory):
            S = S.with_sentences(N.sentences(), f"N({P})")
            provenance.append((f"N({P})", f"{len(N)} literals, {N.source}"))
            if job.mode == "prove":
                notes.append(f"negative literals on {P} in the negated goal required N({P})")
    if job.structure is None and job.nat is not None and job.nat.kind == "symbolic":
        symbolic = True
    else:
        symbolic = job.structure is not None and job.structure.symbolic
    property_text = job.property if job.formula is None else f"Formula:{format_formula(job.formula)}"

    def unknown(reason: str, A=None, rows=(), theory=None) -> Certificate:
        return Certificate(UNKNOWN, job.mode, property_text, format_formula(phi), format_formula(chi), A,
                           tuple(rows), None, tuple(provenance), theory, tuple(notes), reason)

    plain = S.with_sentences([target.to_formula(display=True)], "goal")
    if job.structure is not None:
        A = job.structure
        report = check_model(A, plain)
        if not report.ok:
            return unknown(f"supplied structure fails: {', '.join(report.failures()[:5])}", A, theory=plain)
        checked = plain
        provenance.append(("model", "supplied structure, re-verified"))
    elif symbolic:
        A, why = _symbolic_search(job, plain, deadline)
        if A is None:
            return unknown(why)
        checked = plain
        provenance.append(("model", "finite tables plus linear Nat interpretations"))
    else:
        sk = skolemize(target, S.signature)
        S_sk = S.with_sentences([sk.to_formula(display=True)], "goal", signature=S.signature.merge(sk.signature))
        cfg = job.search
        if job.nat is not None and job.nat.kind == "segment" and cfg.nat_bound is None:
            cfg = replace(cfg, nat_bound=job.nat.bound)
        res = find_model(S_sk, cfg)
        if res.status == "timeout":
            return unknown("time budget exceeded")
        if res.status != "sat":
            grid = ", ".join(f"{s}<={cfg.range_for(s)[1]}" for s in S_sk.signature.sorts if s != NAT)
            return unknown(f"no model within bounds ({grid})")
        A = res.model
        checked = S_sk
        provenance.append(("model", f"finite search, sizes {res.sizes}"))

    rows: list[PreconditionRow] = []
    m = ground_value_map(A, sig)
    from .witness import surjectivity_report
    rows += surjectivity_report(m, need)
    if nat_in_chi:
        if A.symbolic:
            rows.append(PreconditionRow("naturals", NAT, "pass", "Nat interpreted as the natural numbers"))
        else:
            rows.append(PreconditionRow("naturals", NAT, "fail",
                                        "Nat is a finite segment; the sentence needs the true naturals"))
    rows += check_condition_b(A, psi_chi, negmap)

    witnesses = None
    sk_target = skolemize(target, S.signature)
    try:
        witnesses = refutation_witnesses(sk_target, A, m, job.witness_limit)
    except WitnessError as e:
        notes.append(f"witnesses unavailable: {e}")
    ok = all(r.ok for r in rows)
    if not ok:
        failing = next(r for r in rows if not r.ok)
        cert = Certificate(UNKNOWN, job.mode, property_text, format_formula(phi), format_formula(chi), A,
                           tuple(rows), witnesses, tuple(provenance), checked, tuple(notes),
                           f"precondition {failing.kind}/{failing.subject} is {failing.status}")
        return cert
    verdict = DISPROVED if job.mode == "disprove" else PROVED
    return Certificate(verdict, job.mode, property_text, format_formula(phi), format_formula(chi), A,
                       tuple(rows), witnesses, tuple(provenance), checked, tuple(notes))


def disprove(job: Job) -> Certificate:
    """Show the property fails in the initial model via a model of its negation."""
    if job.mode != "disprove":
        raise ValueError("disprove needs mode=disprove")
    phi = job.sentence()
    return _attempt(job, phi, phi)


def prove_by_sat(job: Job) -> Certificate:
    """Show the property holds by disproving its negation."""
    if job.mode != "prove":
        raise ValueError("prove_by_sat needs mode=prove")
    phi = job.sentence()
    return _attempt(job, phi, Not(phi))


def run(job: Job) -> Certificate:
    return disprove(job) if job.mode == "disprove" else prove_by_sat(job)


# ---------------------------------------------------------------- goal tables

@dataclass(frozen=True)
class GoalRow:
    goal: str
    derivable: bool  # the goal is in the bounded closure
    model_of_negation: bool  # some model of the theory plus the negated goal
    verdict: str  # "true", "false" or "unknown"
    reason: str
    blocked: str = ""  # a tempting but unsound conclusion that was refused

    def __str__(self) -> str:
        yn = lambda b: "Y" if b else "N"
        tail = f"  [{self.blocked}]" if self.blocked else ""
        return f"{self.goal:<16} {yn(self.derivable)}  {yn(self.model_of_negation)}  {self.verdict:<7} {self.reason}{tail}"


def _ground_literal(f: Formula) -> tuple[Atom, bool]:
    if isinstance(f, Atom):
        return f, True
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return f.arg, False
    raise SpecError("goals must be literals or negated literals")


def run_goal_table(spec: RewriteSpec, goals: Sequence[str], cfg: SearchConfig | None = None,
                   height_bound: int = DEFAULT_HEIGHT_BOUND) -> list[GoalRow]:
    """Decide each ground literal goal in the initial model.

    A goal is true when the bounded closure derives it; otherwise a model
    of its negation refutes it only if the side conditions hold, and a model
    of the goal itself proves it under the same conditions.
    """
    cfg = cfg or SearchConfig(default_range=(1, 3))
    R = theory_for(spec)
    closure = deductive_closure(R, height_bound)
    sig = full_signature(spec)
    rows = []
    for text in goals:
        phi = parse_formula(text, sig)
        atom, positive = _ground_literal(phi)
        derivable = positive and closure.contains(atom)
        tool = find_model(R.with_sentences([negate(phi)], "goal"), cfg)
        has_model = tool.sat
        blocked = ""
        if tool.sat:
            rows_b = check_condition_b(tool.model, to_prenex(phi), _negatives(
                Job(spec, mode="disprove", height_bound=height_bound), R, to_prenex(phi).negative_predicates()))
            if not all(r.ok for r in rows_b):
                concl = format_formula(negate(phi))
                blocked = f"model satisfies {concl} but condition on negative literals fails; not concluded"
        if derivable:
            rows.append(GoalRow(text, True, has_model, "true", "derived in the bounded closure"))
            continue
        job = Job(spec, mode="disprove", formula=phi, search=cfg, height_bound=height_bound)
        c = disprove(job)
        if c.decided:
            rows.append(GoalRow(text, False, has_model, "false", "model of the negation, side conditions hold"))
            continue
        c2 = prove_by_sat(replace(job, mode="prove"))
        if c2.decided:
            rows.append(GoalRow(text, False, has_model, "true", "model of the goal, side conditions hold", blocked))
            continue
        rows.append(GoalRow(text, False, has_model, "unknown", c.reason or c2.reason, blocked))
    return rows


def format_goal_table(rows: Sequence[GoalRow]) -> str:
    head = f"{'goal':<16} R|-  A|=~  I|=  how"
    return "\n".join([head] + [str(r) for r in rows]) + "\n"


def parse_ground_set(text: str, sig: Signature) -> tuple[Term, ...]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_term(line, sig))
        except SpecError as e:
            raise SpecError(f"ground set line {n}: {e}") from None
    return tuple(out)

"""Command-line entry point.

    modelsmith check SPEC --property TEMPLATE --mode disprove|prove [options]
    modelsmith goals SPEC GOAL...
"""
from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from .closure import ClosureError
from .finder import SearchConfig
from .fol import FormulaError, parse_formula
from .lia import LiaError
from .pipeline import UNKNOWN, Job, RefusedJob, format_goal_table, parse_ground_set, run, run_goal_table
from .structure import EvalError, NatMode, StructureFormatError, parse_structure
from .terms import SpecError, parse_spec
from .theory import full_signature

EXIT_DECIDED, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2

log = logging.getLogger("modelsmith")


class UsageError(Exception):
    pass


def parse_sizes(items: list[str]) -> dict[str, tuple[int, int]]:
    out = {}
    for item in items:
        m = re.fullmatch(r"\s*([^=\s]+)\s*=\s*(\d+)(?:\s*\.\.\s*(\d+))?\s*", item)
        if not m:
            raise UsageError(f"bad --sizes entry {item!r}; expected sort=min..max or sort=n")
        lo = int(m.group(2))
        hi = int(m.group(3)) if m.group(3) else lo
        if lo < 1 or hi < lo:
            raise UsageError(f"bad size range in {item!r}")
        out[m.group(1)] = (lo, hi)
    return out


def parse_nat(text: str | None) -> NatMode | None:
    if text is None:
        return None
    if text == "symbolic":
        return NatMode.symbolic()
    m = re.fullmatch(r"segment:(\d+)", text)
    if not m:
        raise UsageError("--nat must be segment:<B> or symbolic")
    return NatMode.segment(int(m.group(1)))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def build_job(args: argparse.Namespace) -> Job:
    spec = parse_spec(_read(args.spec))
    surj = args.surjectivity
    ground_set = ()
    if surj.startswith("ground-set:"):
        ground_set = parse_ground_set(_read(surj[len("ground-set:"):]), spec.signature)
        surj = "ground-set"
    negatives, neg_text = args.negatives, None
    if negatives.startswith("file:"):
        neg_text = _read(negatives[5:])
        negatives = "file"
    elif negatives not in ("auto", "none"):
        raise UsageError("--negatives must be auto, file:<path> or none")
    cfg = SearchConfig(sizes=parse_sizes(args.sizes), timeout=args.timeout)
    structure = parse_structure(_read(args.structure)) if args.structure else None
    formula = parse_formula(args.formula, full_signature(spec)) if args.formula else None
    try:
        return Job(spec, args.property, args.mode, surj, ground_set, negatives, neg_text, cfg,
                   parse_nat(args.nat), structure, formula, args.height, args.coeff_bound,
                   spec_path=args.spec)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_check(args: argparse.Namespace) -> int:
    job = build_job(args)
    cert = run(job)
    text = cert.to_text()
    if args.cert:
        Path(args.cert).write_text(text)
        print(f"{cert.verdict}  (certificate written to {args.cert})")
    else:
        sys.stdout.write(text)
    if cert.verdict == UNKNOWN:
        return EXIT_UNKNOWN
    return EXIT_DECIDED


def cmd_goals(args: argparse.Namespace) -> int:
    spec = parse_spec(_read(args.spec))
    cfg = SearchConfig(default_range=(1, args.max_size), timeout=args.timeout)
    rows = run_goal_table(spec, args.goal, cfg, args.height)
    sys.stdout.write(format_goal_table(rows))
    return EXIT_UNKNOWN if any(r.verdict == "unknown" for r in rows) else EXIT_DECIDED


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modelsmith",
                                description="Prove or disprove properties of rewrite specifications with finite models.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="disprove or prove one property")
    c.add_argument("spec", help="rewrite specification file")
    c.add_argument("--property", default="Formula:true",
                   help="template with parameters, e.g. CR:S or CompletelyDefinedSymbol:head")
    c.add_argument("--formula", help="explicit sentence instead of a template")
    c.add_argument("--mode", choices=("disprove", "prove"), default="disprove")
    c.add_argument("--sizes", action="append", default=[], metavar="SORT=MIN..MAX")
    c.add_argument("--surjectivity", default="auto",
                   help="auto, ground, ground:<height>, ground-set:<file>, nat or none")
    c.add_argument("--negatives", default="auto", help="auto, file:<path> or none")
    c.add_argument("--nat", help="segment:<B> or symbolic")
    c.add_argument("--structure", help="check a supplied structure instead of searching")
    c.add_argument("--cert", help="write the certificate here instead of stdout")
    c.add_argument("--timeout", type=float, default=None, help="seconds")
    c.add_argument("--height", type=int, default=4, help="ground-term height bound")
    c.add_argument("--coeff-bound", type=int, default=2)
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("goals", help="decide ground literal goals in the initial model")
    g.add_argument("spec")
    g.add_argument("goal", nargs="+", help="e.g. 'b ->_S a' or '~(a ->_S b)'")
    g.add_argument("--max-size", type=int, default=3)
    g.add_argument("--height", type=int, default=4)
    g.add_argument("--timeout", type=float, default=None)
    g.set_defaults(func=cmd_goals)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RefusedJob as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (UsageError, SpecError, FormulaError, StructureFormatError, EvalError, ClosureError, LiaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

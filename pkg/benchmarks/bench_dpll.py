"""Compare the compiled SAT kernel with the pure-Python fallback.

Runs random 3-SAT near the phase transition and the clause sets produced by
the model finder for a few fixtures, reporting the median wall time per
backend.

    python benchmarks/bench_dpll.py [--repeat 5] [--vars 120]
"""
from __future__ import annotations

import argparse
import random
import statistics
import time
from pathlib import Path

from modelsmith.finder import Encoder
from modelsmith.fol import negate, skolemize, to_prenex
from modelsmith.sat import CNF, kernel
from modelsmith.terms import parse_spec
from modelsmith.theory import PropertyTemplate, instantiate_property, theory_for

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def random_3sat(n: int, ratio: float, seed: int) -> CNF:
    rng = random.Random(seed)
    cnf = CNF()
    vs = [cnf.new_var() for _ in range(n)]
    for _ in range(int(n * ratio)):
        cnf.add(rng.choice((1, -1)) * v for v in rng.sample(vs, 3))
    return cnf


def finder_cnf(fixture: str, prop: str, sizes: dict, negated: bool) -> CNF:
    spec = parse_spec((FIXTURES / fixture).read_text())
    phi = instantiate_property(PropertyTemplate.parse(prop), spec)
    target = negate(phi) if negated else phi
    sk = skolemize(to_prenex(target))
    T = theory_for(spec, phi)
    T = T.with_sentences([sk.to_formula()], "goal", signature=T.signature.merge(sk.signature))
    enc = Encoder(T, sizes, None, True, None)
    enc.encode_theory()
    return enc.cnf


def timed(cnf: CNF, backend: str, repeat: int) -> tuple[float, bool]:
    times = []
    sat = False
    for _ in range(repeat):
        t0 = time.perf_counter()
        sat = cnf.solve(backend=backend) is not None
        times.append(time.perf_counter() - t0)
    return statistics.median(times), sat


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--vars", type=int, default=120)
    args = ap.parse_args()

    try:
        kernel("compiled")
        backends = ["compiled", "python"]
    except ImportError:
        print("compiled kernel not built; timing the Python fallback only")
        backends = ["python"]

    cases = [(f"3sat n={args.vars} seed={s}", random_3sat(args.vars, 4.26, s)) for s in range(4)]
    cases += [
        ("CR disprove S=3", finder_cnf("wcr.maude", "CR:S", {"S": 3}, True)),
        ("WCR prove S=4", finder_cnf("wcr.maude", "WCR:S", {"S": 4}, False)),
        ("WN prove S=3", finder_cnf("wcr.maude", "WN:S", {"S": 3}, False)),
    ]
    head = f"{'case':<28} {'vars':>6} {'clauses':>8}  sat  " + "  ".join(f"{b:>10}" for b in backends)
    print(head)
    totals = {b: 0.0 for b in backends}
    for name, cnf in cases:
        cells = []
        sat = None
        for b in backends:
            t, sat = timed(cnf, b, args.repeat)
            totals[b] += t
            cells.append(f"{t * 1000:9.2f}ms")
        print(f"{name:<28} {cnf.nvars:>6} {cnf.num_clauses:>8}  {'Y' if sat else 'N':>3}  " + "  ".join(cells))
    if len(backends) == 2 and totals["compiled"] > 0:
        print(f"speedup (total): {totals['python'] / totals['compiled']:.1f}x")


if __name__ == "__main__":
    main()

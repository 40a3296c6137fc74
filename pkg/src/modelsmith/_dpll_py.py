"""Pure-Python SAT kernel: unit propagation over two watched literals,
first-UIP conflict clauses with non-chronological backjumping, activity
ordered decisions with saved phases, and Luby restarts.

This is the fallback for the compiled kernel in ``_dpll_ext``; both expose
``solve`` with the same arguments and results.
"""
from __future__ import annotations

import heapq
import time
from typing import Sequence

RESTART_UNIT = 64
DECAY = 1 / 0.95


def luby(i: int) -> int:
    """The ``i``-th term (from 1) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


def solve(nvars: int, flat: Sequence[int], offsets: Sequence[int], order: Sequence[int],
          phase: Sequence[int], deadline: float = 0.0) -> list[int] | None:
    """Satisfy the CNF given as ``flat[offsets[i]:offsets[i+1]]`` clauses.

    ``order`` ranks variables for the first decisions (ties in activity are
    broken by it), ``phase[v]`` is the first polarity tried (1 true, 0 false).
    Returns ``values`` with ``values[v] in (0, 1)`` for ``v >= 1``, or
    ``None`` when unsatisfiable.  Raises ``TimeoutError`` once
    ``time.monotonic()`` passes ``deadline`` (``0`` disables the check).
    """
    value = [0] * (nvars + 1)
    level = [0] * (nvars + 1)
    reason = [-1] * (nvars + 1)
    saved = [1 if phase[v] else -1 for v in range(nvars + 1)]
    act = [0.0] * (nvars + 1)
    rank = [nvars + 1] * (nvars + 1)
    for r, v in enumerate(order):
        rank[v] = r
    watches: list[list[int]] = [[] for _ in range(2 * nvars + 2)]
    clauses: list[list[int]] = []
    trail: list[int] = []
    trail_lim: list[int] = []
    units: list[int] = []

    def widx(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    for i in range(len(offsets) - 1):
        c = list(dict.fromkeys(flat[offsets[i]:offsets[i + 1]]))
        if not c:
            return None
        if any(-l in c for l in c):
            continue
        if len(c) == 1:
            units.append(c[0])
            continue
        ci = len(clauses)
        clauses.append(c)
        watches[widx(c[0])].append(ci)
        watches[widx(c[1])].append(ci)

    def lit_val(lit: int) -> int:
        v = value[lit if lit > 0 else -lit]
        return v if lit > 0 else -v

    def assign(lit: int, why: int) -> None:
        v = lit if lit > 0 else -lit
        value[v] = 1 if lit > 0 else -1
        level[v] = len(trail_lim)
        reason[v] = why
        trail.append(lit)

    for u in units:
        lv = lit_val(u)
        if lv == -1:
            return None
        if lv == 0:
            assign(u, -1)

    qhead = 0

    def propagate() -> int:
        """Returns the index of a falsified clause, or -1."""
        nonlocal qhead
        while qhead < len(trail):
            false_lit = -trail[qhead]
            qhead += 1
            ws = watches[widx(false_lit)]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                if lit_val(first) == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    if lit_val(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        watches[widx(c[1])].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if lit_val(first) == -1:
                        ws[j:] = ws[i:n]
                        return ci
                    assign(first, ci)
            del ws[j:]
        return -1

    inc = 1.0
    heap = [(0.0, rank[v], v) for v in range(1, nvars + 1)]
    heapq.heapify(heap)

    def bump(v: int) -> None:
        nonlocal inc
        act[v] += inc
        if act[v] > 1e100:
            for u in range(1, nvars + 1):
                act[u] *= 1e-100
            inc *= 1e-100
            rebuild()
        elif value[v] == 0:
            heapq.heappush(heap, (-act[v], rank[v], v))

    def rebuild() -> None:
        heap[:] = [(-act[u], rank[u], u) for u in range(1, nvars + 1) if value[u] == 0]
        heapq.heapify(heap)

    def backtrack(lvl: int) -> None:
        nonlocal qhead
        if len(trail_lim) <= lvl:
            return
        start = trail_lim[lvl]
        for lit in trail[start:]:
            v = lit if lit > 0 else -lit
            saved[v] = value[v]
            value[v] = 0
            heapq.heappush(heap, (-act[v], rank[v], v))
        del trail[start:]
        del trail_lim[lvl:]
        qhead = len(trail)
        if len(heap) > 4 * nvars + 64:
            rebuild()

    seen = [False] * (nvars + 1)

    def analyze(confl: int) -> tuple[list[int], int]:
        dl = len(trail_lim)
        learnt = [0]
        counter = 0
        p = 0
        idx = len(trail) - 1
        c = clauses[confl]
        while True:
            for q in (c if p == 0 else c[1:]):
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    bump(v)
                    if level[v] == dl:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
            c = clauses[reason[abs(p)]]
        learnt[0] = -p
        for q in learnt[1:]:
            seen[abs(q)] = False
        back = 0
        if len(learnt) > 1:
            best = 1
            for k in range(2, len(learnt)):
                if level[abs(learnt[k])] > level[abs(learnt[best])]:
                    best = k
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[abs(learnt[1])]
        return learnt, back

    if propagate() != -1:
        return None
    steps = 0
    conflicts = 0
    restart_no = 1
    budget = RESTART_UNIT * luby(restart_no)
    while True:
        confl = propagate()
        if confl != -1:
            if not trail_lim:
                return None
            conflicts += 1
            learnt, back = analyze(confl)
            inc *= DECAY
            backtrack(back)
            if len(learnt) == 1:
                assign(learnt[0], -1)
            else:
                ci = len(clauses)
                clauses.append(learnt)
                watches[widx(learnt[0])].append(ci)
                watches[widx(learnt[1])].append(ci)
                assign(learnt[0], ci)
            continue
        if conflicts >= budget:
            conflicts = 0
            restart_no += 1
            budget = RESTART_UNIT * luby(restart_no)
            backtrack(0)
        v = 0
        while heap:
            _, _, u = heapq.heappop(heap)
            if value[u] == 0:
                v = u
                break
        if v == 0:
            return [0] + [1 if value[u] == 1 else 0 for u in range(1, nvars + 1)]
        steps += 1
        if deadline and (steps & 255) == 0 and time.monotonic() > deadline:
            raise TimeoutError("SAT search exceeded its time budget")
        trail_lim.append(len(trail))
        assign(v if saved[v] > 0 else -v, -1)

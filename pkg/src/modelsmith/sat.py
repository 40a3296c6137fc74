"""CNF container and solver front end.

The compiled DPLL kernel is used when it was built; setting the environment
variable ``MODELSMITH_PURE=1`` forces the pure-Python fallback.
"""
from __future__ import annotations

import os
from typing import Iterable, Sequence

from . import _dpll_py

try:
    if os.environ.get("MODELSMITH_PURE"):
        raise ImportError("pure mode requested")
    from . import _dpll_ext as _kernel  # type: ignore[attr-defined]
    BACKEND = "compiled"
except ImportError:
    _kernel = _dpll_py
    BACKEND = "python"


def kernel(name: str | None = None):
    """The solver module: ``"python"``, ``"compiled"`` or the default."""
    if name is None:
        return _kernel
    if name == "python":
        return _dpll_py
    if name == "compiled":
        from . import _dpll_ext  # type: ignore[attr-defined]
        return _dpll_ext
    raise ValueError(f"unknown backend {name}")


class CNF:
    """Clause store with constant folding.

    Variable 1 is the constant ``TRUE``; ``-1`` is ``FALSE``.
    """

    def __init__(self) -> None:
        self.nvars = 1
        self.flat: list[int] = [1]
        self.offsets: list[int] = [0, 1]
        self.phase: list[int] = [0, 1]
        self.priority: list[int] = [0, 0]
        self.unsat = False

    TRUE = 1
    FALSE = -1

    def new_var(self, phase: int = 0, priority: int = 2) -> int:
        self.nvars += 1
        self.phase.append(phase)
        self.priority.append(priority)
        return self.nvars

    def add(self, lits: Iterable[int]) -> None:
        out: list[int] = []
        seen = set()
        for l in lits:
            if l == 1:
                return
            if l == -1:
                continue
            if -l in seen:
                return
            if l not in seen:
                seen.add(l)
                out.append(l)
        if not out:
            self.unsat = True
        self.flat.extend(out)
        self.offsets.append(len(self.flat))

    @property
    def num_clauses(self) -> int:
        return len(self.offsets) - 1

    def order(self) -> list[int]:
        return sorted(range(1, self.nvars + 1), key=lambda v: (self.priority[v], v))

    def solve(self, deadline: float = 0.0, backend: str | None = None) -> list[int] | None:
        if self.unsat:
            return None
        return kernel(backend).solve(self.nvars, self.flat, self.offsets, self.order(), self.phase,
                                     float(deadline))


def solve_clauses(nvars: int, clauses: Sequence[Sequence[int]], backend: str | None = None,
                  deadline: float = 0.0) -> list[int] | None:
    """Convenience wrapper over a list of clauses (DIMACS-style literals)."""
    flat: list[int] = []
    offsets = [0]
    for c in clauses:
        flat.extend(c)
        offsets.append(len(flat))
    order = list(range(1, nvars + 1))
    phase = [0] * (nvars + 1)
    return kernel(backend).solve(nvars, flat, offsets, order, phase, float(deadline))

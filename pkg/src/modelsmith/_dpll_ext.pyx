# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SAT kernel; same contract and search as ``_dpll_py.solve``."""
from libcpp.vector cimport vector
import time

cdef long RESTART_UNIT = 64
cdef double DECAY = 1.0 / 0.95


cdef inline int widx(int lit) nogil:
    return 2 * lit if lit > 0 else -2 * lit + 1


cdef inline int absl(int lit) nogil:
    return lit if lit > 0 else -lit


cdef inline int lit_val(const signed char* value, int lit) nogil:
    cdef int v = value[absl(lit)]
    return v if lit > 0 else -v


cdef long luby(long i) nogil:
    cdef long k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


cdef class _Heap:
    """Max-heap of variables by activity, ties to the lower rank."""
    cdef vector[int] h
    cdef vector[int] pos
    cdef double* act
    cdef int* rank

    cdef inline bint less(self, int a, int b) nogil:
        if self.act[a] != self.act[b]:
            return self.act[a] > self.act[b]
        return self.rank[a] < self.rank[b]

    cdef void up(self, int i) nogil:
        cdef int v = self.h[i]
        cdef int p
        while i > 0:
            p = (i - 1) >> 1
            if not self.less(v, self.h[p]):
                break
            self.h[i] = self.h[p]
            self.pos[self.h[i]] = i
            i = p
        self.h[i] = v
        self.pos[v] = i

    cdef void down(self, int i) nogil:
        cdef int v = self.h[i]
        cdef int n = <int>self.h.size()
        cdef int c
        while 2 * i + 1 < n:
            c = 2 * i + 1
            if c + 1 < n and self.less(self.h[c + 1], self.h[c]):
                c += 1
            if not self.less(self.h[c], v):
                break
            self.h[i] = self.h[c]
            self.pos[self.h[i]] = i
            i = c
        self.h[i] = v
        self.pos[v] = i

    cdef void insert(self, int v) nogil:
        if self.pos[v] >= 0:
            return
        self.h.push_back(v)
        self.up(<int>self.h.size() - 1)

    cdef int pop(self) nogil:
        cdef int v = self.h[0]
        cdef int last = self.h.back()
        self.h.pop_back()
        self.pos[v] = -1
        if self.h.size():
            self.h[0] = last
            self.pos[last] = 0
            self.down(0)
        return v


def solve(int nvars, flat, offsets, order, phase, double deadline=0.0):
    cdef vector[int] lits
    cdef vector[int] start
    cdef vector[int] csize
    cdef vector[vector[int]] watches
    cdef vector[signed char] value
    cdef vector[signed char] saved
    cdef vector[int] level
    cdef vector[int] reason
    cdef vector[double] act
    cdef vector[int] rank
    cdef vector[char] seen
    cdef vector[int] trail
    cdef vector[int] trail_lim
    cdef vector[int] units
    cdef vector[int] learnt
    cdef vector[int] buf
    cdef int i, j, k, n, ci, false_lit, first, s, e, v, lit, qhead, tmp, dl, counter, p, idx
    cdef int confl, best, back, cs, lo
    cdef long steps = 0, conflicts = 0, restart_no = 1, budget
    cdef double inc = 1.0
    cdef bint found, taut

    value.resize(nvars + 1, 0)
    saved.resize(nvars + 1, -1)
    level.resize(nvars + 1, 0)
    reason.resize(nvars + 1, -1)
    act.resize(nvars + 1, 0.0)
    rank.resize(nvars + 1, nvars + 1)
    seen.resize(nvars + 1, 0)
    watches.resize(2 * nvars + 2)
    i = 0
    for v in order:
        rank[v] = i
        i += 1
    for v in range(1, nvars + 1):
        # explicit branch: a conditional expression here is mistyped by Cython
        if phase[v]:
            saved[v] = 1

    noff = len(offsets)
    for i in range(noff - 1):
        s = offsets[i]
        e = offsets[i + 1]
        if e == s:
            return None
        buf.clear()
        taut = False
        for k in range(s, e):
            lit = flat[k]
            found = False
            for j in range(<int>buf.size()):
                if buf[j] == lit:
                    found = True
                elif buf[j] == -lit:
                    taut = True
            if not found:
                buf.push_back(lit)
        if taut:
            continue
        if buf.size() == 1:
            units.push_back(buf[0])
            continue
        ci = <int>start.size()
        start.push_back(<int>lits.size())
        csize.push_back(<int>buf.size())
        for k in range(<int>buf.size()):
            lits.push_back(buf[k])
        watches[widx(buf[0])].push_back(ci)
        watches[widx(buf[1])].push_back(ci)

    cdef signed char* val = value.data()

    for i in range(<int>units.size()):
        lit = units[i]
        k = lit_val(val, lit)
        if k == -1:
            return None
        if k == 0:
            val[absl(lit)] = 1 if lit > 0 else -1
            trail.push_back(lit)

    cdef _Heap heap = _Heap()
    heap.act = act.data()
    heap.rank = rank.data()
    heap.pos.resize(nvars + 1, -1)
    for v in range(1, nvars + 1):
        heap.insert(v)

    cdef int* L
    qhead = 0
    budget = RESTART_UNIT * luby(restart_no)
    while True:
        # unit propagation; learnt clauses may reallocate ``lits`` so reload L
        L = lits.data()
        confl = -1
        while qhead < <int>trail.size() and confl < 0:
            false_lit = -trail[qhead]
            qhead += 1
            i = 0
            j = 0
            n = <int>watches[widx(false_lit)].size()
            while i < n:
                ci = watches[widx(false_lit)][i]
                i += 1
                s = start[ci]
                if L[s] == false_lit:
                    L[s] = L[s + 1]
                    L[s + 1] = false_lit
                first = L[s]
                if lit_val(val, first) == 1:
                    watches[widx(false_lit)][j] = ci
                    j += 1
                    continue
                found = False
                for k in range(s + 2, s + csize[ci]):
                    if lit_val(val, L[k]) != -1:
                        tmp = L[s + 1]
                        L[s + 1] = L[k]
                        L[k] = tmp
                        watches[widx(L[s + 1])].push_back(ci)
                        found = True
                        break
                if found:
                    continue
                watches[widx(false_lit)][j] = ci
                j += 1
                if lit_val(val, first) == -1:
                    while i < n:
                        watches[widx(false_lit)][j] = watches[widx(false_lit)][i]
                        j += 1
                        i += 1
                    confl = ci
                    break
                val[absl(first)] = 1 if first > 0 else -1
                level[absl(first)] = <int>trail_lim.size()
                reason[absl(first)] = ci
                trail.push_back(first)
            watches[widx(false_lit)].resize(j)

        if confl >= 0:
            if trail_lim.size() == 0:
                return None
            conflicts += 1
            # first-UIP analysis
            dl = <int>trail_lim.size()
            learnt.clear()
            learnt.push_back(0)
            counter = 0
            p = 0
            idx = <int>trail.size() - 1
            ci = confl
            while True:
                s = start[ci]
                cs = csize[ci]
                lo = s if p == 0 else s + 1
                for k in range(lo, s + cs):
                    lit = L[k]
                    v = absl(lit)
                    if not seen[v] and level[v] > 0:
                        seen[v] = 1
                        act[v] += inc
                        if act[v] > 1e100:
                            for tmp in range(1, nvars + 1):
                                act[tmp] *= 1e-100
                            inc *= 1e-100
                        if heap.pos[v] >= 0:
                            heap.up(heap.pos[v])
                        if level[v] == dl:
                            counter += 1
                        else:
                            learnt.push_back(lit)
                while not seen[absl(trail[idx])]:
                    idx -= 1
                p = trail[idx]
                idx -= 1
                seen[absl(p)] = 0
                counter -= 1
                if counter == 0:
                    break
                ci = reason[absl(p)]
            learnt[0] = -p
            for k in range(1, <int>learnt.size()):
                seen[absl(learnt[k])] = 0
            back = 0
            if learnt.size() > 1:
                best = 1
                for k in range(2, <int>learnt.size()):
                    if level[absl(learnt[k])] > level[absl(learnt[best])]:
                        best = k
                tmp = learnt[1]
                learnt[1] = learnt[best]
                learnt[best] = tmp
                back = level[absl(learnt[1])]
            inc *= DECAY
            # backjump
            if <int>trail_lim.size() > back:
                s = trail_lim[back]
                for k in range(s, <int>trail.size()):
                    v = absl(trail[k])
                    saved[v] = val[v]
                    val[v] = 0
                    heap.insert(v)
                trail.resize(s)
                trail_lim.resize(back)
                qhead = s
            lit = learnt[0]
            if learnt.size() == 1:
                reason[absl(lit)] = -1
            else:
                ci = <int>start.size()
                start.push_back(<int>lits.size())
                csize.push_back(<int>learnt.size())
                for k in range(<int>learnt.size()):
                    lits.push_back(learnt[k])
                watches[widx(learnt[0])].push_back(ci)
                watches[widx(learnt[1])].push_back(ci)
                reason[absl(lit)] = ci
            val[absl(lit)] = 1 if lit > 0 else -1
            level[absl(lit)] = <int>trail_lim.size()
            trail.push_back(lit)
            continue

        if conflicts >= budget:
            conflicts = 0
            restart_no += 1
            budget = RESTART_UNIT * luby(restart_no)
            if trail_lim.size():
                s = trail_lim[0]
                for k in range(s, <int>trail.size()):
                    v = absl(trail[k])
                    saved[v] = val[v]
                    val[v] = 0
                    heap.insert(v)
                trail.resize(s)
                trail_lim.clear()
                qhead = s
        v = 0
        while heap.h.size():
            tmp = heap.pop()
            if val[tmp] == 0:
                v = tmp
                break
        if v == 0:
            out = [0] * (nvars + 1)
            for v in range(1, nvars + 1):
                out[v] = 1 if val[v] == 1 else 0
            return out
        steps += 1
        if deadline > 0 and (steps & 1023) == 0 and time.monotonic() > deadline:
            raise TimeoutError("SAT search exceeded its time budget")
        trail_lim.push_back(<int>trail.size())
        val[v] = saved[v]
        level[v] = <int>trail_lim.size()
        reason[v] = -1
        trail.push_back(v if saved[v] > 0 else -v)

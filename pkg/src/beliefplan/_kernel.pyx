# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled DPLL counting/search kernel.

Mirrors the pure-Python engine in solver.py exactly: counter-based DPLL with
unit propagation, normalized per-variable weights (so a fully satisfied
residual contributes the product of weights accumulated on the path), and
branching on the variable with most occurrences in the shortest active
clauses (ties toward the lowest index).
"""

from libc.stdlib cimport malloc, free
from libc.math cimport ldexp

KERNEL_AVAILABLE = True


cdef struct Engine:
    int n              # number of variables (1-based)
    int m              # number of clauses
    int* lits          # flattened clause literals
    int* start         # clause c spans lits[start[c] : start[c+1]]
    int* sat_count
    int* free_count
    signed char* assign   # 0 unassigned, 1 true, -1 false
    int* occ_start     # CSR occurrence index per variable
    int* occ_clause
    signed char* occ_sign
    double* pos
    double* neg
    int unsat_clauses
    bint conflict
    int* trail
    int trail_len
    int* uq            # circular queue of unit-candidate clauses
    signed char* in_uq
    int uq_cap
    int uq_head
    int uq_tail
    # Guard bookkeeping: a guard clause (v, -v) only forces a variable whose
    # raw weights do not sum to 1 to be counted on both branches.  Counting
    # resolves guards analytically instead of branching on them.
    signed char* is_guard
    signed char* guarded   # variable has a guard clause
    double* wsum           # pos[v] + neg[v]
    int* guard_vars        # indices of guarded variables
    int n_guard
    int* last_real         # last non-guard clause containing v, -1 if none


cdef inline void _uq_push(Engine* e, int ci):
    if not e.in_uq[ci]:
        e.in_uq[ci] = 1
        e.uq[e.uq_tail] = ci
        e.uq_tail += 1
        if e.uq_tail == e.uq_cap:
            e.uq_tail = 0


cdef void _set_var(Engine* e, int var, int value):
    cdef int k, ci
    e.assign[var] = <signed char>value
    e.trail[e.trail_len] = var
    e.trail_len += 1
    for k in range(e.occ_start[var], e.occ_start[var + 1]):
        ci = e.occ_clause[k]
        e.free_count[ci] -= 1
        if e.occ_sign[k] == value:
            e.sat_count[ci] += 1
            if e.sat_count[ci] == 1:
                e.unsat_clauses -= 1
        elif e.sat_count[ci] == 0:
            if e.free_count[ci] == 0:
                e.conflict = True
            elif e.free_count[ci] == 1:
                _uq_push(e, ci)


cdef void _undo_to(Engine* e, int mark):
    cdef int var, k, ci
    cdef signed char value
    while e.trail_len > mark:
        e.trail_len -= 1
        var = e.trail[e.trail_len]
        value = e.assign[var]
        e.assign[var] = 0
        for k in range(e.occ_start[var], e.occ_start[var + 1]):
            ci = e.occ_clause[k]
            e.free_count[ci] += 1
            if e.occ_sign[k] == value:
                if e.sat_count[ci] == 1:
                    e.unsat_clauses += 1
                e.sat_count[ci] -= 1
            if e.sat_count[ci] == 0 and e.free_count[ci] == 1:
                _uq_push(e, ci)  # became an active unit again
    e.conflict = False


cdef double _propagate(Engine* e):
    """Drain the unit-candidate queue (stale entries are re-checked and
    skipped).  Returns the weight product of forced literals, or -1.0 on
    conflict (remaining entries stay queued; they are harmless)."""
    cdef double w = 1.0
    cdef int ci, k, v, value
    if e.conflict:
        return -1.0
    while e.uq_head != e.uq_tail:
        ci = e.uq[e.uq_head]
        e.uq_head += 1
        if e.uq_head == e.uq_cap:
            e.uq_head = 0
        e.in_uq[ci] = 0
        if e.sat_count[ci] > 0 or e.free_count[ci] != 1:
            continue
        for k in range(e.start[ci], e.start[ci + 1]):
            v = e.lits[k]
            value = 1 if v > 0 else -1
            if v < 0:
                v = -v
            if e.assign[v] == 0:
                _set_var(e, v, value)
                w *= e.pos[v] if value == 1 else e.neg[v]
                break
        if e.conflict:
            return -1.0
    return w


cdef double _free_guard_product(Engine* e, int below_clause, int* twos):
    """Product of pos+neg over unassigned guarded variables whose last
    non-guard clause lies before ``below_clause`` (all clauses when it is
    e.m).  Exact powers of two accumulate in ``twos`` to dodge overflow."""
    cdef double g = 1.0
    cdef int i, v
    twos[0] = 0
    for i in range(e.n_guard):
        v = e.guard_vars[i]
        if e.assign[v] == 0 and e.last_real[v] < below_clause:
            if e.wsum[v] == 2.0:
                twos[0] += 1
            else:
                g *= e.wsum[v]
    return g


cdef double _count_rec(Engine* e, int from_clause, dict cache):
    # Branches on a free variable of the first active non-guard clause.
    # Clauses satisfied at an ancestor stay satisfied along the descent, so
    # the cursor passes down the recursion and each root-to-leaf path scans
    # the clause list at most once overall.  On layered formulas the first
    # active clause sits at the earliest unresolved time step, so each
    # decision propagates forward through the rest of its layer.
    #
    # Residual caching: once every non-guard clause before the cursor is
    # satisfied, the remaining count is a function of the cursor and the
    # assignment restricted to variables still occurring at or after it,
    # times the analytic product over "retired" free guarded variables
    # (those whose real clauses all lie behind the cursor; they are never
    # touched again below this node).  Caching that function collapses the
    # exponential enumeration of layered chain formulas to one entry per
    # (cursor, boundary state).
    cdef int mark = e.trail_len
    cdef double w, total, wv, g
    cdef int v, v2, value, sub_mark, side, ci, k, twos
    cdef list live
    cdef object key, hit
    if e.conflict:
        return 0.0
    w = _propagate(e)
    if w < 0.0:
        _undo_to(e, mark)
        return 0.0
    ci = from_clause
    while ci < e.m and (e.sat_count[ci] > 0 or e.is_guard[ci]):
        ci += 1
    if ci == e.m:
        # All real clauses satisfied; free guarded variables contribute
        # their weight sums, every other free variable contributes 1.
        g = _free_guard_product(e, e.m, &twos)
        _undo_to(e, mark)
        return ldexp(w * g, twos)
    v = 0
    for k in range(e.start[ci], e.start[ci + 1]):
        v = e.lits[k]
        if v < 0:
            v = -v
        if e.assign[v] == 0:
            break
        v = 0
    if v == 0:  # active clause with no free variable: conflict bookkeeping
        _undo_to(e, mark)
        return 0.0
    g = _free_guard_product(e, ci, &twos)
    if g == 0.0:
        _undo_to(e, mark)
        return 0.0
    live = []
    for k in range(e.trail_len):
        v2 = e.trail[k]
        if e.last_real[v2] >= ci:
            live.append((v2, e.assign[v2]))
    live.sort()
    key = (ci, tuple(live))
    hit = cache.get(key)
    if hit is not None:
        _undo_to(e, mark)
        return ldexp(w * g * <double>hit, twos)
    total = 0.0
    for side in range(2):
        value = 1 if side == 0 else -1
        wv = e.pos[v] if side == 0 else e.neg[v]
        if wv == 0.0:
            continue
        sub_mark = e.trail_len
        _set_var(e, v, value)
        if not e.conflict:
            total += wv * _count_rec(e, ci, cache)
        _undo_to(e, sub_mark)
    if len(cache) < (1 << 22):
        cache[key] = ldexp(total / g, -twos)
    _undo_to(e, mark)
    return w * total


cdef bint _model_rec(Engine* e, int from_clause, dict fail):
    # Branches on a free variable of the first active non-guard clause (the
    # same cursor discipline as counting); variables in no active clause are
    # left free and reported true by the caller.  Unsatisfiable residuals are
    # memoized by (cursor, live assignment) -- satisfiability of the suffix
    # is fully determined by the assignment of variables still occurring at
    # or after the cursor, so a failed key never needs re-exploration.
    cdef int mark = e.trail_len
    cdef int v, v2, value, sub_mark, side, ci, k
    cdef list live
    cdef object key
    if e.conflict:
        return False
    if _propagate(e) < 0.0:
        _undo_to(e, mark)
        return False
    ci = from_clause
    while ci < e.m and (e.sat_count[ci] > 0 or e.is_guard[ci]):
        ci += 1
    if ci == e.m:
        return True  # keep the trail: caller reads the assignment
    v = 0
    for k in range(e.start[ci], e.start[ci + 1]):
        v = e.lits[k]
        if v < 0:
            v = -v
        if e.assign[v] == 0:
            break
        v = 0
    if v == 0:  # active clause with no free variable: conflict bookkeeping
        _undo_to(e, mark)
        return False
    live = []
    for k in range(e.trail_len):
        v2 = e.trail[k]
        if e.last_real[v2] >= ci:
            live.append((v2, e.assign[v2]))
    live.sort()
    key = (ci, tuple(live))
    if key in fail:
        _undo_to(e, mark)
        return False
    for side in range(2):
        value = 1 if side == 0 else -1
        sub_mark = e.trail_len
        _set_var(e, v, value)
        if not e.conflict:
            if _model_rec(e, ci, fail):
                return True
        _undo_to(e, sub_mark)
    if len(fail) < (1 << 22):
        fail[key] = True
    _undo_to(e, mark)
    return False


cdef Engine* _build(int n, list lits, list start, list pos, list neg) except NULL:
    cdef Engine* e = <Engine*>malloc(sizeof(Engine))
    cdef int total = len(lits)
    cdef int m = len(start) - 1
    cdef int i, ci, k, v
    e.n = n
    e.m = m
    e.lits = <int*>malloc(total * sizeof(int))
    e.start = <int*>malloc((m + 1) * sizeof(int))
    e.sat_count = <int*>malloc(m * sizeof(int))
    e.free_count = <int*>malloc(m * sizeof(int))
    e.assign = <signed char*>malloc((n + 1) * sizeof(signed char))
    e.occ_start = <int*>malloc((n + 2) * sizeof(int))
    e.occ_clause = <int*>malloc(total * sizeof(int))
    e.occ_sign = <signed char*>malloc(total * sizeof(signed char))
    e.pos = <double*>malloc((n + 1) * sizeof(double))
    e.neg = <double*>malloc((n + 1) * sizeof(double))
    e.trail = <int*>malloc((n + 1) * sizeof(int))
    e.is_guard = <signed char*>malloc((m + 1) * sizeof(signed char))
    e.guarded = <signed char*>malloc((n + 1) * sizeof(signed char))
    e.wsum = <double*>malloc((n + 1) * sizeof(double))
    e.guard_vars = <int*>malloc((n + 1) * sizeof(int))
    e.last_real = <int*>malloc((n + 1) * sizeof(int))
    e.n_guard = 0
    e.uq = <int*>malloc((m + 1) * sizeof(int))
    e.in_uq = <signed char*>malloc((m + 1) * sizeof(signed char))
    e.uq_cap = m + 1
    e.uq_head = 0
    e.uq_tail = 0
    for i in range(m):
        e.in_uq[i] = 0
    for i in range(total):
        e.lits[i] = <int>lits[i]
    for i in range(m + 1):
        e.start[i] = <int>start[i]
    for i in range(n + 1):
        e.assign[i] = 0
        e.pos[i] = <double>pos[i] if pos is not None else 0.0
        e.neg[i] = <double>neg[i] if neg is not None else 0.0
        e.wsum[i] = e.pos[i] + e.neg[i]
        e.guarded[i] = 0
        e.last_real[i] = -1
    e.trail_len = 0
    e.conflict = False
    e.unsat_clauses = 0
    # occurrence CSR
    for i in range(n + 2):
        e.occ_start[i] = 0
    for i in range(total):
        v = e.lits[i]
        if v < 0:
            v = -v
        e.occ_start[v + 1] += 1
    for i in range(1, n + 2):
        e.occ_start[i] += e.occ_start[i - 1]
    cdef int* fill = <int*>malloc((n + 1) * sizeof(int))
    for i in range(n + 1):
        fill[i] = e.occ_start[i]
    for ci in range(m):
        e.sat_count[ci] = 0
        e.free_count[ci] = e.start[ci + 1] - e.start[ci]
        e.is_guard[ci] = (
            e.free_count[ci] == 2
            and e.lits[e.start[ci]] == -e.lits[e.start[ci] + 1])
        if e.is_guard[ci]:
            v = e.lits[e.start[ci]]
            if v < 0:
                v = -v
            if not e.guarded[v]:
                e.guarded[v] = 1
                e.guard_vars[e.n_guard] = v
                e.n_guard += 1
        if e.free_count[ci] == 0:
            e.conflict = True
        else:
            e.unsat_clauses += 1
            if e.free_count[ci] == 1:
                _uq_push(e, ci)
        for k in range(e.start[ci], e.start[ci + 1]):
            v = e.lits[k]
            if v < 0:
                e.occ_clause[fill[-v]] = ci
                e.occ_sign[fill[-v]] = -1
                fill[-v] += 1
                if not e.is_guard[ci]:
                    e.last_real[-v] = ci
            else:
                e.occ_clause[fill[v]] = ci
                e.occ_sign[fill[v]] = 1
                fill[v] += 1
                if not e.is_guard[ci]:
                    e.last_real[v] = ci
    free(fill)
    return e


cdef void _free(Engine* e):
    free(e.lits); free(e.start); free(e.sat_count); free(e.free_count)
    free(e.assign); free(e.occ_start); free(e.occ_clause); free(e.occ_sign)
    free(e.pos); free(e.neg); free(e.trail)
    free(e.is_guard); free(e.guarded); free(e.wsum); free(e.guard_vars)
    free(e.last_real); free(e.uq); free(e.in_uq)
    free(e)


cdef class Problem:
    """A persistent engine over a fixed clause set, queried repeatedly under
    assumption literals.  Counting uses the raw per-variable weights; callers
    must bake in a guard clause (v, -v) for every variable whose weights do
    not sum to 1 so that free variables correctly contribute 1."""

    cdef Engine* e
    cdef bint base_conflict
    cdef dict cache  # residual counts, shared across queries on this formula
    cdef dict model_fail  # residuals proven unsatisfiable by the model search

    def __cinit__(self, int n, list lits, list start, list pos, list neg):
        self.e = _build(n, lits, start, pos, neg)
        self.base_conflict = self.e.conflict
        self.cache = {}
        self.model_fail = {}

    def __dealloc__(self):
        if self.e != NULL:
            _free(self.e)

    cdef double _assume(self, list units) except -2.0:
        """Apply assumption literals; returns their weight product (each
        distinct literal counted once), or -1.0 on immediate conflict."""
        cdef Engine* e = self.e
        cdef double w = 1.0
        cdef int lit, v, value
        for lit in units:
            v = lit if lit > 0 else -lit
            value = 1 if lit > 0 else -1
            if e.assign[v] == value:
                continue  # duplicate assumption
            if e.assign[v] != 0:
                return -1.0
            _set_var(e, v, value)
            w *= e.pos[v] if value == 1 else e.neg[v]
            if e.conflict:
                return -1.0
        return w

    def count(self, list units):
        """Weighted count of the formula conjoined with the unit literals."""
        cdef Engine* e = self.e
        cdef double w
        if self.base_conflict:
            return 0.0
        try:
            w = self._assume(units)
            if w < 0.0:
                return 0.0
            return w * _count_rec(e, 0, self.cache)
        finally:
            _undo_to(e, 0)

    def model(self, list units):
        """Satisfying total assignment under the unit literals as a list of
        true variable indices (free variables reported true), or None."""
        cdef Engine* e = self.e
        cdef int v
        if self.base_conflict:
            return None
        try:
            if self._assume(units) < 0.0:
                return None
            if not _model_rec(e, 0, self.model_fail):
                return None
            return [v for v in range(1, e.n + 1) if e.assign[v] >= 0]
        finally:
            _undo_to(e, 0)


def count(int n, list lits, list start, list pos, list neg):
    """Weighted model count with normalized weights (pos[v] + neg[v] == 1)."""
    cdef Engine* e = _build(n, lits, start, pos, neg)
    try:
        if e.conflict:
            return 0.0
        return _count_rec(e, 0, {})
    finally:
        _free(e)


def model(int n, list lits, list start):
    """First satisfying total assignment as a list of true variable indices,
    or None.  Variables left free by the search are reported true."""
    cdef Engine* e = _build(n, lits, start, None, None)
    cdef int v
    try:
        if e.conflict:
            return None
        if not _model_rec(e, 0, {}):
            return None
        return [v for v in range(1, n + 1) if e.assign[v] >= 0]
    finally:
        _free(e)

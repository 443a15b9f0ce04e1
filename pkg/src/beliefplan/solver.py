"""DPLL satisfiability and exact weighted model counting.

The count of a formula is sum over satisfying total assignments of the product
of per-literal weights.  Internally weights are normalized per variable
(w_pos + w_neg = 1 after scaling) so that a fully satisfied residual formula
contributes exactly the product of the weights accumulated on the path; the
global scale factor is re-applied at the end.

Two engines implement the same counting recursion: a compiled kernel
(`beliefplan._kernel`, built from Cython) and a pure-Python fallback.  The
compiled kernel is used automatically when the extension imported cleanly.
An optional connected-component decomposition (`components=True`) splits the
residual formula into variable-disjoint parts and multiplies their counts; it
is off by default.
"""

from __future__ import annotations

import itertools
import math
import sys

from .wcnf import WeightedCNF, _as_clause

# Largest binary exponent of the global weight scale for which the
# normalized counting path is used; beyond it the raw-weight path applies.
NORMALIZED_SCALE_LIMIT = 900

# The counting recursion can reach one frame per branching variable.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))

try:  # pragma: no cover - exercised indirectly through the dispatch tests
    from . import _kernel

    KERNEL_AVAILABLE = getattr(_kernel, "KERNEL_AVAILABLE", False)
except ImportError:  # pragma: no cover
    _kernel = None
    KERNEL_AVAILABLE = False


# ---------------------------------------------------------------------------
# Problem preparation
# ---------------------------------------------------------------------------


def _flatten(clauses):
    lits = list(itertools.chain.from_iterable(clauses))
    start = [0]
    start.extend(itertools.accumulate(map(len, clauses)))
    return lits, start


def _base(cnf: WeightedCNF):
    """Per-formula preprocessing, cached on the formula object (clauses are
    append-only and weights immutable, so the cache key is just the sizes):
    flattened clause arrays, raw and per-variable-normalized weight arrays,
    the weight scale as mantissa/exponent, and the guard-variable list."""
    cache = getattr(cnf, "_solver_cache", None)
    key = (len(cnf.clauses), len(cnf.variables))
    if cache is not None and cache["key"] == key:
        return cache
    lits, start = _flatten(cnf.clauses)
    n = len(cnf.variables)
    pos = [0.0] * (n + 1)
    neg = [0.0] * (n + 1)
    npos = [0.0] * (n + 1)
    nneg = [0.0] * (n + 1)
    scale_m, scale_e = 1.0, 0
    guards = []
    for v in cnf.variables:
        pos[v.index] = v.w_pos
        neg[v.index] = v.w_neg
        s = v.w_pos + v.w_neg
        scale_m, e = math.frexp(scale_m * s)
        scale_e += e
        if s > 0.0:
            npos[v.index] = v.w_pos / s
            nneg[v.index] = v.w_neg / s
        if s != 1.0:
            guards.append(v.index)
    cache = {
        "key": key, "lits": lits, "start": start,
        "pos": pos, "neg": neg, "npos": npos, "nneg": nneg,
        "scale_m": scale_m, "scale_e": scale_e, "guards": guards,
    }
    cnf._solver_cache = cache
    return cache


def _with_extra(cache, extra_clauses):
    """Temporarily extend the cached flat arrays; restore in the caller."""
    lits, start = cache["lits"], cache["start"]
    for cl in extra_clauses:
        lits.extend(cl)
        start.append(len(lits))
    return lits, start


def _problem(cache, n):
    """Persistent kernel engine for the formula, built once and queried under
    assumption literals.  It counts with raw weights, so the guard clauses are
    baked in (making the free-variable contribution of 1 exact) and no scale
    factor applies."""
    pr = cache.get("problem")
    if pr is None:
        lits, start = cache["lits"], cache["start"]
        nl, ns = len(lits), len(start)
        try:
            _with_extra(cache, [(v, -v) for v in cache["guards"]])
            pr = _kernel.Problem(n, lits, start, cache["pos"], cache["neg"])
        finally:
            del lits[nl:]
            del start[ns:]
        cache["problem"] = pr
    return pr


# ---------------------------------------------------------------------------
# Pure-Python engine
# ---------------------------------------------------------------------------


class _PureEngine:
    """Counter-based DPLL over a fixed clause set.

    assign[v]: 0 unassigned, 1 true, -1 false.
    For each clause: number of satisfying assigned literals and number of
    unassigned literals; a clause with zero of both is a conflict.
    """

    def __init__(self, n, clauses, pos, neg):
        self.n = n
        self.pos = pos
        self.neg = neg
        self.clauses = [tuple(c) for c in clauses]
        self.assign = [0] * (n + 1)
        self.sat_count = [0] * len(self.clauses)
        self.free_count = [len(c) for c in self.clauses]
        self.occ = [[] for _ in range(n + 1)]  # var -> [(clause index, sign)]
        for ci, c in enumerate(self.clauses):
            for lit in c:
                self.occ[abs(lit)].append((ci, 1 if lit > 0 else -1))
        self.unsat_clauses = sum(1 for c in self.clauses if c)
        self.conflict = any(not c for c in self.clauses)

    def _set(self, var, value, trail):
        self.assign[var] = value
        trail.append(var)
        for ci, sign in self.occ[var]:
            self.free_count[ci] -= 1
            if sign == value:
                self.sat_count[ci] += 1
                if self.sat_count[ci] == 1:
                    self.unsat_clauses -= 1
            elif self.sat_count[ci] == 0 and self.free_count[ci] == 0:
                self.conflict = True

    def _undo(self, trail, mark):
        while len(trail) > mark:
            var = trail.pop()
            value = self.assign[var]
            self.assign[var] = 0
            for ci, sign in self.occ[var]:
                self.free_count[ci] += 1
                if sign == value:
                    if self.sat_count[ci] == 1:
                        self.unsat_clauses += 1
                    self.sat_count[ci] -= 1
        self.conflict = False

    def _propagate(self, trail):
        """Assign all unit literals; returns the weight product of the forced
        literals, or None on conflict."""
        w = 1.0
        changed = True
        while changed:
            if self.conflict:
                return None
            changed = False
            for ci, c in enumerate(self.clauses):
                if self.sat_count[ci] > 0 or self.free_count[ci] != 1:
                    continue
                for lit in c:
                    v = abs(lit)
                    if self.assign[v] == 0:
                        value = 1 if lit > 0 else -1
                        self._set(v, value, trail)
                        w *= self.pos[v] if value == 1 else self.neg[v]
                        changed = True
                        break
                if self.conflict:
                    return None
        return w

    def _pick_branch_var(self):
        best_len = None
        counts: dict[int, int] = {}
        for ci, c in enumerate(self.clauses):
            if self.sat_count[ci] > 0:
                continue
            ln = self.free_count[ci]
            if best_len is None or ln < best_len:
                best_len = ln
                counts = {}
            if ln == best_len:
                for lit in c:
                    v = abs(lit)
                    if self.assign[v] == 0:
                        counts[v] = counts.get(v, 0) + 1
        # Most occurrences in the shortest active clauses; ties break toward
        # the lowest variable index for determinism.
        return min(counts, key=lambda v: (-counts[v], v))

    def count(self) -> float:
        if self.conflict:
            return 0.0
        trail: list[int] = []
        mark = len(trail)
        w = self._propagate(trail)
        if w is None:
            self._undo(trail, mark)
            return 0.0
        if self.unsat_clauses == 0:
            self._undo(trail, mark)
            return w
        v = self._pick_branch_var()
        total = 0.0
        for value, wv in ((1, self.pos[v]), (-1, self.neg[v])):
            if wv == 0.0:
                continue
            sub_mark = len(trail)
            self._set(v, value, trail)
            if not self.conflict:
                total += wv * self.count()
            self._undo(trail, sub_mark)
        self._undo(trail, mark)
        return w * total

    def model(self):
        """First satisfying total assignment as a set of true variable
        indices, or None."""
        if self.conflict:
            return None
        trail: list[int] = []
        mark = len(trail)
        if self._propagate(trail) is None:
            self._undo(trail, mark)
            return None
        if self.unsat_clauses == 0:
            result = {v for v in range(1, self.n + 1) if self.assign[v] == 1}
            result |= {v for v in range(1, self.n + 1) if self.assign[v] == 0}
            self._undo(trail, mark)
            return result
        v = self._pick_branch_var()
        for value in (1, -1):
            sub_mark = len(trail)
            self._set(v, value, trail)
            if not self.conflict:
                m = self.model()
                if m is not None:
                    self._undo(trail, sub_mark)
                    self._undo(trail, mark)
                    return m
            self._undo(trail, sub_mark)
        self._undo(trail, mark)
        return None


# ---------------------------------------------------------------------------
# Component-splitting reference engine (optional, off by default)
# ---------------------------------------------------------------------------


def _count_components(clauses, pos, neg, assumed=()):
    clauses = [c for c in clauses]
    # Simplify under assumed literals first.
    assumed = set(assumed)
    while True:
        simplified = []
        for c in clauses:
            if any(l in assumed for l in c):
                continue
            cc = tuple(l for l in c if -l not in assumed)
            if not cc:
                return 0.0
            simplified.append(cc)
        clauses = simplified
        units = {c[0] for c in clauses if len(c) == 1}
        if not units:
            break
        if any(-u in units for u in units):
            return 0.0
        assumed |= units
    w = 1.0
    for lit in assumed:
        w *= pos[abs(lit)] if lit > 0 else neg[abs(lit)]
    if not clauses:
        return w
    # Union-find over variables sharing a clause.
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in clauses:
        r = find(abs(c[0]))
        for lit in c[1:]:
            parent[find(abs(lit))] = r
    groups: dict[int, list] = {}
    for c in clauses:
        groups.setdefault(find(abs(c[0])), []).append(c)
    for group in groups.values():
        variables = sorted({abs(l) for c in group for l in c})
        v = variables[0]
        # The recursive calls account for the weight of the assumed literal.
        w *= _count_components(group, pos, neg, {v}) + _count_components(group, pos, neg, {-v})
        if w == 0.0:
            return 0.0
    return w


# ---------------------------------------------------------------------------
# Public interface
# ---------------------------------------------------------------------------


def wmc(cnf: WeightedCNF, extra=(), components: bool = False, force_pure: bool = False) -> float:
    """Exact weighted model count of cnf conjoined with the extra literals or
    clauses."""
    c = _base(cnf)
    if c["scale_m"] == 0.0:
        return 0.0
    n = len(cnf.variables)
    extra_clauses = [_as_clause(cnf, item) for item in extra]
    if (KERNEL_AVAILABLE and not components and not force_pure
            and all(len(cl) == 1 for cl in extra_clauses)):
        return _problem(c, n).count([cl[0] for cl in extra_clauses])
    if abs(c["scale_e"]) <= NORMALIZED_SCALE_LIMIT:
        # Normalized weights: free variables contribute 1 and the scale is
        # re-applied afterwards; the count stays well inside float range as
        # long as the scale does.
        pos, neg = c["npos"], c["nneg"]
        scale_back = math.ldexp(c["scale_m"], c["scale_e"])
    else:
        # On large formulas the scale (and with it the normalized count)
        # leaves float range.  Count raw weights instead; a guard clause per
        # variable whose weights do not sum to 1 forces the variable to be
        # assigned at every satisfied leaf, so the engines' free-variable
        # contribution of 1 stays exact.
        pos, neg = c["pos"], c["neg"]
        scale_back = 1.0
        extra_clauses += [(v, -v) for v in c["guards"]]
    if components:
        clauses = [tuple(x) for x in cnf.clauses] + [tuple(x) for x in extra_clauses]
        return scale_back * _count_components(clauses, pos, neg)
    if KERNEL_AVAILABLE and not force_pure:
        lits, start = c["lits"], c["start"]
        nl, ns = len(lits), len(start)
        try:
            _with_extra(c, extra_clauses)
            count = _kernel.count(n, lits, start, pos, neg)
        finally:
            del lits[nl:]
            del start[ns:]
        return scale_back * count
    clauses = list(cnf.clauses) + extra_clauses
    return scale_back * _PureEngine(n, clauses, pos, neg).count()


def sat(cnf: WeightedCNF, extra=(), force_pure: bool = False):
    """A satisfying total assignment as a set of true variable indices, or
    None when unsatisfiable.  Variables left free by the search are reported
    true."""
    n = len(cnf.variables)
    extra_clauses = [_as_clause(cnf, item) for item in extra]
    if KERNEL_AVAILABLE and not force_pure:
        c = _base(cnf)
        if all(len(cl) == 1 for cl in extra_clauses):
            m = _problem(c, n).model([cl[0] for cl in extra_clauses])
            return None if m is None else set(m)
        lits, start = c["lits"], c["start"]
        nl, ns = len(lits), len(start)
        try:
            _with_extra(c, extra_clauses)
            m = _kernel.model(n, lits, start)
        finally:
            del lits[nl:]
            del start[ns:]
        return None if m is None else set(m)
    clauses = list(cnf.clauses) + extra_clauses
    pos = [0.0] * (n + 1)
    neg = [0.0] * (n + 1)
    return _PureEngine(n, clauses, pos, neg).model()


def is_satisfiable(cnf: WeightedCNF, extra=(), force_pure: bool = False) -> bool:
    return sat(cnf, extra, force_pure=force_pure) is not None


def engine_name() -> str:
    return "compiled" if KERNEL_AVAILABLE else "pure-python"

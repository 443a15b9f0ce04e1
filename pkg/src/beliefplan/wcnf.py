"""Weighted CNF encoding of belief-state Bayesian networks.

Every BN value gets a *state proposition* (weights 1/1).  Each
non-deterministic CPT row is encoded through a cascade of *chance
propositions*: the chance proposition of entry j carries the conditional
probability that entry j is true given the row holds and no earlier entry is
true, and clauses (row ∧ no-earlier-entry ∧ entry-j-selected) -> value_j tie
the cascade to the state propositions.  Deterministic rows become plain
implications.  Every variable's values are constrained by an exactly-one
group.  Binary-domain root nodes with a single CPT row reuse their first state
proposition as the chance proposition (no extra variables or clauses).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .beliefbn import BeliefBN, BNNode

BRUTE_FORCE_CAP = 24


@dataclass
class WCNFVar:
    index: int  # 1-based
    name: str
    kind: str  # "state" | "chance"
    w_pos: float = 1.0
    w_neg: float = 1.0


@dataclass
class WeightedCNF:
    variables: list[WCNFVar] = field(default_factory=list)
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)
    # Variable groups holding an exactly-one constraint (lists of var indices);
    # downstream consumers use them to locate value groups.
    groups: list[tuple[int, ...]] = field(default_factory=list)

    def add_var(self, name: str, kind: str = "state", w_pos: float = 1.0, w_neg: float = 1.0) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name!r}")
        idx = len(self.variables) + 1
        self.variables.append(WCNFVar(idx, name, kind, w_pos, w_neg))
        self.index[name] = idx
        return idx

    def var(self, name: str) -> int:
        return self.index[name]

    def add_clause(self, lits) -> None:
        clause = tuple(sorted(set(lits), key=abs))
        for lit in clause:
            if -lit in clause:
                return  # tautology
        self.clauses.append(clause)

    def add_exactly_one(self, var_indices) -> None:
        vs = list(var_indices)
        self.add_clause(vs)
        for i, a in enumerate(vs):
            for b in vs[i + 1 :]:
                self.add_clause([-a, -b])
        self.groups.append(tuple(vs))

    def copy(self) -> "WeightedCNF":
        return WeightedCNF(
            variables=[WCNFVar(v.index, v.name, v.kind, v.w_pos, v.w_neg) for v in self.variables],
            clauses=list(self.clauses),
            index=dict(self.index),
            groups=list(self.groups),
        )

    def solver_arrays(self):
        n = len(self.variables)
        pos = [0.0] * (n + 1)
        neg = [0.0] * (n + 1)
        for v in self.variables:
            pos[v.index] = v.w_pos
            neg[v.index] = v.w_neg
        return n, pos, neg


class MalformedCPT(Exception):
    pass


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def _rows_disjoint(bn: BeliefBN, c1: frozenset[str], c2: frozenset[str]) -> bool:
    owners1 = {bn.value_owner[v]: v for v in c1}
    for v in c2:
        owner = bn.value_owner[v]
        if owner in owners1 and owners1[owner] != v:
            return True
    return False


def _row_guards(bn: BeliefBN, node: BNNode, i: int) -> list[list[str]] | None:
    """Positive-literal expansion sets from earlier rows that overlap row i.

    Returns None when row i can never fire (an earlier row subsumes it).
    """
    cond = node.rules[i].condition
    guards: list[list[str]] = []
    for j in range(i):
        prev = node.rules[j].condition
        if _rows_disjoint(bn, prev, cond):
            continue
        if prev <= cond:
            return None
        guards.append(sorted(prev - cond))
    return guards


def _is_deterministic_row(dist) -> bool:
    return any(w == 1.0 for w in dist)


def _reduce_clauses(bn: BeliefBN, cnf: WeightedCNF, clauses: list[tuple[int, ...]]):
    """Merge clause groups that differ only in one negative state literal whose
    variable's full domain is covered (resolution against the at-least-one
    clause), e.g. {(-x1 v C), (-x2 v C)} -> (C) for Dom = {x1, x2}."""
    name_of = {v.index: v.name for v in cnf.variables}
    domains: dict[str, frozenset[int]] = {}
    for n in bn.nodes:
        idxs = frozenset(cnf.index[val] for val in n.values if val in cnf.index)
        for i in idxs:
            domains[name_of[i]] = idxs

    result = list(dict.fromkeys(clauses))
    changed = True
    while changed:
        changed = False
        buckets: dict[tuple[tuple[int, ...], frozenset[int]], set[int]] = {}
        for c in result:
            for lit in c:
                if lit < 0 and name_of.get(-lit) in domains:
                    rest = tuple(l for l in c if l != lit)
                    key = (rest, domains[name_of[-lit]])
                    buckets.setdefault(key, set()).add(-lit)
        for (rest, dom), seen in buckets.items():
            if seen == set(dom):
                merged = []
                for c in result:
                    drop = False
                    for v in dom:
                        if -v in c and tuple(l for l in c if l != -v) == rest:
                            drop = True
                            break
                    merged.append((c, drop))
                result = [c for c, drop in merged if not drop]
                if rest not in result:
                    result.append(rest)
                changed = True
                break
    return result


def _encode_into(cnf: WeightedCNF, bn: BeliefBN, nodes) -> None:
    for node in nodes:
        for value in node.values:
            cnf.add_var(value, "state")
    for node in nodes:
        cnf.add_exactly_one(cnf.var(v) for v in node.values)
        cnf.clauses.extend(_encode_node_cpt(bn, cnf, node))


def encode_bn(bn: BeliefBN) -> WeightedCNF:
    cnf = WeightedCNF()
    _encode_into(cnf, bn, bn.nodes)
    return cnf


def extend_encoding(cnf: WeightedCNF, bn: BeliefBN, new_nodes) -> WeightedCNF:
    """Encoding of a one-layer BN extension: the existing formula is copied
    and only the appended nodes are encoded."""
    out = cnf.copy()
    _encode_into(out, bn, new_nodes)
    return out


def _encode_node_cpt(bn: BeliefBN, cnf: WeightedCNF, node: BNNode) -> list[tuple[int, ...]]:
    clauses: list[tuple[int, ...]] = []
    k = len(node.values)

    def emit(lits):
        clause = _mk(lits)
        if clause is not None:
            clauses.append(clause)

    for rule in node.rules:
        if abs(sum(rule.dist) - 1.0) > 1e-6:
            raise MalformedCPT(f"row of {node.name} does not sum to 1")

    # Root shortcut: single unconditional non-deterministic row over a binary
    # domain reuses the first value's state proposition as chance proposition.
    if (
        len(node.rules) == 1
        and not node.rules[0].condition
        and k == 2
        and not _is_deterministic_row(node.rules[0].dist)
    ):
        v = cnf.variables[cnf.var(node.values[0]) - 1]
        v.kind = "chance"
        v.w_pos = node.rules[0].dist[0]
        v.w_neg = node.rules[0].dist[1]
        return clauses

    for i, rule in enumerate(node.rules):
        guards = _row_guards(bn, node, i)
        if guards is None:
            continue  # dead row, shadowed by an earlier one
        neg_cond = [-cnf.var(v) for v in sorted(rule.condition)]
        prefixes = [
            list(combo)
            for combo in itertools.product(*[[cnf.var(v) for v in g] for g in guards])
        ]
        dist = rule.dist

        if _is_deterministic_row(dist):
            forced = node.values[dist.index(1.0)]
            for pref in prefixes:
                emit(neg_cond + pref + [cnf.var(forced)])
            continue

        cascade: list[int] = []  # chance vars of earlier entries (positive in clauses)
        consumed = 0.0
        for j, (value, tj) in enumerate(zip(node.values, dist)):
            last = j == k - 1
            head = neg_cond + cascade[:]
            if last:
                for pref in prefixes:
                    emit(head + pref + [cnf.var(value)])
            elif tj == 0.0:
                for pref in prefixes:
                    emit(head + pref + [-cnf.var(value)])
            else:
                residual = 1.0 - consumed
                if residual <= 0.0:
                    raise MalformedCPT(
                        f"row of {node.name}: zero residual mass before entry {value}"
                    )
                w = tj / residual
                cname = f"<{value}^{node.name}.{i}>"
                cvar = cnf.add_var(cname, "chance", w_pos=min(w, 1.0), w_neg=max(1.0 - w, 0.0))
                for pref in prefixes:
                    emit(head + pref + [-cvar, cnf.var(value)])
                cascade.append(cvar)
            consumed += tj
    return _reduce_clauses(bn, cnf, clauses)


def _mk(lits) -> tuple[int, ...] | None:
    clause = tuple(sorted(set(lits), key=abs))
    for lit in clause:
        if -lit in clause:
            return None
    return clause


# ---------------------------------------------------------------------------
# Assignment weights and the brute-force oracle
# ---------------------------------------------------------------------------


def weight_of_assignment(cnf: WeightedCNF, true_vars) -> float:
    """Product of literal weights of a total assignment (set of true names or
    1-based indices)."""
    true_idx = {t if isinstance(t, int) else cnf.var(t) for t in true_vars}
    w = 1.0
    for v in cnf.variables:
        w *= v.w_pos if v.index in true_idx else v.w_neg
    return w


def wmc_bruteforce(cnf: WeightedCNF, extra=()) -> float:
    """Exhaustive weighted model count over all 2^n assignments (n <= 24).

    `extra` is a conjunction: an iterable of literals (signed ints or names
    prefixed with '-'/'!' for negation) or of clauses (iterables of literals).
    """
    import numpy as np

    n = len(cnf.variables)
    if n > BRUTE_FORCE_CAP:
        raise OverflowError(f"{n} variables exceed brute-force cap {BRUTE_FORCE_CAP}")
    clauses = list(cnf.clauses) + [_as_clause(cnf, item) for item in extra]
    size = 1 << n
    idx = np.arange(size, dtype=np.uint32)
    sat = np.ones(size, dtype=bool)
    for clause in clauses:
        ok = np.zeros(size, dtype=bool)
        for lit in clause:
            bit = ((idx >> (abs(lit) - 1)) & 1).astype(bool)
            ok |= bit if lit > 0 else ~bit
        sat &= ok
    w = np.ones(size, dtype=np.float64)
    for v in cnf.variables:
        bit = ((idx >> (v.index - 1)) & 1).astype(bool)
        w *= np.where(bit, v.w_pos, v.w_neg)
    return float(w[sat].sum())


def _as_literal(cnf: WeightedCNF, lit) -> int:
    if isinstance(lit, int):
        return lit
    name = lit
    sign = 1
    if name.startswith("-"):
        sign, name = -1, name[1:]
    return sign * cnf.var(name)


def _as_clause(cnf: WeightedCNF, item) -> tuple[int, ...]:
    if isinstance(item, (int, str)):
        return (_as_literal(cnf, item),)
    return tuple(_as_literal(cnf, l) for l in item)


# ---------------------------------------------------------------------------
# Weighted DIMACS interop
# ---------------------------------------------------------------------------


def to_dimacs(cnf: WeightedCNF) -> str:
    out = [f"p cnf {len(cnf.variables)} {len(cnf.clauses)}"]
    for v in cnf.variables:
        out.append(f"c name {v.index} {v.name}")
        if v.w_pos == 1.0 and v.w_neg == 1.0:
            out.append(f"w {v.index} -1")
        elif abs(v.w_pos + v.w_neg - 1.0) <= 1e-15:
            out.append(f"w {v.index} {v.w_pos!r}")
        else:
            out.append(f"w {v.index} {v.w_pos!r} {v.w_neg!r}")
    for c in cnf.clauses:
        out.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(out) + "\n"


def from_dimacs(text: str) -> WeightedCNF:
    cnf = WeightedCNF()
    n_declared = 0
    names: dict[int, str] = {}
    weights: dict[int, tuple[float, float]] = {}
    clause_lines: list[list[int]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c name "):
            parts = line.split()
            names[int(parts[2])] = parts[3]
            continue
        if line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            n_declared = int(parts[2])
            continue
        if line.startswith("w"):
            parts = line.split()
            i = int(parts[1])
            if len(parts) == 3:
                w = float(parts[2])
                weights[i] = (1.0, 1.0) if w == -1.0 else (w, 1.0 - w)
            else:
                weights[i] = (float(parts[2]), float(parts[3]))
            continue
        lits = [int(t) for t in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clause_lines.append(lits)
    n = max(
        [n_declared]
        + [abs(l) for c in clause_lines for l in c]
        + list(weights)
        + list(names)
    )
    for i in range(1, n + 1):
        wp, wn = weights.get(i, (1.0, 1.0))
        kind = "state" if (wp, wn) == (1.0, 1.0) else "chance"
        cnf.add_var(names.get(i, f"x{i}"), kind, wp, wn)
    for lits in clause_lines:
        cnf.add_clause(lits)
    return cnf

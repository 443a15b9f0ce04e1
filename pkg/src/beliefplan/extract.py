"""Relaxed-plan extraction from a successful relaxed planning graph.

The heuristic value is the number of (action, time) selections.  Extraction
runs in two phases:

  1. Uncertain goals at the final layer T.  The graph restricted to their
     ancestors is first *reduced*: for every action already on the node's path
     we greedily delete its future-layer occurrences, one layer at a time,
     while the recomputed goal estimate stays at or above theta (such actions
     will be applied anyway when the relaxed plan is glued behind the path).
     Every surviving non-persistence edge at time >= 0 selects its action.
  2. Certain goals and subgoals, latest layer first.  A goal certain at t is
     either achieved outright by an effect with certain condition whose every
     outcome adds it, or it is backchained through a support graph: a walk
     from its support leafs choosing, per open fact, an effect all of whose
     outcomes carry their full static weight in the ancestor graph, and per
     outcome an added fact with propagated weight 1.

For tasks whose actions are all effect-deterministic (uncertainty only in the
initial state) the first phase is replaced by a simpler one: each goal's
initial-layer leafs are sorted in declaration order and the shortest prefix
whose joint weighted model count reaches theta is backchained through the
support-graph walk.  Selected actions' certain preconditions and conditions
become subgoals, registered at the first layer where they are certain.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass

from .beliefbn import stamp
from .model import PlanningTask
from .prpg import GOAL_TOL, PRPG, WEIGHT_TOL
from .solver import wmc


@dataclass(frozen=True)
class RelaxedPlan:
    selections: frozenset[tuple[str, int]]  # (action id, time step >= 0)

    @property
    def length(self) -> int:
        return len(self.selections)


def has_probabilistic_effects(task: PlanningTask) -> bool:
    return any(
        sum(1 for o in e.outcomes if o.probability > 0.0) > 1
        for a in task.actions
        for e in a.effects
    )


class _Extraction:
    def __init__(self, prpg: PRPG, counters):
        self.prpg = prpg
        self.counters = counters if counters is not None else prpg.counters
        self.m = prpg.m
        self.T = prpg.T
        self.lT = prpg.m + prpg.T
        self.selections: set[tuple[str, int]] = set()
        self.selected_at: dict[int, set[str]] = defaultdict(set)
        self.G: dict[int, set[str]] = defaultdict(set)
        self.prop_order = {p: i for i, p in enumerate(prpg.task.propositions)}
        self.decl_order = {a.id: i for i, a in enumerate(prpg.task.actions)}

    def sub_goal(self, p: str) -> None:
        t0 = self.prpg.first_known_time(p)
        if t0 is not None and t0 >= 1:
            self.G[t0].add(p)

    def select(self, action_id: str, layer: int) -> None:
        self.selections.add((action_id, layer - self.m))
        self.selected_at[layer].add(action_id)

    def extract_subplan(self, cids) -> None:
        """Select the responsible action of every future-layer non-persistence
        edge and subgoal its certain preconditions and condition."""
        prpg = self.prpg
        for cid in sorted(cids):
            c = prpg.chance[cid]
            if c.layer < self.m or c.is_noop:
                continue
            self.select(c.action.id, c.layer)
            props = set(c.action.precondition)
            if c.cond_prop is not None:
                props.add(c.cond_prop)
            for q in sorted(props & prpg.P[c.layer], key=self.prop_order.get):
                self.sub_goal(q)

    # -- support-graph walk ---------------------------------------------

    def construct_support_graph(self, g: str, layer: int, leaf_keys) -> set[int]:
        prpg = self.prpg
        wf, wc, cids, _leafs = prpg._weights(g, layer)
        chosen: set[int] = set()
        queue: deque[tuple[str, int]] = deque()
        seen: set[tuple[str, int]] = set()

        def push_fact(q: str, lq: int) -> None:
            if (q, lq) not in seen:
                seen.add((q, lq))
                queue.append((q, lq))

        def choose_add(cid: int) -> None:
            c = prpg.chance[cid]
            candidates = [
                r for r in c.adds
                if abs(wf.get((r, c.layer + 1), 0.0) - 1.0) <= WEIGHT_TOL
            ]
            assert candidates, f"chance node {cid} has no fully-weighted add"
            push_fact(min(candidates, key=self.prop_order.get), c.layer + 1)

        for kind, x in sorted(leaf_keys, key=repr):
            if kind == "f":
                push_fact(x, 0)
            else:
                chosen.add(x)
                choose_add(x)
        while queue:
            q, lq = queue.popleft()
            if (q, lq) == (g, layer):
                continue
            groups = [
                grp for grp in prpg.cond_groups.get((q, lq), ())
                if len(grp.cids) == grp.n_live
                and all(
                    cid in cids
                    and abs(wc.get(cid, -1.0) - prpg.chance[cid].prob) <= WEIGHT_TOL
                    for cid in grp.cids
                )
            ]
            if not groups:
                raise AssertionError(
                    f"no qualifying effect for open fact {q} at layer {lq}")
            # At past layers real effects are free (never selected) and make
            # progress, so they win over persistence; at future layers
            # persistence wins (shorter, reuse-heavy relaxed plans).
            prefer_noop = lq >= self.m
            grp = min(groups, key=lambda grp: (
                0 if grp.is_noop == prefer_noop else 1,
                0 if grp.action.id in self.selected_at[lq] else 1,
                self.decl_order.get(grp.action.id, -1),
                grp.action.id,
                grp.effect_index,
            ))
            for cid in grp.cids:
                chosen.add(cid)
                choose_add(cid)
        return chosen

    # -- certain goals, latest first --------------------------------------

    def run_main_loop(self) -> None:
        prpg = self.prpg
        for t in range(self.T, 0, -1):
            layer = self.m + t
            for g in sorted(self.G[t], key=self.prop_order.get):
                if self._known_achiever(g, layer):
                    continue
                support = prpg.supports.get((g, layer))
                assert support, f"certain subgoal {g} at {t} lacks a support set"
                self.extract_subplan(self.construct_support_graph(g, layer, support))

    def _known_achiever(self, g: str, layer: int) -> bool:
        """An effect with certain condition whose every live outcome adds g."""
        prpg = self.prpg
        p_prev = prpg.P[layer - 1]
        for a in prpg.actions_at[layer - 1]:
            for _ei, e in enumerate(a.effects):
                live = [o for o in e.outcomes if o.probability > 0.0]
                if not live or not all(g in o.add for o in live):
                    continue
                if e.condition and not e.condition <= p_prev:
                    continue
                self.select(a.id, layer - 1)
                props = (a.precondition | e.condition) & p_prev
                for q in sorted(props, key=self.prop_order.get):
                    self.sub_goal(q)
                return True
        return False


# ---------------------------------------------------------------------------
# Graph reduction
# ---------------------------------------------------------------------------


def reduce_implication_graph(prpg: PRPG, counters=None) -> frozenset[int]:
    """Chance nodes removable from the uncertain goals' ancestor graph: for
    each action on the node's path, in path order, delete its future-layer
    occurrences earliest first while the recomputed estimate stays >= theta;
    stop at the first unsafe removal and move to the next action."""
    lT = prpg.m + prpg.T
    unknown_goals = sorted(prpg.task.goal - prpg.P[lT])
    if not unknown_goals:
        return frozenset()
    blocked: set[int] = set()
    seen: set[str] = set()
    for a in prpg.relaxed_past:
        if a.id in seen:
            continue
        seen.add(a.id)
        layers = sorted({
            prpg.chance[cid].layer
            for layer in range(prpg.m, lT)
            for cid in prpg.chance_at[layer]
            if prpg.chance[cid].action.id == a.id
        })
        for layer in layers:
            trial = blocked | {
                cid for cid in prpg.chance_at[layer]
                if prpg.chance[cid].action.id == a.id
            }
            estimate = prpg.get_p(prpg.T, blocked=frozenset(trial))
            if estimate >= prpg.theta - GOAL_TOL:
                blocked = trial
            else:
                break
    return frozenset(blocked)


# ---------------------------------------------------------------------------
# Extraction entry points
# ---------------------------------------------------------------------------


def extract_prplan(prpg: PRPG, counters=None) -> RelaxedPlan:
    ex = _Extraction(prpg, counters)
    lT = ex.lT
    unknown_goals = sorted(prpg.task.goal - prpg.P[lT], key=ex.prop_order.get)
    if unknown_goals:
        blocked = reduce_implication_graph(prpg, counters)
        cids: set[int] = set()
        for g in unknown_goals:
            _wf, _wc, reach, _leafs = prpg._weights(g, lT, blocked)
            cids |= reach
        ex.extract_subplan(cids)
    for g in sorted(prpg.task.goal & prpg.P[lT], key=ex.prop_order.get):
        ex.sub_goal(g)
    ex.run_main_loop()
    return RelaxedPlan(frozenset(ex.selections))


def _prefix_estimate(prpg: PRPG, targets, k: int, counters) -> float:
    """Joint initial-world probability that every target has one of its first
    k leafs true."""
    counters["wmc_calls"] = counters.get("wmc_calls", 0) + 1
    worlds = prpg.initial_worlds()
    if worlds is not None:
        prefixes = [frozenset(leafs[:k]) for _g, leafs in targets]
        return sum(pw for world, pw in worlds
                   if all(world & pre for pre in prefixes))
    cnf = prpg.phi0.copy()
    for _g, leafs in targets:
        cnf.add_clause([cnf.var(stamp(q, 0)) for q in leafs[:k]])
    return wmc(cnf, components=True)


def _min_prefix(prpg: PRPG, targets, counters) -> int:
    """Smallest shared leaf-prefix length whose joint estimate reaches theta
    (binary search; the caller checked that the full sets reach it)."""
    lo, hi = 1, max(len(leafs) for _g, leafs in targets)
    while lo < hi:
        mid = (lo + hi) // 2
        if _prefix_estimate(prpg, targets, mid, counters) >= prpg.theta - GOAL_TOL:
            hi = mid
        else:
            lo = mid + 1
    return lo


def simple_extract(prpg: PRPG, counters=None) -> RelaxedPlan:
    """Extraction for effect-deterministic tasks: all propagated weights are
    0 or 1, so every goal not certain initially is covered by a prefix of its
    initial-layer leafs and backchained through the support-graph walk."""
    ex = _Extraction(prpg, counters)
    lT = ex.lT
    targets = []
    for g in sorted(prpg.task.goal, key=ex.prop_order.get):
        t0 = prpg.first_known_time(g)
        if t0 is not None and t0 <= 0:
            continue
        wf, _wc, _cids, leafs = prpg._weights(g, lT)
        usable = sorted(
            (x for kind, x in leafs
             if kind == "f" and abs(wf[(x, 0)] - 1.0) <= WEIGHT_TOL),
            key=ex.prop_order.get,
        )
        if usable:
            targets.append((g, usable))
        else:
            ex.sub_goal(g)  # certain via a direct chain: classical backchaining
    # Leaf prefixes only help when the initial-world disjunctions can reach
    # theta by themselves.  A goal whose certainty comes from an action chain
    # (e.g. an unconditional add) may carry a weight-1 initial leaf that is
    # nowhere near certain; backchain such goals classically instead, one at a
    # time, until the remaining joint estimate suffices.
    while targets:
        full = max(len(leafs) for _g, leafs in targets)
        if _prefix_estimate(prpg, targets, full, ex.counters) \
                >= prpg.theta - GOAL_TOL:
            break
        certain = next(
            (i for i, (g, _l) in enumerate(targets) if g in prpg.P[lT]), None)
        assert certain is not None, \
            "a successful build reaches theta via leafs for uncertain goals"
        g, _leafs = targets.pop(certain)
        ex.sub_goal(g)
    if targets:
        k = _min_prefix(prpg, targets, ex.counters)
        for g, leafs in targets:
            keys = [("f", q) for q in leafs[:k]]
            ex.extract_subplan(ex.construct_support_graph(g, lT, keys))
    ex.run_main_loop()
    return RelaxedPlan(frozenset(ex.selections))


def extract_relaxed_plan(prpg: PRPG, counters=None) -> RelaxedPlan:
    assert prpg.success, "extraction requires a successful graph build"
    if prpg.T == 0:
        return RelaxedPlan(frozenset())
    if has_probabilistic_effects(prpg.task):
        return extract_prplan(prpg, counters)
    return simple_extract(prpg, counters)

"""Probabilistic relaxed planning graph (heuristic core).

The relaxation |+1 drops delete lists and reduces effect conditions to a
single proposition.  Starting from the initial-belief formula, the graph
replays the node's action sequence (past layers) and then applies every
applicable relaxed action per future layer, maintaining per layer:

  P(t)   -- propositions certain under the relaxation,
  uP(t)  -- propositions possible but not certain,

plus a time-layered implication graph whose nodes are facts p(t) and chance
nodes (one per positive-probability, add-bearing effect outcome occurrence,
with static weight = the outcome probability).  Effects whose condition is
unknown hang their chance nodes off the condition fact; probabilistic effects
with a *known* condition instead contribute fresh weighted propositions,
grouped by an exactly-one constraint, to the running formula.  Deterministic
effects with known conditions add their facts to P directly.

A backward weight propagation over the graph ("how much of a leaf's mass
reaches the target?") yields support sets (leafs carrying their full static
weight); a fact becomes certain exactly when the formula implies the
disjunction of its support.  The goal-probability estimate conjoins the
formula with one leaf disjunction per unknown goal, each initial-layer leaf
weighted by its propagated weight, and takes the weighted model count.

The build loop stops with success at the first horizon T whose estimate
reaches theta, or reports failure when all four stagnation conditions hold
(P, uP, the initial-layer projections of the support sets, and the estimate
itself are unchanged) or when the horizon cap is hit (flagged separately).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .beliefbn import build_belief_bn, stamp
from .model import Action, Effect, Outcome, PlanningTask
from .oracle import EnumerationCapExceeded, initial_belief, relax_action
from .solver import sat, wmc
from .space import BeliefNode, classify_layer
from .wcnf import WeightedCNF, encode_bn

WEIGHT_TOL = 1e-12
GOAL_TOL = 1e-9
DEFAULT_HORIZON = 500

NOOP_PREFIX = "noop:"


@dataclass(frozen=True)
class RootInfo:
    """Initial-belief formula and layer-0 classification (node independent)."""

    phi0: WeightedCNF
    known: frozenset[str]
    unknown: frozenset[str]
    # Memo for implication tests over initial-layer fact sets; the formula is
    # fixed, so results are valid across every node of the same task.
    implied_cache: dict = field(default_factory=dict, compare=False)


def initial_root_info(task: PlanningTask, counters=None) -> RootInfo:
    bn = build_belief_bn(task, [])
    phi0 = encode_bn(bn)
    known, _negknown, unknown = classify_layer(task, phi0, 0, counters)
    return RootInfo(phi0, known, unknown)


@dataclass
class ChanceNode:
    """One effect-outcome occurrence: fires between `layer` and `layer + 1`."""

    cid: int
    layer: int
    action: Action  # relaxed action (noops are synthesized actions)
    effect_index: int
    outcome_index: int
    prob: float  # static weight
    adds: tuple[str, ...]
    cond_prop: Optional[str]  # the (single) relaxed condition, if any
    cond_edge: bool  # condition was unknown: edge cond(layer) -> this
    group_id: Optional[int]  # formula group (known-condition probabilistic)
    var_name: Optional[str]
    is_noop: bool


@dataclass
class EffectGroup:
    """The add-bearing chance nodes of one unknown-condition effect instance."""

    action: Action
    effect_index: int
    layer: int
    cond_prop: str
    cids: list[int]
    n_live: int  # positive-probability outcomes of the effect (incl. add-free)
    is_noop: bool


class PRPG:
    def __init__(self, task, sequence, theta, phi0, known0, unknown0, counters,
                 implied_cache=None):
        self.task: PlanningTask = task
        self.theta = theta
        self.m = len(sequence)
        self.relaxed_past = [relax_action(a, task) for a in sequence]
        self.relaxed_all = [relax_action(a, task) for a in task.actions]
        self.phi0 = phi0
        self.counters = counters if counters is not None else {}
        self.P: list[frozenset[str]] = [frozenset(known0)]
        self.uP: list[frozenset[str]] = [frozenset(unknown0)]
        self.actions_at: list[list[Action]] = []  # non-noop actions per layer
        self.chance: list[ChanceNode] = []
        self.chance_at: list[list[int]] = []
        self.fact_in: dict[tuple[str, int], list[int]] = {}
        self.cond_groups: dict[tuple[str, int], list[EffectGroup]] = {}
        self.phi_groups: list[list[tuple[str, float, Optional[int]]]] = []
        self.supports: dict[tuple[str, int], frozenset] = {}
        self.gp: list[float] = []  # estimate per future time step
        self.T: Optional[int] = None
        self.success = False
        self.horizon_capped = False
        self._noop_cache: dict[str, Action] = {}
        self._implied_cache = implied_cache if implied_cache is not None else {}
        self._worlds = None  # lazy initial-belief support, or False if too big
        self._first_known: dict[str, int] = {}
        for p in known0:
            self._first_known[p] = -self.m

    # -- bookkeeping --------------------------------------------------------

    def _noop(self, p: str) -> Action:
        a = self._noop_cache.get(p)
        if a is None:
            a = Action(
                NOOP_PREFIX + p,
                frozenset(),
                (Effect(frozenset({p}), (Outcome(1.0, frozenset({p}), frozenset()),)),),
            )
            self._noop_cache[p] = a
        return a

    def first_known_time(self, p: str) -> Optional[int]:
        """First time step (relative to the node, past steps negative) at
        which p is certain, or None."""
        return self._first_known.get(p)

    def _count(self, key: str) -> None:
        self.counters[key] = self.counters.get(key, 0) + 1

    # -- layer construction -------------------------------------------------

    def _build_timestep(self, actions) -> None:
        layer = len(self.chance_at)
        P, uP = self.P[layer], self.uP[layer]
        layer_cids: list[int] = []
        self.chance_at.append(layer_cids)
        self.actions_at.append(list(actions))
        P1 = set(P)
        uP_next: set[str] = set()

        def add_chance(action, ei, oi, prob, adds, cond_prop, cond_edge,
                       group_id, var_name, is_noop):
            cid = len(self.chance)
            node = ChanceNode(cid, layer, action, ei, oi, prob,
                              tuple(sorted(adds)), cond_prop, cond_edge,
                              group_id, var_name, is_noop)
            self.chance.append(node)
            layer_cids.append(cid)
            for r in node.adds:
                self.fact_in.setdefault((r, layer + 1), []).append(cid)
            return cid

        all_actions = list(actions) + [self._noop(p) for p in sorted(P | uP)]
        for a in all_actions:
            is_noop = a.id.startswith(NOOP_PREFIX)
            for ei, e in enumerate(a.effects):
                live = [(oi, o) for oi, o in enumerate(e.outcomes)
                        if o.probability > 0.0]
                if not any(o.add for _oi, o in live):
                    continue
                cond_prop = next(iter(e.condition)) if e.condition else None
                if cond_prop is not None and cond_prop not in P and cond_prop not in uP:
                    continue  # condition impossible at this layer
                known_cond = cond_prop is None or cond_prop in P
                if known_cond and len(live) == 1:
                    # Deterministic, certain condition: facts become certain.
                    P1.update(live[0][1].add)
                    continue
                if known_cond:
                    # Probabilistic with certain condition: the outcomes enter
                    # the formula as an exactly-one group of weighted
                    # propositions; add-bearing ones are leaf chance nodes.
                    gid = len(self.phi_groups)
                    members: list[tuple[str, float, Optional[int]]] = []
                    self.phi_groups.append(members)
                    for oi, o in live:
                        name = f"rpg:{a.id}@{layer}#e{ei}o{oi}"
                        cid = None
                        if o.add:
                            cid = add_chance(a, ei, oi, o.probability, o.add,
                                             cond_prop, False, gid, name, is_noop)
                            uP_next.update(o.add)
                        members.append((name, o.probability, cid))
                else:
                    group = EffectGroup(a, ei, layer, cond_prop, [], len(live), is_noop)
                    self.cond_groups.setdefault((cond_prop, layer), []).append(group)
                    for oi, o in live:
                        if not o.add:
                            continue
                        cid = add_chance(a, ei, oi, o.probability, o.add,
                                         cond_prop, True, None, None, is_noop)
                        group.cids.append(cid)
                        uP_next.update(o.add)

        for p in sorted(uP_next - P1):
            wf, wc, _cids, leafs = self._weights(p, layer + 1)
            support = frozenset(
                key for key in leafs
                if (key[0] == "f" and abs(wf[(key[1], 0)] - 1.0) <= WEIGHT_TOL)
                or (key[0] == "c"
                    and abs(wc[key[1]] - self.chance[key[1]].prob) <= WEIGHT_TOL)
            )
            self.supports[(p, layer + 1)] = support
            if support and self._implied(support):
                P1.add(p)
        self.P.append(frozenset(P1))
        self.uP.append(frozenset(uP_next - P1))
        t_next = layer + 1 - self.m
        for p in P1:
            if p not in self._first_known:
                self._first_known[p] = t_next

    # -- weight propagation -------------------------------------------------

    def _weights(self, prop: str, layer: int, blocked=frozenset()):
        """Backward-reachable subgraph of the target fact with propagated
        weights.  Returns (fact weights, chance weights, chance ids, leafs);
        leaf keys are ("f", prop) for initial-layer facts and ("c", cid)."""
        target = (prop, layer)
        facts = {target}
        cids: set[int] = set()
        stack = [target]
        while stack:
            q, lq = stack.pop()
            for cid in self.fact_in.get((q, lq), ()):
                if cid in blocked or cid in cids:
                    continue
                cids.add(cid)
                node = self.chance[cid]
                if node.cond_edge:
                    key = (node.cond_prop, node.layer)
                    if key not in facts:
                        facts.add(key)
                        stack.append(key)
        facts_by_layer: dict[int, list[str]] = {}
        for q, lq in facts:
            facts_by_layer.setdefault(lq, []).append(q)
        wf: dict[tuple[str, int], float] = {target: 1.0}
        wc: dict[int, float] = {}
        for lq in range(layer - 1, -1, -1):
            for cid in self.chance_at[lq]:
                if cid not in cids:
                    continue
                node = self.chance[cid]
                alpha = 1.0
                for r in node.adds:
                    wr = wf.get((r, lq + 1))
                    if wr is not None:
                        alpha *= 1.0 - wr
                wc[cid] = node.prob * (1.0 - alpha)
            for q in facts_by_layer.get(lq, ()):
                if (q, lq) == target:
                    continue
                alpha = 1.0
                for group in self.cond_groups.get((q, lq), ()):
                    s = 0.0
                    for cid in group.cids:
                        if cid in wc:
                            s += wc[cid]
                    alpha *= 1.0 - min(1.0, s)
                wf[(q, lq)] = 1.0 - alpha
        leafs: list[tuple[str, object]] = []
        for q in sorted(facts_by_layer.get(0, ())):
            leafs.append(("f", q))
        for cid in sorted(cids):
            if not self.chance[cid].cond_edge:
                leafs.append(("c", cid))
        return wf, wc, cids, leafs

    # -- formula construction -----------------------------------------------

    def _materialize(self, cnf: WeightedCNF, cids, full: bool = False):
        """Add formula propositions for the referenced leaf chance nodes.

        A group with a single referenced member collapses to one proposition
        weighted (p, 1-p) -- exact, since its siblings occur nowhere else and
        an exactly-one group marginalizes to 1.  Groups with several
        referenced members (or full=True) are materialized completely with
        member weights (p, 1) under an exactly-one constraint."""
        by_group: dict[int, list[int]] = {}
        for cid in sorted(set(cids)):
            by_group.setdefault(self.chance[cid].group_id, []).append(cid)
        var_of: dict[int, int] = {}
        for gid in sorted(by_group):
            referenced = by_group[gid]
            if len(referenced) == 1 and not full:
                node = self.chance[referenced[0]]
                var_of[node.cid] = cnf.add_var(
                    node.var_name, "chance",
                    w_pos=node.prob, w_neg=1.0 - node.prob)
                continue
            idxs = []
            for name, prob, member_cid in self.phi_groups[gid]:
                vi = cnf.add_var(name, "chance", w_pos=prob, w_neg=1.0)
                idxs.append(vi)
                if member_cid is not None:
                    var_of[member_cid] = vi
            cnf.add_exactly_one(idxs)
        return var_of

    def _implied(self, support) -> bool:
        """Does the formula imply the disjunction of the support leafs?"""
        if all(kind == "f" for kind, _x in support):
            # Fact-only supports query the fixed formula, so the test runs
            # directly on it (reusing its solver arrays) and the result is
            # memoized: the same supports recur layer after layer and node
            # after node.
            names = frozenset(x for _kind, x in support)
            if names & self.P[0]:
                return True
            hit = self._implied_cache.get(names)
            if hit is None:
                self._count("sat_calls")
                units = [-self.phi0.var(stamp(x, 0)) for x in sorted(names)]
                hit = sat(self.phi0, extra=units) is None
                self._implied_cache[names] = hit
            return hit
        cnf = self.phi0.copy()
        var_of = self._materialize(
            cnf, (x for kind, x in support if kind == "c"), full=True)
        units = []
        for kind, x in sorted(support, key=repr):
            if kind == "f":
                units.append(-cnf.var(stamp(x, 0)))
            else:
                units.append(-var_of[x])
        self._count("sat_calls")
        return sat(cnf, extra=units) is None

    def initial_worlds(self):
        """Support of the initial belief as (world, weight) pairs, or None if
        it is too large to enumerate."""
        if self._worlds is None:
            try:
                belief = initial_belief(self.task, cap=1 << 16)
                self._worlds = [(w, p) for w, p in belief.dist.items() if p > 0.0]
            except EnumerationCapExceeded:
                self._worlds = False
        return self._worlds if self._worlds is not False else None

    def get_p(self, t: int, goal=None, blocked=frozenset()) -> float:
        """Goal-probability estimate at future time step t (over the graph
        minus the blocked chance nodes)."""
        goal = self.task.goal if goal is None else goal
        lt = self.m + t
        P, uP = self.P[lt], self.uP[lt]
        if not (goal <= (P | uP)):
            return 0.0
        unknown = sorted(goal - P)
        if not unknown:
            return 1.0
        per_goal = []
        for g in unknown:
            wf, _wc, _cids, leafs = self._weights(g, lt, blocked)
            per_goal.append((g, wf, leafs))
        self._count("wmc_calls")
        worlds = self.initial_worlds()
        if worlds is not None:
            targets = []
            for _g, wf, leafs in per_goal:
                fact_leafs = [(x, wf[(x, 0)])
                              for kind, x in leafs if kind == "f"]
                chance = [
                    (x, self.chance[x].group_id, self.chance[x].prob)
                    for kind, x in leafs if kind == "c"
                ]
                targets.append((fact_leafs, chance))
            value = estimate_joint(worlds, targets)
            if value is not None:
                return value
        return self._count_estimate(t, per_goal)

    def _count_estimate(self, t, per_goal) -> float:
        """Weighted-model-count form of the estimate: the formula plus one
        leaf disjunction per unknown goal, initial-layer leafs carrying their
        propagated weight via an implied auxiliary proposition."""
        cnf = self.phi0.copy()
        needed = [x for _g, _wf, leafs in per_goal
                  for kind, x in leafs if kind == "c"]
        var_of = self._materialize(cnf, needed)
        for g, wf, leafs in per_goal:
            disjunction = []
            for kind, x in leafs:
                if kind == "f":
                    lv = cnf.var(stamp(x, 0))
                    w = wf[(x, 0)]
                    if w < 1.0:
                        aux = cnf.add_var(f"rpg:<{x}|{g}@{t}>", "chance",
                                          w_pos=w, w_neg=1.0 - w)
                        cnf.add_clause([-lv, aux])
                    disjunction.append(lv)
                else:
                    disjunction.append(var_of[x])
            if not disjunction:
                return 0.0
            cnf.add_clause(disjunction)
        # Component decomposition: the per-goal disjunctions are often almost
        # variable-disjoint, which the plain counting recursion multiplies out
        # exponentially.
        return wmc(cnf, components=True)

    # -- termination --------------------------------------------------------

    @staticmethod
    def _proj0(support) -> frozenset[str]:
        return frozenset(x for kind, x in support if kind == "f")

    def _fixpoint(self, t: int) -> bool:
        lt = self.m + t
        if self.P[lt] != self.P[lt - 1] or self.uP[lt] != self.uP[lt - 1]:
            return False
        if abs(self.gp[t] - self.gp[t - 1]) > WEIGHT_TOL:
            return False
        for p in self.uP[lt]:
            now = self._proj0(self.supports.get((p, lt), frozenset()))
            prev = self._proj0(self.supports.get((p, lt - 1), frozenset()))
            if now != prev:
                return False
        return True


MAX_JOINT_GOALS = 12


def estimate_joint(worlds, targets) -> Optional[float]:
    """Exact value of the weighted-count estimate by enumerating the
    initial-belief support directly.

    `targets` holds, per unknown goal, its initial-layer fact leafs with
    propagated weights and its chance leafs as (cid, group id, static weight).
    In each world, a goal's disjunction is covered by its true fact leafs
    (each multiplying in its weight, exactly as the auxiliary propositions do
    in the formula) or must fall to its chance leafs.  The joint coverage of
    the goals left to chance follows by inclusion-exclusion: members of one
    exactly-one group are mutually exclusive, distinct groups independent, so
    P(all leafs of a subset false) is a product of (1 - sum of member
    weights) per group.  Returns None when too many goals must be joined."""
    total = 0.0
    coverage_cache: dict[frozenset, float] = {}
    for world, pw in worlds:
        factor = pw
        open_goals = []
        for gi, (fact_leafs, chance) in enumerate(targets):
            covered = False
            for q, w in fact_leafs:
                if q in world:
                    covered = True
                    factor *= w
            if covered:
                continue
            if not chance:
                factor = 0.0
                break
            open_goals.append(gi)
        if factor == 0.0:
            continue
        key = frozenset(open_goals)
        cov = coverage_cache.get(key)
        if cov is None:
            if len(open_goals) > MAX_JOINT_GOALS:
                return None
            cov = _chance_coverage([targets[gi][1] for gi in open_goals])
            coverage_cache[key] = cov
        total += factor * cov
    return total


def _chance_coverage(chance_sets) -> float:
    """Probability that every listed chance-leaf disjunction is satisfied."""
    n = len(chance_sets)
    if n == 0:
        return 1.0
    value = 0.0
    for mask in range(1 << n):
        union: dict[int, tuple[int, float]] = {}
        bits = 0
        for i in range(n):
            if mask >> i & 1:
                bits += 1
                for cid, gid, prob in chance_sets[i]:
                    union[cid] = (gid, prob)
        group_sum: dict[int, float] = {}
        for gid, prob in union.values():
            group_sum[gid] = group_sum.get(gid, 0.0) + prob
        term = 1.0
        for s in group_sum.values():
            term *= max(0.0, 1.0 - s)
        value += -term if bits % 2 else term
    return value


def build_prpg(node: BeliefNode, theta: Optional[float] = None,
               horizon: int = DEFAULT_HORIZON, counters=None,
               root: Optional[RootInfo] = None) -> PRPG:
    task = node.task
    if theta is None:
        theta = task.theta
    if root is None:
        root = initial_root_info(task)
    prpg = PRPG(task, node.sequence, theta, root.phi0, root.known,
                root.unknown, counters, implied_cache=root.implied_cache)
    for a in prpg.relaxed_past:
        prpg._build_timestep([a])
    t = 0
    while True:
        v = prpg.get_p(t)
        prpg.gp.append(v)
        if v >= theta - GOAL_TOL:
            prpg.T = t
            prpg.success = True
            return prpg
        if t >= 1 and prpg._fixpoint(t):
            return prpg
        if t >= horizon:
            prpg.horizon_capped = True
            return prpg
        applicable = [a for a in prpg.relaxed_all
                      if a.precondition <= prpg.P[prpg.m + t]]
        prpg._build_timestep(applicable)
        t += 1


def dump_imp(prpg: PRPG) -> str:
    """Readable text form of the implication graph: one line per chance node
    with static weight, provenance, condition edge, and outgoing edges."""
    out = []
    for layer, cids in enumerate(prpg.chance_at):
        t = layer - prpg.m
        out.append(f"layer {t}:")
        for cid in cids:
            c = prpg.chance[cid]
            src = f"{c.cond_prop}({t})->" if c.cond_edge else ""
            dsts = ", ".join(f"{r}({t + 1})" for r in c.adds)
            prov = f"{c.action.id}/e{c.effect_index}o{c.outcome_index}"
            out.append(f"  {src}<{prov}> w={c.prob:g} -> {dsts}")
    return "\n".join(out) + "\n"

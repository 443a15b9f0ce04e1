"""Implicit belief-state space.

A search node keeps the action sequence, the layered BN of the resulting
belief, its weighted-CNF encoding (extended incrementally, one layer per
action), and a classification of every proposition at the final time layer:

  known     -- true in every possible world,
  negknown  -- false in every possible world,
  unknown   -- true in some worlds, false in others.

Classification needs at most two satisfiability tests per proposition; every
model found on the way rules out one side for all propositions at once, so in
practice only a few tests run.  The goal probability is an exact weighted
model count, short-circuited when the goal is negknown (0) or entirely known
(1), and is part of the duplicate-detection key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .beliefbn import BeliefBN, build_belief_bn, extend_bn, stamp
from .model import Action, PlanningTask
from .solver import sat, wmc
from .wcnf import WeightedCNF, encode_bn, extend_encoding

PROB_MATCH_TOL = 1e-9


@dataclass
class BeliefNode:
    task: PlanningTask
    sequence: tuple[Action, ...]
    bn: BeliefBN
    cnf: WeightedCNF
    known: frozenset[str]
    negknown: frozenset[str]
    unknown: frozenset[str]
    goal_prob: float
    stats: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return len(self.sequence)

    @property
    def key(self):
        """Duplicate-detection key: two nodes whose classifications agree and
        whose goal probabilities match within tolerance are treated as the
        same belief."""
        return (self.known, self.unknown, round(self.goal_prob / PROB_MATCH_TOL))

    def goal_satisfied(self) -> bool:
        return self.goal_prob >= self.task.theta - PROB_MATCH_TOL


def _final_literal(node_cnf: WeightedCNF, prop: str, t: int) -> int:
    return node_cnf.var(stamp(prop, t))


def _classify(task: PlanningTask, cnf: WeightedCNF, t: int, counters=None,
              inherit=None):
    props = sorted(task.propositions)
    known: set[str] = set()
    negknown: set[str] = set()
    if inherit is not None:
        # Propositions no positive-probability outcome of the applied action
        # adds or deletes hold the same value in every world before and after
        # the step, so their classification carries over without a test.
        prev_known, prev_negknown, touched = inherit
        known |= prev_known - touched
        negknown |= prev_negknown - touched
        props = sorted(touched)
    var_of = {p: cnf.var(stamp(p, t)) for p in props}
    maybe_known = set(props)
    maybe_negknown = set(props)

    def prune(model):
        for q in list(maybe_known):
            if var_of[q] not in model:
                maybe_known.discard(q)
        for q in list(maybe_negknown):
            if var_of[q] in model:
                maybe_negknown.discard(q)

    def solve(extra):
        if counters is not None:
            counters["sat_calls"] = counters.get("sat_calls", 0) + 1
        return sat(cnf, extra=extra)

    if maybe_known or maybe_negknown:
        model = solve(())
        assert model is not None, "belief formula must be satisfiable"
        prune(model)

    while maybe_known:
        p = min(maybe_known)
        m = solve([-var_of[p]])
        if m is None:
            known.add(p)
            maybe_known.discard(p)
        else:
            prune(m)  # removes at least p itself
    while maybe_negknown:
        p = min(maybe_negknown)
        m = solve([var_of[p]])
        if m is None:
            negknown.add(p)
            maybe_negknown.discard(p)
        else:
            prune(m)
    unknown = set(task.propositions) - known - negknown
    return frozenset(known), frozenset(negknown), frozenset(unknown)


def classify_layer(task: PlanningTask, cnf: WeightedCNF, t: int, counters=None):
    """Public entry point: classify every proposition at time layer t of the
    given belief formula."""
    return _classify(task, cnf, t, counters)


def _goal_probability(task: PlanningTask, cnf: WeightedCNF, t: int, known, negknown, counters=None):
    goal = task.goal
    if goal & negknown:
        return 0.0
    if goal <= known:
        return 1.0
    if counters is not None:
        counters["wmc_calls"] = counters.get("wmc_calls", 0) + 1
    # Conditioning on known facts is sound (they hold in every possible
    # world) and narrows the search of the counter.
    extra = [cnf.var(stamp(g, t)) for g in goal]
    extra += [cnf.var(stamp(p, t)) for p in known - goal]
    return wmc(cnf, extra=extra)


def _finish(task, sequence, bn, cnf, counters=None, inherit=None) -> BeliefNode:
    t = bn.steps
    known, negknown, unknown = _classify(task, cnf, t, counters, inherit)
    p = _goal_probability(task, cnf, t, known, negknown, counters)
    return BeliefNode(
        task=task,
        sequence=tuple(sequence),
        bn=bn,
        cnf=cnf,
        known=known,
        negknown=negknown,
        unknown=unknown,
        goal_prob=p,
        stats=dict(counters or {}),
    )


def root_node(task: PlanningTask, counters=None) -> BeliefNode:
    bn = build_belief_bn(task, [])
    cnf = encode_bn(bn)
    return _finish(task, (), bn, cnf, counters)


def is_applicable(node: BeliefNode, action: Action) -> bool:
    """The precondition must hold in every possible world."""
    return action.precondition <= node.known


def _touched_props(action: Action) -> frozenset[str]:
    """Propositions some positive-probability outcome adds or deletes."""
    touched: set[str] = set()
    for e in action.effects:
        for o in e.outcomes:
            if o.probability > 0.0:
                touched |= o.add | o.delete
    return frozenset(touched)


def successor(node: BeliefNode, action: Action, counters=None) -> BeliefNode | None:
    if not is_applicable(node, action):
        return None
    bn, new_nodes = extend_bn(node.bn, node.task, action)
    cnf = extend_encoding(node.cnf, bn, new_nodes)
    inherit = (node.known, node.negknown, _touched_props(action))
    return _finish(node.task, node.sequence + (action,), bn, cnf, counters,
                   inherit)


def applicable_actions(node: BeliefNode):
    return [a for a in node.task.actions if is_applicable(node, a)]

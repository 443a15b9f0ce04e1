"""Time-stamped belief Bayesian networks.

`build_belief_bn(task, seq)` constructs the BN N_{b_seq} describing the belief
state after applying the action sequence `seq` to the initial belief: one
replica of the state variables per time layer, plus one mediator variable per
probabilistic action occurrence whose domain is the union of the action's
effect outcomes.  CPTs are kept in compact first-match rule form
(condition -> distribution).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import Action, PlanningTask, is_probabilistic_action

ENUM_CAP = 2**22


@dataclass(frozen=True)
class Rule:
    """First matching rule (in list order) provides the node's distribution."""

    condition: frozenset[str]  # partial assignment over parent values
    dist: tuple[float, ...]  # aligned with the node's values


@dataclass(frozen=True)
class BNNode:
    name: str
    values: tuple[str, ...]
    parents: tuple[str, ...]  # node names, matching rule-condition value owners
    rules: tuple[Rule, ...]


@dataclass
class BeliefBN:
    nodes: list[BNNode]  # topological order
    steps: int  # m, the number of applied actions
    value_owner: dict[str, str]  # value id -> node name

    def node(self, name: str) -> BNNode:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)


def stamp(name: str, t: int) -> str:
    return f"{name}@{t}"


def outcome_value_id(action: Action, t: int, e_idx: int, o_idx: int) -> str:
    return f"{action.id}@{t}#e{e_idx}o{o_idx}"


def mediator_name(t: int) -> str:
    return f"Y@{t}"


def point_dist(values: tuple[str, ...], value: str) -> tuple[float, ...]:
    return tuple(1.0 if v == value else 0.0 for v in values)


def outcome_target_value(task: PlanningTask, var_id: str, add, delete) -> str | None:
    """The value an outcome forces on a variable, or None if untouched."""
    var = task.variables[var_id]
    added = [p for p in add if p in var.domain]
    if added:
        return added[0]
    deleted = [p for p in delete if p in var.domain]
    if deleted:
        others = [p for p in var.domain if p not in deleted]
        assert len(others) == 1, f"ambiguous delete-only outcome on {var_id}"
        return others[0]
    return None


def _initial_layer_nodes(task: PlanningTask) -> list[BNNode]:
    nodes = []
    bn = task.initial
    for x in bn.order:
        var = task.variables[x]
        values = tuple(stamp(p, 0) for p in var.domain)
        parents = tuple(stamp(p, 0) for p in bn.parents.get(x, ()))
        rules = tuple(
            Rule(frozenset(stamp(p, 0) for p in row.condition), row.dist)
            for row in bn.cpts[x]
        )
        nodes.append(BNNode(stamp(x, 0), values, parents, rules))
    return nodes


def _persistence_node(task: PlanningTask, var_id: str, t: int) -> BNNode:
    var = task.variables[var_id]
    values = tuple(stamp(p, t) for p in var.domain)
    rules = tuple(
        Rule(frozenset({stamp(p, t - 1)}), point_dist(values, stamp(p, t)))
        for p in var.domain
    )
    return BNNode(stamp(var_id, t), values, (stamp(var_id, t - 1),), rules)


def _mediator_node(task: PlanningTask, action: Action, t: int) -> BNNode:
    values = []
    for ei, e in enumerate(action.effects):
        for oi in range(len(e.outcomes)):
            values.append(outcome_value_id(action, t, ei, oi))
    values = tuple(values)
    parent_vars: list[str] = []
    for e in action.effects:
        for p in sorted(e.condition):
            v = task.propositions[p].variable
            if v not in parent_vars:
                parent_vars.append(v)
    parents = tuple(stamp(v, t - 1) for v in parent_vars)
    rules = []
    for ei, e in enumerate(action.effects):
        dist = [0.0] * len(values)
        for oi, o in enumerate(e.outcomes):
            dist[values.index(outcome_value_id(action, t, ei, oi))] = o.probability
        cond = frozenset(stamp(p, t - 1) for p in e.condition)
        rules.append(Rule(cond, tuple(dist)))
    return BNNode(mediator_name(t), values, parents, tuple(rules))


def _prob_affected_node(
    task: PlanningTask, action: Action, var_id: str, t: int
) -> BNNode:
    """Eq.-6-style CPT: parents are the mediator and the previous-layer copy."""
    var = task.variables[var_id]
    values = tuple(stamp(p, t) for p in var.domain)
    affecting: list[tuple[str, str]] = []  # (outcome value id, forced value)
    others: list[str] = []
    for ei, e in enumerate(action.effects):
        for oi, o in enumerate(e.outcomes):
            ov = outcome_value_id(action, t, ei, oi)
            target = outcome_target_value(task, var_id, o.add, o.delete)
            if target is None:
                others.append(ov)
            else:
                affecting.append((ov, target))
    rules = [
        Rule(frozenset({ov}), point_dist(values, stamp(target, t)))
        for ov, target in affecting
    ]
    if len(affecting) == 1:
        # Single affecting outcome: frame rules keyed on the previous value
        # only (they fire when the affecting outcome does not, first-match).
        for p in var.domain:
            rules.append(
                Rule(frozenset({stamp(p, t - 1)}), point_dist(values, stamp(p, t)))
            )
    else:
        for ov in others:
            for p in var.domain:
                rules.append(
                    Rule(
                        frozenset({ov, stamp(p, t - 1)}),
                        point_dist(values, stamp(p, t)),
                    )
                )
    return BNNode(
        stamp(var_id, t), values, (stamp(var_id, t - 1), mediator_name(t)), tuple(rules)
    )


def _det_affected_node(task: PlanningTask, action: Action, var_id: str, t: int) -> BNNode:
    """Deterministic action, affected variable: condition parents, no mediator."""
    var = task.variables[var_id]
    values = tuple(stamp(p, t) for p in var.domain)
    rules: list[Rule] = []
    parent_vars = [var_id]
    for e in action.effects:
        o = e.outcomes[0]
        target = outcome_target_value(task, var_id, o.add, o.delete)
        if target is None:
            continue
        for p in sorted(e.condition):
            v = task.propositions[p].variable
            if v not in parent_vars:
                parent_vars.append(v)
        cond = frozenset(stamp(p, t - 1) for p in e.condition)
        rules.append(Rule(cond, point_dist(values, stamp(target, t))))
    for p in var.domain:  # frame rules, shadowed where an effect matches first
        rules.append(Rule(frozenset({stamp(p, t - 1)}), point_dist(values, stamp(p, t))))
    parents = tuple(stamp(v, t - 1) for v in parent_vars)
    return BNNode(stamp(var_id, t), values, parents, tuple(rules))


def layer_nodes(task: PlanningTask, action: Action, step: int) -> list[BNNode]:
    """The BN nodes describing one application of `action` at time `step`."""
    nodes: list[BNNode] = []
    affected_vars = set()
    for e in action.effects:
        for o in e.outcomes:
            for p in o.add | o.delete:
                affected_vars.add(task.propositions[p].variable)
    if is_probabilistic_action(action):
        nodes.append(_mediator_node(task, action, step))
        for var_id in task.variables:
            if var_id in affected_vars:
                nodes.append(_prob_affected_node(task, action, var_id, step))
            else:
                nodes.append(_persistence_node(task, var_id, step))
    else:
        for var_id in task.variables:
            if var_id in affected_vars:
                nodes.append(_det_affected_node(task, action, var_id, step))
            else:
                nodes.append(_persistence_node(task, var_id, step))
    return nodes


def build_belief_bn(task: PlanningTask, seq) -> BeliefBN:
    nodes = _initial_layer_nodes(task)
    for step, action in enumerate(seq, start=1):
        nodes.extend(layer_nodes(task, action, step))
    owner = {v: n.name for n in nodes for v in n.values}
    return BeliefBN(nodes=nodes, steps=len(list(seq)), value_owner=owner)


def extend_bn(bn: BeliefBN, task: PlanningTask, action: Action):
    """One-layer extension.  Returns (new bn, list of appended nodes); the
    original bn is left untouched and its node objects are shared."""
    new_nodes = layer_nodes(task, action, bn.steps + 1)
    owner = dict(bn.value_owner)
    for n in new_nodes:
        for v in n.values:
            owner[v] = n.name
    return (
        BeliefBN(nodes=bn.nodes + new_nodes, steps=bn.steps + 1, value_owner=owner),
        new_nodes,
    )


def node_distribution(node: BNNode, parent_assignment: frozenset[str]) -> tuple[float, ...]:
    """First matching rule wins; the rule lists are total by construction."""
    for rule in node.rules:
        if rule.condition <= parent_assignment:
            return rule.dist
    raise AssertionError(f"no rule of {node.name} matches {sorted(parent_assignment)}")


def bn_joint_marginal(bn: BeliefBN, query, cap: int = ENUM_CAP) -> float:
    """Exact marginal probability of a partial assignment (set of value ids),
    by exhaustive enumeration.  Test oracle only."""
    query = frozenset(query)
    total = 1
    for n in bn.nodes:
        total *= len(n.values)
        if total > cap:
            raise OverflowError("joint enumeration cap exceeded")
    prob = 0.0
    for combo in itertools.product(*[n.values for n in bn.nodes]):
        assignment = frozenset(combo)
        if not query <= assignment:
            continue
        p = 1.0
        for n, value in zip(bn.nodes, combo):
            dist = node_distribution(n, assignment)
            p *= dist[n.values.index(value)]
            if p == 0.0:
                break
        prob += p
    return prob


def description_size(bn: BeliefBN) -> int:
    return sum(
        1 + len(n.parents) + sum(len(r.condition) + len(r.dist) for r in n.rules)
        for n in bn.nodes
    )


def dump_bn(bn: BeliefBN) -> str:
    """Readable text form: node, parents, rules."""
    out = []
    for n in bn.nodes:
        out.append(f"node {n.name} values=" + ",".join(n.values))
        if n.parents:
            out.append("  parents " + ",".join(n.parents))
        for r in n.rules:
            cond = " & ".join(sorted(r.condition)) if r.condition else "*"
            dist = ", ".join(
                f"{v}={w:g}" for v, w in zip(n.values, r.dist) if w != 0.0
            )
            out.append(f"  rule {cond}: {dist}")
    return "\n".join(out) + "\n"

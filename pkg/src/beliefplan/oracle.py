"""Exact explicit-distribution semantics of tasks.

This module is the ground-truth oracle for every implicit component: beliefs
are represented as explicit distributions over world states, actions transform
them by direct enumeration, and a separate exhaustive procedure computes exact
reachability probabilities under the delete-and-condition relaxation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import (
    Action,
    Effect,
    Outcome,
    PlanningTask,
    PROB_TOL,
    is_deterministic,
)

DEFAULT_ENUM_CAP = 2**24


class EnumerationCapExceeded(Exception):
    pass


class InapplicableAction(Exception):
    pass


World = frozenset  # frozenset of proposition ids, exactly one per variable


@dataclass
class ExplicitBelief:
    dist: dict[World, float]

    def probability(self, props: frozenset[str] | set[str]) -> float:
        props = frozenset(props)
        return sum(p for w, p in self.dist.items() if props <= w)

    def support(self):
        return [w for w, p in self.dist.items() if p > 0.0]


def _worlds(task: PlanningTask):
    domains = [v.domain for v in task.variables.values()]
    for combo in itertools.product(*domains):
        yield frozenset(combo)


def initial_belief(task: PlanningTask, cap: int = DEFAULT_ENUM_CAP) -> ExplicitBelief:
    """The BN joint over complete world states."""
    total = 1
    for v in task.variables.values():
        total *= len(v.domain)
        if total > cap:
            raise EnumerationCapExceeded(f"{total} worlds exceed cap {cap}")
    bn = task.initial
    dist: dict[World, float] = {}
    for w in _worlds(task):
        p = 1.0
        for x in bn.order:
            rows = [r for r in bn.cpts[x] if r.condition <= w]
            assert len(rows) == 1, f"CPT of {x} not a partition"
            value = next(q for q in task.variables[x].domain if q in w)
            p *= rows[0].dist[task.variables[x].domain.index(value)]
            if p == 0.0:
                break
        dist[w] = p
    return ExplicitBelief(dist)


def applicable_effects(action: Action, w: World) -> list[Effect]:
    declared = [e for e in action.effects if not e.otherwise and e.condition <= w]
    if declared:
        return declared
    return [e for e in action.effects if e.otherwise]


def _result_world(task: PlanningTask, w: World, add: set[str], delete: set[str]) -> World:
    w2 = (set(w) - delete) | add
    for var in task.variables.values():
        if sum(1 for q in var.domain if q in w2) != 1:
            raise InapplicableAction(
                f"outcome produces an inconsistent world for variable {var.id}"
            )
    return frozenset(w2)


def apply_action(task: PlanningTask, b: ExplicitBelief, a: Action) -> ExplicitBelief:
    """One application step.  All possible worlds must satisfy pre(a).

    In each world every applicable effect fires; an outcome is drawn
    independently per firing effect (with the usual exactly-one-effect tasks
    there is a single firing effect per world).
    """
    for w in b.support():
        if not (a.precondition <= w):
            raise InapplicableAction(f"{a.id} not applicable: pre not satisfied in {sorted(w)}")
    dist: dict[World, float] = {}
    for w, pw in b.dist.items():
        if pw == 0.0:
            continue
        effs = applicable_effects(a, w)
        for combo in itertools.product(*[e.outcomes for e in effs]):
            p = pw
            add: set[str] = set()
            delete: set[str] = set()
            for o in combo:
                p *= o.probability
                add |= o.add
                delete |= o.delete
            if p == 0.0:
                continue
            w2 = _result_world(task, w, add, delete)
            dist[w2] = dist.get(w2, 0.0) + p
    total = sum(dist.values())
    assert abs(total - 1.0) <= 1e-6, f"belief mass {total} after {a.id}"
    return ExplicitBelief(dist)


def apply_sequence(task: PlanningTask, b: ExplicitBelief, seq) -> ExplicitBelief:
    for a in seq:
        b = apply_action(task, b, a)
    return b


def goal_probability(b: ExplicitBelief, goal) -> float:
    return b.probability(goal)


# ---------------------------------------------------------------------------
# Relaxation |+1 and the exhaustive relaxed-reachability oracle
# ---------------------------------------------------------------------------


def pick_first(condition: frozenset[str], task: PlanningTask) -> frozenset[str]:
    """Condition-selection rule: keep the first proposition in declaration
    order (variable declaration order, then domain order)."""
    if not condition:
        return condition
    order: dict[str, int] = {}
    i = 0
    for var in task.variables.values():
        for p in var.domain:
            order[p] = i
            i += 1
    return frozenset({min(condition, key=lambda p: order[p])})


def relax_action(a: Action, task: PlanningTask) -> Action:
    """a|+1: empty delete lists; conditions reduced to at most one proposition."""
    effects = []
    for e in a.effects:
        cond = pick_first(e.condition, task)
        outs = tuple(Outcome(o.probability, o.add, frozenset()) for o in e.outcomes)
        effects.append(Effect(cond, outs, e.otherwise))
    return Action(a.id, a.precondition, tuple(effects))


def _relaxed_applicable_effects(action: Action, s: frozenset[str]) -> list[Effect]:
    # Relaxed semantics over monotone fact sets: an effect fires when its
    # (reduced) condition is contained in the accumulated set; the catch-all
    # fires when no declared condition does.
    declared = [e for e in action.effects if not e.otherwise and e.condition <= s]
    if declared:
        return declared
    return [e for e in action.effects if e.otherwise]


def _relaxed_step(dist: dict[frozenset[str], float], actions) -> dict[frozenset[str], float]:
    out: dict[frozenset[str], float] = {}
    for s, ps in dist.items():
        effs = []
        for a in actions:
            if a.precondition <= s:
                effs.extend(_relaxed_applicable_effects(a, s))
        for combo in itertools.product(*[e.outcomes for e in effs]):
            p = ps
            s2 = set(s)
            for o in combo:
                p *= o.probability
                s2 |= o.add
            if p == 0.0:
                continue
            key = frozenset(s2)
            out[key] = out.get(key, 0.0) + p
    return out


def relaxed_reach_probability(
    task: PlanningTask,
    relaxed_past: list[Action],
    horizon: int,
    target,
    cap_props: int = 16,
) -> float:
    """Exact probability that, starting from the initial belief, executing the
    given (already relaxed) past actions and then *all* relaxed task actions at
    every later step accumulates the target proposition(s) by `horizon`.

    Fact sets are monotone (no deletes).  `horizon` counts layers after the
    past sequence; targets may be a single proposition id or a set.
    """
    n_props = len(task.propositions)
    if n_props > cap_props or horizon > 8:
        raise EnumerationCapExceeded("relaxed oracle size cap exceeded")
    targets = frozenset({target} if isinstance(target, str) else target)
    b0 = initial_belief(task)
    dist: dict[frozenset[str], float] = {}
    for w, p in b0.dist.items():
        if p > 0.0:
            dist[w] = dist.get(w, 0.0) + p
    for a in relaxed_past:
        dist = _relaxed_step(dist, [a])
    all_relaxed = [relax_action(a, task) for a in task.actions]
    for _ in range(horizon):
        if all(targets <= s for s in dist):
            break
        dist = _relaxed_step(dist, all_relaxed)
    return sum(p for s, p in dist.items() if targets <= s)

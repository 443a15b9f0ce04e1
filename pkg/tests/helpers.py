"""Shared test fixtures: the robot/block example task and random task generation.

The robot/block task: a robot and a block each at one of two locations.
Moving without the block is deterministic; moving with the block succeeds with
probability 0.7, moves the robot alone with 0.2, and fails with 0.1.  The
initial belief has Pr(r1) = 0.9, Pr(b1 | r1) = 0.7, Pr(b1 | r2) = 0.2.
"""

from __future__ import annotations

import random

from beliefplan.model import (
    Action,
    CPTRow,
    Effect,
    InitialBeliefNet,
    Outcome,
    PlanningTask,
    Proposition,
    StateVariable,
    add_catchall_effects,
    parse_task,
    validate_task,
)

ROBOT_BLOCK_TEXT = """
# robot/block example
vars:
  R = r1 | r2
  B = b1 | b2

bn:
  node R:
    row *: r1 = 0.9, r2 = 0.1
  node B parents R:
    row r1: b1 = 0.7, b2 = 0.3
    row r2: b1 = 0.2, b2 = 0.8

actions:
  action move-right:
    pre:
    effect when r1:
      outcome 1.0: add r2 del r1
  action move-left:
    pre:
    effect when r2:
      outcome 1.0: add r1 del r2
  action move-b-right:
    pre:
    effect when r1, b1:
      outcome 0.7: add r2, b2 del r1, b1
      outcome 0.2: add r2 del r1
      outcome 0.1:
    effect otherwise:
      outcome 1.0:
  action move-b-left:
    pre:
    effect when r2, b2:
      outcome 0.7: add r1, b1 del r2, b2
      outcome 0.2: add r1 del r2
      outcome 0.1:
    effect otherwise:
      outcome 1.0:

goal: r1, b2
theta: 0.9
"""


def robot_block_task() -> PlanningTask:
    return parse_task(ROBOT_BLOCK_TEXT)


def heuristic_example_task() -> PlanningTask:
    """The two-action variant used by the worked heuristic example:
    only move-b-right and move-left are available."""
    task = robot_block_task()
    actions = tuple(a for a in task.actions if a.id in ("move-b-right", "move-left"))
    import dataclasses

    return dataclasses.replace(task, actions=actions)


# ---------------------------------------------------------------------------
# Random task generation (small instances for oracle cross-checks)
# ---------------------------------------------------------------------------


def random_task(
    rng: random.Random,
    max_vars: int = 4,
    max_dom: int = 3,
    max_actions: int = 4,
    probabilistic: bool = True,
    with_preconditions: bool = False,
) -> PlanningTask:
    n_vars = rng.randint(1, max_vars)
    variables: dict[str, StateVariable] = {}
    propositions: dict[str, Proposition] = {}
    for i in range(n_vars):
        vid = f"V{i}"
        dom = tuple(f"v{i}_{j}" for j in range(rng.randint(2, max_dom)))
        variables[vid] = StateVariable(vid, dom)
        for p in dom:
            propositions[p] = Proposition(p, vid)
    var_ids = list(variables)

    # Random BN: parents drawn from earlier variables, rule rows per parent
    # assignment (dense) to keep coverage trivially exact.
    order = tuple(var_ids)
    parents: dict[str, tuple[str, ...]] = {}
    cpts: dict[str, tuple[CPTRow, ...]] = {}
    import itertools

    for i, x in enumerate(order):
        cand = list(order[:i])
        rng.shuffle(cand)
        pars = tuple(sorted(cand[: rng.randint(0, min(2, len(cand)))]))
        parents[x] = pars
        rows = []
        doms = [variables[p].domain for p in pars]
        for combo in itertools.product(*doms):
            k = len(variables[x].domain)
            raw = [rng.random() for _ in range(k)]
            if rng.random() < 0.3:  # occasionally deterministic / zero entries
                j = rng.randrange(k)
                raw = [1.0 if jj == j else 0.0 for jj in range(k)]
            s = sum(raw)
            dist = tuple(r / s for r in raw)
            rows.append(CPTRow(frozenset(combo), dist))
        cpts[x] = tuple(rows)

    def random_outcome(affected: list[str], cond_value: dict[str, str]) -> Outcome:
        add: set[str] = set()
        delete: set[str] = set()
        for v in affected:
            dom = variables[v].domain
            new = rng.choice(dom)
            add.add(new)
            if v in cond_value:
                old = cond_value[v]
                if old != new:
                    delete.add(old)
                else:
                    add.discard(new)
                    if rng.random() < 0.5:
                        add.add(new)  # re-adding the current value is legal
            else:
                # Unknown previous value: delete all other values so the
                # result is a consistent world in every case.
                delete.update(p for p in dom if p != new)
        add -= delete & add  # safety; disjoint by construction
        return Outcome(0.0, frozenset(add), frozenset(delete))

    actions: list[Action] = []
    for ai in range(rng.randint(1, max_actions)):
        pre = frozenset()
        if with_preconditions and rng.random() < 0.3:
            v = rng.choice(var_ids)
            pre = frozenset({rng.choice(variables[v].domain)})
        # Conditions: values of one chosen variable -> mutually exclusive.
        effects: list[Effect] = []
        if rng.random() < 0.7:
            cv = rng.choice(var_ids)
            n_effects = rng.randint(1, len(variables[cv].domain))
            cond_values = rng.sample(list(variables[cv].domain), n_effects)
        else:
            cv = None
            cond_values = [None]
        for cval in cond_values:
            cond = frozenset() if cval is None else frozenset({cval})
            cond_value = {} if cval is None else {cv: cval}
            affected_pool = var_ids
            n_out = rng.randint(1, 3) if probabilistic else 1
            outs = []
            for _ in range(n_out):
                affected = [v for v in affected_pool if rng.random() < 0.5]
                outs.append(random_outcome(affected, cond_value))
            raw = [rng.random() + 0.05 for _ in outs]
            s = sum(raw)
            outs = [
                Outcome(r / s, o.add, o.delete) for r, o in zip(raw, outs)
            ]
            # Exact normalization: set the last probability by difference.
            total = sum(o.probability for o in outs[:-1])
            outs[-1] = Outcome(1.0 - total, outs[-1].add, outs[-1].delete)
            effects.append(Effect(cond, tuple(outs)))
        actions.append(Action(f"a{ai}", pre, tuple(effects)))

    goal_vars = rng.sample(var_ids, rng.randint(1, n_vars))
    goal = frozenset(rng.choice(variables[v].domain) for v in goal_vars)

    task = PlanningTask(
        variables=variables,
        propositions=propositions,
        actions=tuple(actions),
        initial=InitialBeliefNet(order=order, parents=parents, cpts=cpts),
        goal=goal,
        theta=rng.random(),
    )
    task = add_catchall_effects(task)
    assert validate_task(task) == [], validate_task(task)
    return task

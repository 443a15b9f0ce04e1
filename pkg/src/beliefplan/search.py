"""Forward search in the belief space.

The default strategy runs one trial of enforced hill-climbing (EHC) and, if
that fails, restarts with greedy best-first search from the root.  EHC keeps
an incumbent node and breadth-first searches its successors (plateau depth
capped) for a strictly smaller heuristic value; the heuristic is the length
of the relaxed plan extracted from the node's probabilistic relaxed planning
graph, infinity when the graph build proves the belief a dead end (such nodes
are pruned).  Emitted plans are re-validated against the exact
explicit-belief oracle whenever the state space fits under the enumeration
cap.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass, field

from .extract import extract_relaxed_plan
from .model import PlanningTask
from .oracle import (
    EnumerationCapExceeded,
    apply_sequence,
    goal_probability,
    initial_belief,
)
from .prpg import DEFAULT_HORIZON, RootInfo, build_prpg, initial_root_info
from .space import BeliefNode, applicable_actions, root_node, successor

VALIDATION_TOL = 2e-9  # theta slack: goal-test tolerance + oracle agreement

STATUS_PLAN_FOUND = "plan-found"
STATUS_UNSOLVABLE = "proven-unsolvable-at-root"
STATUS_EXHAUSTED = "resource-exhausted"


@dataclass
class SearchConfig:
    strategy: str = "ehc-then-bfs"  # ehc-then-bfs | ehc | bfs
    horizon: int = DEFAULT_HORIZON
    max_nodes: int = 1_000_000
    max_seconds: float = 60.0
    plateau_depth: int = 6  # EHC breadth-first lookahead cap
    use_g_plus_h: bool = False  # best-first on g+h instead of pure h
    helpful_actions: bool = False  # reserved; no pruning implemented

    def __post_init__(self):
        assert self.strategy in ("ehc-then-bfs", "ehc", "bfs"), self.strategy
        assert self.horizon > 0 and self.max_nodes > 0
        assert self.max_seconds > 0 and self.plateau_depth > 0


@dataclass
class SearchResult:
    status: str
    plan: tuple[str, ...] | None  # action ids, or None unless plan-found
    stats: dict = field(default_factory=dict)

    @property
    def length(self) -> int | None:
        return len(self.plan) if self.plan is not None else None


class _Budget:
    def __init__(self, config: SearchConfig):
        self.max_nodes = config.max_nodes
        self.deadline = time.monotonic() + config.max_seconds
        self.nodes = 0

    def spent(self) -> bool:
        return self.nodes >= self.max_nodes or time.monotonic() > self.deadline

    def charge(self) -> None:
        self.nodes += 1


def evaluate(node: BeliefNode, root: RootInfo | None = None,
             horizon: int = DEFAULT_HORIZON, counters=None):
    """Heuristic value of a belief node: 0 when the goal test is satisfied,
    the extracted relaxed plan's length (at least 1) otherwise, or infinity
    when the graph build fails.  Returns (h, horizon_capped)."""
    if node.goal_satisfied():
        return 0, False
    prpg = build_prpg(node, horizon=horizon, counters=counters, root=root)
    if not prpg.success:
        return math.inf, prpg.horizon_capped
    plan = extract_relaxed_plan(prpg, counters)
    return max(1, plan.length), False


def _ordered_actions(node):
    """Applicable actions, those not already on the node's path first (stable
    within each class).  Repeating an action frequently reproduces the same
    belief, so fresh actions tend to reach an improving successor sooner;
    completeness is unaffected (plateau and best-first search still visit
    every child)."""
    used = {a.id for a in node.sequence}
    return sorted(applicable_actions(node), key=lambda a: a.id in used)


def _validate(task: PlanningTask, plan, counters) -> float | None:
    """Exact goal probability of the plan, or None when the explicit state
    space exceeds the enumeration cap."""
    try:
        b = initial_belief(task)
    except EnumerationCapExceeded:
        return None
    b = apply_sequence(task, b, [task.action(a) for a in plan])
    prob = goal_probability(b, task.goal)
    assert prob >= task.theta - VALIDATION_TOL, (prob, task.theta)
    counters["validated_prob"] = prob
    return prob


def _found(task, node, counters, budget, started) -> SearchResult:
    plan = tuple(a.id for a in node.sequence)
    _validate(task, plan, counters)
    return _finish(STATUS_PLAN_FOUND, plan, counters, budget, started)


def _finish(status, plan, counters, budget, started) -> SearchResult:
    stats = dict(counters)
    stats["nodes"] = budget.nodes
    stats["wall_time"] = time.monotonic() - started
    if plan is not None:
        stats["plan_length"] = len(plan)
    return SearchResult(status, plan, stats)


def _ehc(task, root, h_root, root_info, config, budget, counters):
    """One enforced hill-climbing trial.  Returns the goal node or None."""
    incumbent, h_inc = root, h_root
    while h_inc > 0:
        found = None
        seen = {incumbent.key}
        queue = deque([(incumbent, 0)])
        while queue and found is None:
            node, depth = queue.popleft()
            if depth >= config.plateau_depth:
                continue
            for a in _ordered_actions(node):
                if budget.spent():
                    return None
                child = successor(node, a, counters)
                if child.key in seen:
                    continue
                seen.add(child.key)
                budget.charge()
                h, _ = evaluate(child, root_info, config.horizon, counters)
                counters["heuristic_calls"] += 1
                if h == math.inf:
                    continue
                if h < h_inc:
                    found = (child, h)
                    break
                queue.append((child, depth + 1))
        if found is None:
            return None
        incumbent, h_inc = found
    return incumbent


def _best_first(task, root, h0, root_info, config, budget, counters):
    """Greedy best-first on h (g+h behind the flag), declaration-order
    tie-breaks via insertion order.  Returns the goal node or None."""
    tick = 0
    open_heap = [(h0 + (root.depth if config.use_g_plus_h else 0), tick, root)]
    closed = {root.key}
    while open_heap:
        if budget.spent():
            return None
        _f, _tick, node = heapq.heappop(open_heap)
        if node.goal_satisfied():
            return node
        for a in _ordered_actions(node):
            if budget.spent():
                return None
            child = successor(node, a, counters)
            if child.key in closed:
                continue
            closed.add(child.key)
            budget.charge()
            h, _ = evaluate(child, root_info, config.horizon, counters)
            counters["heuristic_calls"] += 1
            if h == math.inf:
                continue
            if h == 0:
                return child
            tick += 1
            f = h + (child.depth if config.use_g_plus_h else 0)
            heapq.heappush(open_heap, (f, tick, child))
    return None


def plan(task: PlanningTask, config: SearchConfig | None = None) -> SearchResult:
    if config is None:
        config = SearchConfig()
    started = time.monotonic()
    counters: dict = {}
    budget = _Budget(config)
    root = root_node(task, counters)
    budget.charge()
    if root.goal_satisfied():
        return _found(task, root, counters, budget, started)
    root_info = initial_root_info(task, counters)
    h0, capped = evaluate(root, root_info, config.horizon, counters)
    counters["heuristic_calls"] = counters.get("heuristic_calls", 0) + 1
    if h0 == math.inf:
        # A failed build at the root proves the task unsolvable -- unless the
        # build merely ran out of layers.
        status = STATUS_EXHAUSTED if capped else STATUS_UNSOLVABLE
        return _finish(status, None, counters, budget, started)
    goal = None
    if config.strategy in ("ehc-then-bfs", "ehc"):
        goal = _ehc(task, root, h0, root_info, config, budget, counters)
    if goal is None and config.strategy in ("ehc-then-bfs", "bfs"):
        goal = _best_first(task, root, h0, root_info, config, budget, counters)
    if goal is not None:
        return _found(task, goal, counters, budget, started)
    return _finish(STATUS_EXHAUSTED, None, counters, budget, started)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

STATS_HEADER = "instance,theta,status,t,|S|,l,wmc_calls"


def format_plan(result: SearchResult) -> str:
    """One action id per line."""
    return "".join(a + "\n" for a in (result.plan or ()))


def format_stats_row(instance: str, theta: float, result: SearchResult) -> str:
    length = "" if result.plan is None else str(len(result.plan))
    return ",".join([
        instance,
        f"{theta:g}",
        result.status,
        f"{result.stats.get('wall_time', 0.0):.3f}",
        str(result.stats.get("nodes", 0)),
        length,
        str(result.stats.get("wmc_calls", 0)),
    ])

"""Command-line front end.

Subcommands: plan, validate, count, encode, gen, bench.  Exit codes: 0 when a
plan is found (or the requested report succeeds), 1 when the task is proven
unsolvable at the root, 2 when a resource limit is hit, 3 on input errors.
Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import random
import sys
from pathlib import Path

from . import benchgen
from .model import PlanningTask, TaskError, parse_task, serialize_task
from .oracle import (
    EnumerationCapExceeded,
    InapplicableAction,
    apply_action,
    applicable_effects,
    goal_probability,
    initial_belief,
    _result_world,
)
from .search import (
    STATUS_EXHAUSTED,
    STATUS_PLAN_FOUND,
    STATUS_UNSOLVABLE,
    SearchConfig,
    format_plan,
    format_stats_row,
    plan as run_search,
)
from .space import is_applicable, root_node, successor
from .wcnf import to_dimacs

EXIT_PLAN_FOUND = 0
EXIT_UNSOLVABLE = 1
EXIT_RESOURCE = 2
EXIT_INPUT_ERROR = 3

_STATUS_EXIT = {
    STATUS_PLAN_FOUND: EXIT_PLAN_FOUND,
    STATUS_UNSOLVABLE: EXIT_UNSOLVABLE,
    STATUS_EXHAUSTED: EXIT_RESOURCE,
}

WILSON_Z_99 = 2.5758  # two-sided 99% normal quantile


class InputError(Exception):
    pass


def _load_task(path: str, theta: float | None) -> PlanningTask:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read task file {path}: {exc}") from exc
    try:
        task = parse_task(text)
    except TaskError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if theta is not None:
        if not (0.0 < theta <= 1.0):
            raise InputError(f"theta must be in (0, 1], got {theta}")
        task = dataclasses.replace(task, theta=theta)
    return task


def _load_plan(path: str, task: PlanningTask):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read plan file {path}: {exc}") from exc
    actions = []
    for line in lines:
        name = line.strip()
        if not name or name.startswith("#"):
            continue
        try:
            actions.append(task.action(name))
        except KeyError:
            raise InputError(f"{path}: unknown action {name!r}") from None
    return actions


def _search_config(args) -> SearchConfig:
    strategy = {"auto": "ehc-then-bfs", "ehc": "ehc", "bfs": "bfs"}[args.search]
    return SearchConfig(
        strategy=strategy,
        horizon=args.horizon_cap,
        max_nodes=args.node_limit,
        max_seconds=args.time_limit,
    )


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def cmd_plan(args) -> int:
    task = _load_task(args.task, args.theta)
    result = run_search(task, _search_config(args))
    instance = Path(args.task).stem
    print(format_stats_row(instance, task.theta, result), file=sys.stderr)
    if result.status == STATUS_PLAN_FOUND:
        _write_output(format_plan(result), args.output)
    else:
        print(f"{instance}: {result.status}", file=sys.stderr)
    return _STATUS_EXIT[result.status]


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _validate_exact(task: PlanningTask, actions) -> float:
    b = initial_belief(task)
    for k, a in enumerate(actions, 1):
        try:
            b = apply_action(task, b, a)
        except InapplicableAction as exc:
            raise InputError(f"inapplicable action at step {k}: {exc}") from exc
    return goal_probability(b, task.goal)


def _sample_world(task: PlanningTask, rng: random.Random):
    w: set[str] = set()
    bn = task.initial
    for x in bn.order:
        rows = [r for r in bn.cpts[x] if r.condition <= w]
        assert len(rows) == 1, f"CPT of {x} not a partition"
        dom = task.variables[x].domain
        w.add(rng.choices(dom, weights=rows[0].dist)[0])
    return frozenset(w)


def _simulate(task: PlanningTask, actions, rng: random.Random) -> bool:
    """One forward trial: ancestral-sample an initial world, then sample each
    action's effect outcomes.  Returns whether the goal holds at the end."""
    w = _sample_world(task, rng)
    for k, a in enumerate(actions, 1):
        if not (a.precondition <= w):
            raise InputError(
                f"inapplicable action at step {k}: {a.id} precondition "
                f"not satisfied")
        add: set[str] = set()
        delete: set[str] = set()
        for e in applicable_effects(a, w):
            o = rng.choices(e.outcomes, weights=[o.probability for o in e.outcomes])[0]
            add |= o.add
            delete |= o.delete
        w = _result_world(task, w, add, delete)
    return task.goal <= w


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z_99):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def _validate_mc(task: PlanningTask, actions, samples: int, seed: int):
    rng = random.Random(seed)
    hits = 0
    for _ in range(samples):
        hits += _simulate(task, actions, rng)
    lo, hi = wilson_interval(hits, samples)
    return hits / samples, lo, hi


def cmd_validate(args) -> int:
    task = _load_task(args.task, args.theta)
    actions = _load_plan(args.plan, task)
    if args.mode == "exact":
        try:
            prob = _validate_exact(task, actions)
        except EnumerationCapExceeded as exc:
            raise InputError(
                f"state space too large for exact validation ({exc}); "
                f"use --mode mc") from exc
        ok = prob >= task.theta - 1e-9
        print(f"goal-probability exact {prob:.12g} theta {task.theta:g} "
              f"{'pass' if ok else 'fail'}")
    else:
        est, lo, hi = _validate_mc(task, actions, args.samples, args.seed)
        ok = lo >= task.theta - 0.02
        print(f"goal-probability mc {est:.6g} ci99 [{lo:.6g}, {hi:.6g}] "
              f"samples {args.samples} seed {args.seed} theta {task.theta:g} "
              f"{'pass' if ok else 'fail'}")
    return EXIT_PLAN_FOUND if ok else EXIT_UNSOLVABLE


# ---------------------------------------------------------------------------
# count / encode  (exact queries on the implicit belief representation)
# ---------------------------------------------------------------------------

def _replay(task: PlanningTask, actions):
    node = root_node(task)
    for k, a in enumerate(actions, 1):
        if not is_applicable(node, a):
            raise InputError(
                f"inapplicable action at step {k}: {a.id} precondition "
                f"not known to hold")
        node = successor(node, a)
    return node


def cmd_count(args) -> int:
    task = _load_task(args.task, args.theta)
    actions = _load_plan(args.plan, task) if args.plan else []
    node = _replay(task, actions)
    print(f"{node.goal_prob:.12g}")
    return EXIT_PLAN_FOUND


def cmd_encode(args) -> int:
    task = _load_task(args.task, args.theta)
    actions = _load_plan(args.plan, task) if args.plan else []
    node = _replay(task, actions)
    _write_output(to_dimacs(node.cnf), args.output)
    return EXIT_PLAN_FOUND


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    kwargs = {}
    if args.theta is not None:
        kwargs["theta"] = args.theta
    if args.family == "cube":
        if args.prior is not None:
            kwargs["prior"] = args.prior
        if args.center:
            kwargs["center"] = True
    elif args.prior is not None or args.center:
        raise InputError("--prior/--center only apply to the cube family")
    try:
        task = benchgen.generate(args.family, *args.params, **kwargs)
    except (ValueError, TypeError, AssertionError) as exc:
        raise InputError(f"cannot generate {args.family}: {exc}") from exc
    name = "-".join([args.family] + [str(p) for p in args.params])
    if args.output is None:
        sys.stdout.write(serialize_task(task))
    else:
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{name}.task"
        path.write_text(serialize_task(task))
        print(path, file=sys.stderr)
    return EXIT_PLAN_FOUND


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_HEADER = ["instance", "theta", "status", "wall_time", "nodes",
                "plan_length", "goal_prob", "seed"]


def _bench_row(path: Path, theta: float | None, args):
    instance = path.stem
    try:
        task = _load_task(str(path), theta)
    except InputError as exc:
        return [instance, "" if theta is None else f"{theta:g}",
                "input-error", "", "", "", "", args.seed], str(exc)
    result = run_search(task, _search_config(args))
    row = [
        instance,
        f"{task.theta:g}",
        result.status,
        f"{result.stats.get('wall_time', 0.0):.3f}",
        result.stats.get("nodes", 0),
        "" if result.plan is None else len(result.plan),
        "",
        args.seed,
    ]
    if result.status == STATUS_PLAN_FOUND:
        prob = result.stats.get("validated_prob")
        if prob is None:
            # State space too large for the oracle: recompute exactly on the
            # implicit representation instead.
            prob = _replay(task, [task.action(a) for a in result.plan]).goal_prob
        row[6] = f"{prob:.12g}"
    return row, None


def cmd_bench(args) -> int:
    try:
        paths = sorted(Path(args.dir).glob("*.task"))
    except OSError as exc:
        raise InputError(f"cannot list {args.dir}: {exc}") from exc
    if not Path(args.dir).is_dir():
        raise InputError(f"not a directory: {args.dir}")
    thetas = None
    if args.theta is not None:
        thetas = [float(t) for t in str(args.theta).split(",") if t]
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(BENCH_HEADER)
        for path in paths:
            for theta in (thetas or [None]):
                try:
                    row, err = _bench_row(path, theta, args)
                except Exception as exc:  # record the failure, keep going
                    row = [path.stem, "" if theta is None else f"{theta:g}",
                           "error", "", "", "", "", args.seed]
                    err = f"{type(exc).__name__}: {exc}"
                writer.writerow(row)
                out.flush()
                if err:
                    print(f"{path.stem}: {err}", file=sys.stderr)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_PLAN_FOUND


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, default=60.0, metavar="SECONDS")
    p.add_argument("--node-limit", type=int, default=1_000_000, metavar="N")
    p.add_argument("--search", choices=("auto", "ehc", "bfs"), default="auto")
    p.add_argument("--horizon-cap", type=int, default=500, metavar="T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefplan",
        description="Conformant planner for probabilistic tasks: forward "
                    "search through implicit belief states with exact "
                    "weighted model counting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="search for a plan")
    p.add_argument("task")
    p.add_argument("--theta", type=float, default=None)
    _add_search_flags(p)
    p.add_argument("-o", "--output", default=None, metavar="FILE")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="report a plan's goal probability")
    p.add_argument("task")
    p.add_argument("plan")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser(
        "count", help="exact goal probability after a plan (model counting)")
    p.add_argument("task")
    p.add_argument("--plan", default=None, metavar="FILE")
    p.add_argument("--theta", type=float, default=None)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser(
        "encode", help="emit the weighted CNF encoding of the belief")
    p.add_argument("task")
    p.add_argument("--plan", default=None, metavar="FILE")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-o", "--output", default=None, metavar="FILE")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("gen", help="generate a benchmark task")
    p.add_argument("family", help=f"one of: {', '.join(sorted(benchgen.FAMILIES))}")
    p.add_argument("params", nargs="*", type=int)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--prior", choices=("uniform", "cubic"), default=None)
    p.add_argument("--center", action="store_true")
    p.add_argument("-o", "--output", default=None, metavar="DIR")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run every task in a directory, emit CSV")
    p.add_argument("dir")
    p.add_argument("--theta", default=None, metavar="LIST",
                   help="comma-separated thetas; default: each file's own")
    _add_search_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None, metavar="CSV")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except KeyboardInterrupt:
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())

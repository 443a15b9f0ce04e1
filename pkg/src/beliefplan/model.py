"""Task model: multi-valued state variables, probabilistic actions, BN-described
initial beliefs, and the line-oriented task file format.

A task is a quadruple (A, b_I, G, theta): actions A with probabilistic
conditional effects, an initial belief b_I described by a Bayesian network over
the state variables, a goal proposition set G, and an acceptance threshold
theta.  World states assign exactly one proposition to every state variable;
single-proposition variables are expanded to a {q, !q} domain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

PROB_TOL = 1e-9

# Cap on assignment enumeration used by syntactic coverage / exclusivity checks.
_ENUM_CAP = 4096


class TaskError(Exception):
    """Base class for task loading problems."""


class TaskSyntaxError(TaskError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TaskValidationError(TaskError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class Proposition:
    id: str
    variable: str


@dataclass(frozen=True)
class StateVariable:
    id: str
    domain: tuple[str, ...]  # proposition ids, declaration order


@dataclass(frozen=True)
class Outcome:
    probability: float
    add: frozenset[str]
    delete: frozenset[str]


@dataclass(frozen=True)
class Effect:
    condition: frozenset[str]
    outcomes: tuple[Outcome, ...]
    # A catch-all effect fires exactly when no declared sibling condition holds.
    otherwise: bool = False


@dataclass(frozen=True)
class Action:
    id: str
    precondition: frozenset[str]
    effects: tuple[Effect, ...]


@dataclass(frozen=True)
class CPTRow:
    condition: frozenset[str]  # partial assignment over parent values
    dist: tuple[float, ...]  # aligned with the node's domain order


@dataclass
class InitialBeliefNet:
    order: tuple[str, ...]  # variable ids, a topological order
    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cpts: dict[str, tuple[CPTRow, ...]] = field(default_factory=dict)


@dataclass
class PlanningTask:
    variables: dict[str, StateVariable]
    propositions: dict[str, Proposition]
    actions: tuple[Action, ...]
    initial: InitialBeliefNet
    goal: frozenset[str]
    theta: float

    def action(self, action_id: str) -> Action:
        for a in self.actions:
            if a.id == action_id:
                return a
        raise KeyError(action_id)

    def var_of(self, prop: str) -> StateVariable:
        return self.variables[self.propositions[prop].variable]


def is_deterministic(effect: Effect) -> bool:
    return len(effect.outcomes) == 1 and abs(effect.outcomes[0].probability - 1.0) <= PROB_TOL


def is_probabilistic_action(action: Action) -> bool:
    return any(not is_deterministic(e) for e in action.effects)


def effect_of_outcome(action: Action, outcome: Outcome) -> Effect:
    for e in action.effects:
        if outcome in e.outcomes:
            return e
    raise KeyError(outcome)


# --------------------------------------------------------------------------
# Static checks
# --------------------------------------------------------------------------


def _conditions_disjoint(task: PlanningTask, c1: frozenset[str], c2: frozenset[str]) -> bool:
    """True if no world satisfies both condition conjunctions (syntactically:
    they fix a common variable to different values)."""
    vals1: dict[str, str] = {}
    for p in c1:
        vals1[task.propositions[p].variable] = p
    for p in c2:
        v = task.propositions[p].variable
        if v in vals1 and vals1[v] != p:
            return True
    return False


def _touched_variables(task: PlanningTask, effect: Effect) -> set[str]:
    out: set[str] = set()
    for o in effect.outcomes:
        for p in o.add | o.delete:
            out.add(task.propositions[p].variable)
    return out


def _covering_assignments(task: PlanningTask, conditions: list[frozenset[str]]):
    """Enumerate assignments over the variables mentioned in the conditions.

    Yields assignments as sets of proposition ids.  Returns None when the
    enumeration would exceed the cap.
    """
    mentioned: list[str] = []
    for c in conditions:
        for p in sorted(c):
            v = task.propositions[p].variable
            if v not in mentioned:
                mentioned.append(v)
    total = 1
    for v in mentioned:
        total *= len(task.variables[v].domain)
        if total > _ENUM_CAP:
            return None
    import itertools

    domains = [task.variables[v].domain for v in mentioned]
    return [frozenset(combo) for combo in itertools.product(*domains)]


def validate_task(task: PlanningTask) -> list[str]:
    """Return the list of invariant violations (empty iff the task is valid)."""
    v: list[str] = []

    seen_props: dict[str, str] = {}
    for var in task.variables.values():
        if len(var.domain) < 2:
            v.append(f"variable {var.id}: domain smaller than 2 after expansion")
        for p in var.domain:
            if p in seen_props:
                v.append(f"proposition {p}: appears in variables {seen_props[p]} and {var.id}")
            seen_props[p] = var.id
            if p not in task.propositions or task.propositions[p].variable != var.id:
                v.append(f"proposition {p}: missing or inconsistent registration")

    # Actions
    for a in task.actions:
        n_otherwise = sum(1 for e in a.effects if e.otherwise)
        if n_otherwise > 1:
            v.append(f"action {a.id}: multiple catch-all effects")
        if n_otherwise and not a.effects[-1].otherwise:
            v.append(f"action {a.id}: catch-all effect must be last")
        for idx, e in enumerate(a.effects):
            total = sum(o.probability for o in e.outcomes)
            if not e.outcomes:
                v.append(f"action {a.id} effect {idx}: no outcomes")
                continue
            if abs(total - 1.0) > PROB_TOL:
                v.append(f"action {a.id} effect {idx}: distribution not normalized (sum={total!r})")
            for o in e.outcomes:
                if o.probability <= 0:
                    v.append(f"action {a.id} effect {idx}: outcome probability not in (0,1]")
                if o.add & o.delete:
                    v.append(f"action {a.id} effect {idx}: add and delete lists intersect")
                for var_id in sorted({task.propositions[p].variable for p in o.add | o.delete}):
                    added = [p for p in o.add if task.propositions[p].variable == var_id]
                    if len(added) > 1:
                        v.append(
                            f"action {a.id} effect {idx}: outcome adds two values of {var_id}"
                        )
                    dom = set(task.variables[var_id].domain)
                    if not added and len(dom) > 2:
                        v.append(
                            f"action {a.id} effect {idx}: outcome deletes from multi-valued "
                            f"variable {var_id} without adding a value"
                        )
        declared = [e for e in a.effects if not e.otherwise]
        for i, e1 in enumerate(declared):
            for e2 in declared[i + 1 :]:
                if _conditions_disjoint(task, e1.condition, e2.condition):
                    continue
                # Jointly applicable pair.
                t1, t2 = _touched_variables(task, e1), _touched_variables(task, e2)
                if t1 & t2:
                    v.append(
                        f"action {a.id}: jointly applicable effects touch shared "
                        f"variable(s) {sorted(t1 & t2)}"
                    )
                adds1 = {p for o in e1.outcomes for p in o.add}
                dels1 = {p for o in e1.outcomes for p in o.delete}
                adds2 = {p for o in e2.outcomes for p in o.add}
                dels2 = {p for o in e2.outcomes for p in o.delete}
                if (adds1 & dels2) or (adds2 & dels1):
                    v.append(f"action {a.id}: self-contradictory jointly applicable effects")
                if not is_deterministic(e1) or not is_deterministic(e2):
                    v.append(
                        f"action {a.id}: probabilistic effects must have mutually "
                        f"exclusive conditions (exactly-one-effect semantics)"
                    )

    # Initial BN
    bn = task.initial
    if set(bn.order) != set(task.variables):
        v.append("initial BN: node set differs from the task's variable set")
    pos = {x: i for i, x in enumerate(bn.order)}
    for x in bn.order:
        for p in bn.parents.get(x, ()):
            if p not in pos:
                v.append(f"initial BN node {x}: unknown parent {p}")
            elif pos[p] >= pos[x]:
                v.append(f"initial BN node {x}: parent {p} does not precede it (cycle?)")
        rows = bn.cpts.get(x, ())
        dom = task.variables[x].domain if x in task.variables else ()
        parent_doms = [task.variables[p].domain for p in bn.parents.get(x, ()) if p in task.variables]
        for ridx, row in enumerate(rows):
            if len(row.dist) != len(dom):
                v.append(f"initial BN node {x} row {ridx}: wrong distribution arity")
                continue
            if abs(sum(row.dist) - 1.0) > PROB_TOL:
                v.append(f"initial BN node {x} row {ridx}: row not normalized")
            if any(w < 0 for w in row.dist):
                v.append(f"initial BN node {x} row {ridx}: negative entry")
            for p in row.condition:
                if task.propositions.get(p, Proposition("", "")).variable not in bn.parents.get(x, ()):
                    v.append(f"initial BN node {x} row {ridx}: condition {p} is not a parent value")
        total = 1
        for d in parent_doms:
            total *= len(d)
        if total <= _ENUM_CAP:
            import itertools

            for combo in itertools.product(*parent_doms):
                world = frozenset(combo)
                matches = [r for r in rows if r.condition <= world]
                if len(matches) != 1:
                    v.append(
                        f"initial BN node {x}: parent assignment {sorted(world)} covered by "
                        f"{len(matches)} rows (expected exactly one)"
                    )
                    break

    # Goal
    goal_vars = [task.propositions[p].variable for p in sorted(task.goal)]
    if len(goal_vars) != len(set(goal_vars)):
        v.append("goal: assigns more than one proposition to a variable")

    if not (0.0 <= task.theta <= 1.0):
        v.append("theta: outside [0,1]")

    return v


def add_catchall_effects(task: PlanningTask) -> PlanningTask:
    """Ensure every action's effect conditions cover all worlds by appending a
    null catch-all effect (no adds/deletes) where needed."""
    new_actions = []
    for a in task.actions:
        if any(e.otherwise for e in a.effects) or any(not e.condition for e in a.effects):
            new_actions.append(a)
            continue
        assignments = _covering_assignments(task, [e.condition for e in a.effects])
        covered = assignments is not None and all(
            any(e.condition <= w for e in a.effects) for w in assignments
        )
        if covered:
            new_actions.append(a)
        else:
            null = Effect(
                condition=frozenset(),
                outcomes=(Outcome(1.0, frozenset(), frozenset()),),
                otherwise=True,
            )
            new_actions.append(replace(a, effects=a.effects + (null,)))
    return replace(task, actions=tuple(new_actions))


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_NAME = r"[A-Za-z0-9_\-!][A-Za-z0-9_\-'!]*"
_name_re = re.compile(rf"^{_NAME}$")


def _split_list(text: str) -> list[str]:
    items = [t for chunk in text.split(",") for t in chunk.split()]
    return [i for i in items if i]


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.variables: dict[str, StateVariable] = {}
        self.propositions: dict[str, Proposition] = {}
        self.bn_order: list[str] = []
        self.bn_parents: dict[str, tuple[str, ...]] = {}
        self.bn_cpts: dict[str, tuple[CPTRow, ...]] = {}
        self.actions: list[Action] = []
        self.goal: frozenset[str] | None = None
        self.theta: float | None = None

    def err(self, msg: str, ln: int) -> TaskSyntaxError:
        return TaskSyntaxError(msg, ln + 1)

    def prop(self, name: str, ln: int) -> str:
        if name not in self.propositions:
            raise self.err(f"undeclared proposition {name!r}", ln)
        return name

    def prop_list(self, text: str, ln: int) -> frozenset[str]:
        return frozenset(self.prop(n, ln) for n in _split_list(text))

    def parse(self) -> PlanningTask:
        i = 0
        n = len(self.lines)

        def strip(ln: str) -> str:
            return ln.split("#", 1)[0].strip()

        while i < n:
            line = strip(self.lines[i])
            if not line:
                i += 1
                continue
            if line == "vars:":
                i = self.parse_vars(i + 1)
            elif line == "bn:":
                i = self.parse_bn(i + 1)
            elif line == "actions:":
                i = self.parse_actions(i + 1)
            elif line.startswith("goal:"):
                if self.goal is not None:
                    raise self.err("duplicate goal section", i)
                self.goal = self.prop_list(line[len("goal:") :], i)
                i += 1
            elif line.startswith("theta:"):
                if self.theta is not None:
                    raise self.err("duplicate theta section", i)
                try:
                    self.theta = float(line[len("theta:") :].strip())
                except ValueError:
                    raise self.err("theta is not a number", i) from None
                i += 1
            else:
                raise self.err(f"unexpected top-level line {line!r}", i)

        if self.goal is None:
            raise TaskSyntaxError("missing goal section")
        if self.theta is None:
            raise TaskSyntaxError("missing theta section")
        for x in self.variables:
            if x not in self.bn_order:
                raise TaskSyntaxError(f"variable {x} has no node in the bn section")

        task = PlanningTask(
            variables=self.variables,
            propositions=self.propositions,
            actions=tuple(self.actions),
            initial=InitialBeliefNet(
                order=tuple(self.bn_order), parents=self.bn_parents, cpts=self.bn_cpts
            ),
            goal=self.goal,
            theta=self.theta,
        )
        task = add_catchall_effects(task)
        violations = validate_task(task)
        if violations:
            raise TaskValidationError(violations)
        return task

    def _section_lines(self, i: int):
        """Yield (index, stripped line) until the next top-level section."""
        headers = ("vars:", "bn:", "actions:", "goal:", "theta:")
        while i < len(self.lines):
            line = self.lines[i].split("#", 1)[0].strip()
            if not line:
                i += 1
                continue
            if line == "vars:" or line == "bn:" or line == "actions:" or any(
                line.startswith(h) for h in ("goal:", "theta:")
            ):
                return
            yield i, line
            i += 1

    def parse_vars(self, i: int) -> int:
        for idx, line in self._section_lines(i):
            if "=" not in line:
                raise self.err("variable line must look like 'name = p1 | p2'", idx)
            name, rhs = (s.strip() for s in line.split("=", 1))
            if not _name_re.match(name) or name.startswith("!"):
                raise self.err(f"bad variable name {name!r}", idx)
            if name in self.variables:
                raise self.err(f"duplicate variable {name!r}", idx)
            values = [s.strip() for s in rhs.split("|") if s.strip()]
            if not values:
                raise self.err("variable needs at least one proposition", idx)
            if len(values) == 1:
                values.append("!" + values[0])
            for p in values:
                if not _name_re.match(p):
                    raise self.err(f"bad proposition name {p!r}", idx)
                if p in self.propositions:
                    raise self.err(f"duplicate proposition {p!r}", idx)
                self.propositions[p] = Proposition(p, name)
            self.variables[name] = StateVariable(name, tuple(values))
            i = idx + 1
        return i

    def parse_bn(self, i: int) -> int:
        node: str | None = None
        rows: list[CPTRow] = []

        def flush(idx):
            nonlocal node, rows
            if node is not None:
                self.bn_cpts[node] = tuple(rows)
                self.bn_order.append(node)
            node, rows = None, []

        last = i
        for idx, line in self._section_lines(i):
            last = idx + 1
            if line.startswith("node "):
                flush(idx)
                body = line[len("node ") :].rstrip(":").strip()
                if " parents " in body:
                    name, plist = body.split(" parents ", 1)
                    parents = tuple(_split_list(plist))
                else:
                    name, parents = body, ()
                name = name.strip()
                if name not in self.variables:
                    raise self.err(f"bn node {name!r} is not a declared variable", idx)
                if name in self.bn_cpts:
                    raise self.err(f"duplicate bn node {name!r}", idx)
                for p in parents:
                    if p not in self.variables:
                        raise self.err(f"unknown parent variable {p!r}", idx)
                self.bn_parents[name] = parents
                node = name
            elif line.startswith("row "):
                if node is None:
                    raise self.err("row outside a node block", idx)
                body = line[len("row ") :]
                if ":" not in body:
                    raise self.err("row line must look like 'row <cond|*>: p=w, ...'", idx)
                cond_text, dist_text = body.split(":", 1)
                cond_text = cond_text.strip()
                condition = (
                    frozenset() if cond_text == "*" else self.prop_list(cond_text, idx)
                )
                weights: dict[str, float] = {}
                for part in dist_text.split(","):
                    part = part.strip()
                    if not part:
                        continue
                    if "=" not in part:
                        raise self.err(f"bad distribution entry {part!r}", idx)
                    pname, wtext = (s.strip() for s in part.split("=", 1))
                    self.prop(pname, idx)
                    try:
                        weights[pname] = float(wtext)
                    except ValueError:
                        raise self.err(f"bad probability {wtext!r}", idx) from None
                dom = self.variables[node].domain
                for pname in weights:
                    if pname not in dom:
                        raise self.err(f"{pname!r} is not a value of {node!r}", idx)
                dist = tuple(weights.get(p, 0.0) for p in dom)
                rows.append(CPTRow(condition, dist))
            else:
                raise self.err(f"unexpected line in bn section: {line!r}", idx)
        flush(last)
        return last

    def parse_actions(self, i: int) -> int:
        action_id: str | None = None
        pre: frozenset[str] = frozenset()
        effects: list[Effect] = []
        cur_cond: frozenset[str] | None = None
        cur_otherwise = False
        outcomes: list[Outcome] = []

        def flush_effect(idx):
            nonlocal cur_cond, cur_otherwise, outcomes
            if cur_cond is not None:
                if not outcomes:
                    raise self.err(f"effect of action {action_id!r} has no outcomes", idx)
                effects.append(Effect(cur_cond, tuple(outcomes), cur_otherwise))
            cur_cond, cur_otherwise, outcomes = None, False, []

        def flush_action(idx):
            nonlocal action_id, pre, effects
            flush_effect(idx)
            if action_id is not None:
                self.actions.append(Action(action_id, pre, tuple(effects)))
            action_id, pre, effects = None, frozenset(), []

        last = i
        for idx, line in self._section_lines(i):
            last = idx + 1
            if line.startswith("action "):
                flush_action(idx)
                name = line[len("action ") :].rstrip(":").strip()
                if not _name_re.match(name):
                    raise self.err(f"bad action name {name!r}", idx)
                if any(a.id == name for a in self.actions):
                    raise self.err(f"duplicate action {name!r}", idx)
                action_id = name
            elif line.startswith("pre:"):
                if action_id is None:
                    raise self.err("pre outside an action block", idx)
                pre = self.prop_list(line[len("pre:") :], idx)
            elif line.startswith("effect"):
                if action_id is None:
                    raise self.err("effect outside an action block", idx)
                flush_effect(idx)
                body = line[len("effect") :].rstrip(":").strip()
                if body == "":
                    cur_cond = frozenset()
                elif body == "otherwise":
                    cur_cond, cur_otherwise = frozenset(), True
                elif body.startswith("when "):
                    cur_cond = self.prop_list(body[len("when ") :], idx)
                else:
                    raise self.err(f"bad effect header {line!r}", idx)
            elif line.startswith("outcome"):
                if cur_cond is None:
                    raise self.err("outcome outside an effect block", idx)
                body = line[len("outcome") :].strip()
                if ":" not in body:
                    raise self.err("outcome line must look like 'outcome <p>: ...'", idx)
                ptext, rest = body.split(":", 1)
                try:
                    prob = float(ptext.strip())
                except ValueError:
                    raise self.err(f"bad outcome probability {ptext!r}", idx) from None
                add: frozenset[str] = frozenset()
                delete: frozenset[str] = frozenset()
                rest = rest.strip()
                m = re.match(r"^(?:add\b(?P<add>.*?))?\s*(?:\bdel\b(?P<del>.*))?$", rest)
                if rest and (m is None or (m.group("add") is None and m.group("del") is None)):
                    raise self.err(f"bad outcome body {rest!r}", idx)
                if m is not None:
                    if m.group("add") is not None:
                        add = self.prop_list(m.group("add"), idx)
                    if m.group("del") is not None:
                        delete = self.prop_list(m.group("del"), idx)
                outcomes.append(Outcome(prob, add, delete))
            else:
                raise self.err(f"unexpected line in actions section: {line!r}", idx)
        flush_action(last)
        return last


def parse_task(text: str) -> PlanningTask:
    """Parse a task file; raises TaskSyntaxError / TaskValidationError."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Serialization (round-trip companion of parse_task)
# --------------------------------------------------------------------------


def serialize_task(task: PlanningTask) -> str:
    out: list[str] = ["vars:"]
    for var in task.variables.values():
        dom = var.domain
        if len(dom) == 2 and dom[1] == "!" + dom[0]:
            out.append(f"  {var.id} = {dom[0]}")
        else:
            out.append(f"  {var.id} = " + " | ".join(dom))
    out.append("bn:")
    for x in task.initial.order:
        parents = task.initial.parents.get(x, ())
        head = f"  node {x}"
        if parents:
            head += " parents " + ", ".join(parents)
        out.append(head + ":")
        for row in task.initial.cpts[x]:
            cond = ", ".join(sorted(row.condition)) if row.condition else "*"
            dist = ", ".join(
                f"{p} = {w!r}" for p, w in zip(task.variables[x].domain, row.dist)
            )
            out.append(f"    row {cond}: {dist}")
    out.append("actions:")
    for a in task.actions:
        out.append(f"  action {a.id}:")
        out.append("    pre: " + ", ".join(sorted(a.precondition)))
        for e in a.effects:
            if e.otherwise:
                out.append("    effect otherwise:")
            elif e.condition:
                out.append("    effect when " + ", ".join(sorted(e.condition)) + ":")
            else:
                out.append("    effect:")
            for o in e.outcomes:
                parts = [f"    outcome {o.probability!r}:"]
                if o.add:
                    parts.append("add " + ", ".join(sorted(o.add)))
                if o.delete:
                    parts.append("del " + ", ".join(sorted(o.delete)))
                out.append("  " + " ".join(parts))
    out.append("goal: " + ", ".join(sorted(task.goal)))
    out.append(f"theta: {task.theta!r}")
    return "\n".join(out) + "\n"

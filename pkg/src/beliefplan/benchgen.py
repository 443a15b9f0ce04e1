"""Benchmark task generators.

Ten parameterized families, all emitting the plain-text task format:

  safe-uni / safe-cub   try one of n combinations to open a safe; uniform
                        prior, or a cubic-decay prior whose last combination
                        has probability 0.
  cube                  move to the (1,1,1) corner of an n^3 grid, initial
                        position uncertain per dimension (uniform or cubic
                        prior); a center-goal variant exists behind a flag.
  bomb                  n bombs, each independently armed with probability
                        1/n, and m toilets; dunking disarms but clogs,
                        flushing unclogs.
  sandcastle            two booleans; digging a moat succeeds with 0.5,
                        erecting the castle succeeds with 0.67 given a moat
                        (0.25 otherwise) and on failure destroys the moat
                        with probability 0.5.
  slippery-gripper      dry/clean/paint/pickup with the classic success
                        probabilities; gripper initially dry with 0.7.
  walkgrid-1d           walk from cell 1 to cell n; each move advances with
                        0.8 and stays put with 0.2.
  walkgrid-2d           n x n grid from (1,1) to (n,n); each move advances
                        with 0.8, goes to either lateral neighbour with 0.1,
                        never backwards (off-grid movement stays put).
  logistics-l           x locations per city, y cities, z packages; load and
                        unload are probabilistic (0.875/0.9 load, 0.75/0.8
                        unload for trucks/airplanes), start locations known.
  logistics-ll          the same plus an independent uniform prior over each
                        package's start location within its city.

All generators are deterministic; every emitted file parses and validates.
"""

from __future__ import annotations

from .model import PlanningTask, parse_task


def _lines_to_task(lines) -> PlanningTask:
    return parse_task("\n".join(lines) + "\n")


def _det(cond: str, adds: str, dels: str) -> list[str]:
    return [f"    effect when {cond}:", f"      outcome 1.0: add {adds} del {dels}"]


# ---------------------------------------------------------------------------
# Safe
# ---------------------------------------------------------------------------


def _safe(n: int, weights, theta: float) -> PlanningTask:
    assert n >= 2
    lines = ["vars:",
             "  combo = " + " | ".join(f"c{i}" for i in range(1, n + 1)),
             "  safe = closed | open",
             "bn:",
             "  node combo:",
             "    row *: " + ", ".join(
                 f"c{i} = {w!r}" for i, w in zip(range(1, n + 1), weights)),
             "  node safe:",
             "    row *: closed = 1.0, open = 0.0",
             "actions:"]
    for i in range(1, n + 1):
        lines += [f"  action try-c{i}:", "    pre:"]
        lines += _det(f"c{i}", "open", "closed")
    lines += ["goal: open", f"theta: {theta!r}"]
    return _lines_to_task(lines)


def safe_uni(n: int, theta: float = 0.5) -> PlanningTask:
    return _safe(n, [1.0 / n] * n, theta)


def safe_cub(n: int, theta: float = 0.5) -> PlanningTask:
    # Combination i gets weight proportional to (n - i)^3; the last one is 0.
    total = sum((n - i) ** 3 for i in range(1, n + 1))
    return _safe(n, [(n - i) ** 3 / total for i in range(1, n + 1)], theta)


# ---------------------------------------------------------------------------
# Cube
# ---------------------------------------------------------------------------


def cube(n: int, theta: float = 0.5, prior: str = "uniform",
         center: bool = False) -> PlanningTask:
    assert n >= 2 and prior in ("uniform", "cubic")
    if prior == "uniform":
        weights = [1.0 / n] * n
    else:
        total = sum((n - i) ** 3 for i in range(1, n + 1))
        weights = [(n - i) ** 3 / total for i in range(1, n + 1)]
    dims = ("x", "y", "z")
    lines = ["vars:"]
    for d in dims:
        lines.append(f"  {d} = " + " | ".join(f"{d}{i}" for i in range(1, n + 1)))
    lines.append("bn:")
    for d in dims:
        lines += [f"  node {d}:",
                  "    row *: " + ", ".join(
                      f"{d}{i} = {w!r}" for i, w in zip(range(1, n + 1), weights))]
    lines.append("actions:")
    for d in dims:
        lines += [f"  action move-{d}-down:", "    pre:"]
        for i in range(2, n + 1):  # saturates at the wall: no effect at 1
            lines += _det(f"{d}{i}", f"{d}{i - 1}", f"{d}{i}")
        lines += [f"  action move-{d}-up:", "    pre:"]
        for i in range(1, n):
            lines += _det(f"{d}{i}", f"{d}{i + 1}", f"{d}{i}")
    c = (n + 1) // 2
    goal = " ".join(f"{d}{c if center else 1}" for d in dims)
    lines += [f"goal: {goal}", f"theta: {theta!r}"]
    return _lines_to_task(lines)


# ---------------------------------------------------------------------------
# Bomb in the toilet
# ---------------------------------------------------------------------------


def bomb(n: int, m: int, theta: float = 1.0) -> PlanningTask:
    assert n >= 1 and m >= 1
    p_armed = 1.0 / n
    lines = ["vars:"]
    for b in range(1, n + 1):
        lines.append(f"  bomb{b} = armed-{b} | safe-{b}")
    for t in range(1, m + 1):
        lines.append(f"  toilet{t} = unclogged-{t} | clogged-{t}")
    lines.append("bn:")
    for b in range(1, n + 1):
        lines += [f"  node bomb{b}:",
                  f"    row *: armed-{b} = {p_armed!r}, safe-{b} = {1.0 - p_armed!r}"]
    for t in range(1, m + 1):
        lines += [f"  node toilet{t}:",
                  f"    row *: unclogged-{t} = 1.0, clogged-{t} = 0.0"]
    lines.append("actions:")
    for b in range(1, n + 1):
        for t in range(1, m + 1):
            lines += [f"  action dunk-{b}-{t}:",
                      f"    pre: unclogged-{t}",
                      "    effect:",
                      f"      outcome 1.0: add safe-{b}, clogged-{t} "
                      f"del armed-{b}, unclogged-{t}"]
    for t in range(1, m + 1):
        lines += [f"  action flush-{t}:",
                  "    pre:",
                  "    effect:",
                  f"      outcome 1.0: add unclogged-{t} del clogged-{t}"]
    goal = " ".join(f"safe-{b}" for b in range(1, n + 1))
    lines += [f"goal: {goal}", f"theta: {theta!r}"]
    return _lines_to_task(lines)


# ---------------------------------------------------------------------------
# Sand-Castle and Slippery-Gripper
# ---------------------------------------------------------------------------


def sandcastle(theta: float = 0.9) -> PlanningTask:
    return _lines_to_task([
        "vars:",
        "  m = moat | no-moat",
        "  c = castle | no-castle",
        "bn:",
        "  node m:",
        "    row *: moat = 0.0, no-moat = 1.0",
        "  node c:",
        "    row *: castle = 0.0, no-castle = 1.0",
        "actions:",
        "  action dig-moat:",
        "    pre:",
        "    effect when no-moat:",
        "      outcome 0.5: add moat del no-moat",
        "      outcome 0.5:",
        "  action erect-castle:",
        "    pre:",
        "    effect when moat:",
        "      outcome 0.67: add castle del no-castle",
        "      outcome 0.165: add no-moat del moat",  # failure destroys moat
        "      outcome 0.165:",
        "    effect when no-moat:",
        "      outcome 0.25: add castle del no-castle",
        "      outcome 0.75:",
        "goal: castle",
        f"theta: {theta!r}",
    ])


def slippery_gripper(theta: float = 0.9) -> PlanningTask:
    return _lines_to_task([
        "vars:",
        "  grip-dry = dry | wet",
        "  grip-clean = clean | dirty",
        "  block-paint = painted | unpainted",
        "  block-hold = held | free",
        "bn:",
        "  node grip-dry:",
        "    row *: dry = 0.7, wet = 0.3",
        "  node grip-clean:",
        "    row *: clean = 1.0, dirty = 0.0",
        "  node block-paint:",
        "    row *: painted = 0.0, unpainted = 1.0",
        "  node block-hold:",
        "    row *: held = 0.0, free = 1.0",
        "actions:",
        "  action dry:",
        "    pre:",
        "    effect when wet:",
        "      outcome 0.8: add dry del wet",
        "      outcome 0.2:",
        "  action clean:",
        "    pre:",
        "    effect when dirty:",
        "      outcome 0.85: add clean del dirty",
        "      outcome 0.15:",
        "  action paint:",
        "    pre:",
        "    effect when held:",
        "      outcome 1.0: add painted, dirty del unpainted, clean",
        "    effect when free:",
        "      outcome 0.9: add painted del unpainted",
        "      outcome 0.1: add painted, dirty del unpainted, clean",
        "  action pickup:",
        "    pre:",
        "    effect when dry:",
        "      outcome 0.95: add held del free",
        "      outcome 0.05:",
        "    effect when wet:",
        "      outcome 0.5: add held del free",
        "      outcome 0.5:",
        "goal: clean, painted, held",
        f"theta: {theta!r}",
    ])


# ---------------------------------------------------------------------------
# WalkGrid
# ---------------------------------------------------------------------------


def walkgrid_1d(n: int, theta: float = 0.9) -> PlanningTask:
    assert n >= 2
    lines = ["vars:",
             "  pos = " + " | ".join(f"p{i}" for i in range(1, n + 1)),
             "bn:",
             "  node pos:",
             "    row *: " + ", ".join(
                 f"p{i} = {1.0 if i == 1 else 0.0!r}" for i in range(1, n + 1)),
             "actions:"]
    for name, step in (("move-right", 1), ("move-left", -1)):
        lines += [f"  action {name}:", "    pre:"]
        for i in range(1, n + 1):
            j = i + step
            if 1 <= j <= n:
                lines += [f"    effect when p{i}:",
                          f"      outcome 0.8: add p{j} del p{i}",
                          "      outcome 0.2:"]
    lines += [f"goal: p{n}", f"theta: {theta!r}"]
    return _lines_to_task(lines)


def walkgrid_2d(n: int, theta: float = 0.01) -> PlanningTask:
    assert n >= 2
    lines = ["vars:",
             "  x = " + " | ".join(f"x{i}" for i in range(1, n + 1)),
             "  y = " + " | ".join(f"y{i}" for i in range(1, n + 1)),
             "bn:"]
    for d in ("x", "y"):
        lines += [f"  node {d}:",
                  "    row *: " + ", ".join(
                      f"{d}{i} = {1.0 if i == 1 else 0.0!r}"
                      for i in range(1, n + 1))]
    lines.append("actions:")

    def outcome(prob, dim, frm, to):
        """One movement outcome; off-grid movement keeps the position."""
        if 1 <= to <= n:
            return f"      outcome {prob}: add {dim}{to} del {dim}{frm}"
        return f"      outcome {prob}:"

    # forward direction: (dimension, step); laterals move the other dimension.
    moves = [("move-right", "x", 1), ("move-left", "x", -1),
             ("move-up", "y", 1), ("move-down", "y", -1)]
    for name, dim, step in moves:
        lat = "y" if dim == "x" else "x"
        lines += [f"  action {name}:", "    pre:"]
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                xi, yj = (i, j) if dim == "x" else (j, i)
                lines += [f"    effect when x{xi}, y{yj}:",
                          outcome(0.8, dim, i, i + step),
                          outcome(0.1, lat, j, j + 1),
                          outcome(0.1, lat, j, j - 1)]
    lines += [f"goal: x{n} y{n}", f"theta: {theta!r}"]
    return _lines_to_task(lines)


# ---------------------------------------------------------------------------
# Logistics
# ---------------------------------------------------------------------------


def logistics(x: int, y: int, z: int, theta: float = 0.5,
              uncertain_init: bool = False) -> PlanningTask:
    """y cities with x locations each (location 1 is the airport), one truck
    per city, one airplane, z packages.  Package k starts in city
    1 + (k-1) mod y and must reach the airport of the next city."""
    assert x >= 1 and y >= 2 and z >= 1
    cities = range(1, y + 1)
    locs = range(1, x + 1)
    lines = ["vars:"]
    for c in cities:
        lines.append(f"  truck{c} = " + " | ".join(f"t{c}-at-{l}" for l in locs))
    lines.append("  plane = " + " | ".join(f"plane-at-{c}" for c in cities))
    pkg_dom = {}
    for k in range(1, z + 1):
        dom = [f"p{k}-at-{c}-{l}" for c in cities for l in locs]
        dom += [f"p{k}-in-t{c}" for c in cities] + [f"p{k}-in-plane"]
        pkg_dom[k] = dom
        lines.append(f"  pkg{k} = " + " | ".join(dom))
    lines.append("bn:")
    for c in cities:
        lines += [f"  node truck{c}:",
                  "    row *: " + ", ".join(
                      f"t{c}-at-{l} = {1.0 if l == 1 else 0.0!r}" for l in locs)]
    lines += ["  node plane:",
              "    row *: " + ", ".join(
                  f"plane-at-{c} = {1.0 if c == 1 else 0.0!r}" for c in cities)]
    for k in range(1, z + 1):
        home = 1 + (k - 1) % y
        weights = {}
        if uncertain_init:
            for l in locs:
                weights[f"p{k}-at-{home}-{l}"] = 1.0 / x
        else:
            weights[f"p{k}-at-{home}-1"] = 1.0
        lines += [f"  node pkg{k}:",
                  "    row *: " + ", ".join(
                      f"{p} = {weights.get(p, 0.0)!r}" for p in pkg_dom[k])]
    lines.append("actions:")
    for c in cities:
        for l1 in locs:
            for l2 in locs:
                if l1 == l2:
                    continue
                lines += [f"  action drive-{c}-{l1}-{l2}:",
                          f"    pre: t{c}-at-{l1}"]
                lines += _det(f"t{c}-at-{l1}", f"t{c}-at-{l2}", f"t{c}-at-{l1}")
    for c1 in cities:
        for c2 in cities:
            if c1 == c2:
                continue
            lines += [f"  action fly-{c1}-{c2}:", f"    pre: plane-at-{c1}"]
            lines += _det(f"plane-at-{c1}", f"plane-at-{c2}", f"plane-at-{c1}")
    for k in range(1, z + 1):
        for c in cities:
            for l in locs:
                lines += [f"  action load-truck-{k}-{c}-{l}:",
                          f"    pre: t{c}-at-{l}",
                          f"    effect when p{k}-at-{c}-{l}:",
                          f"      outcome 0.875: add p{k}-in-t{c} del p{k}-at-{c}-{l}",
                          "      outcome 0.125:",
                          f"  action unload-truck-{k}-{c}-{l}:",
                          f"    pre: t{c}-at-{l}",
                          f"    effect when p{k}-in-t{c}:",
                          f"      outcome 0.75: add p{k}-at-{c}-{l} del p{k}-in-t{c}",
                          "      outcome 0.25:"]
            lines += [f"  action load-plane-{k}-{c}:",
                      f"    pre: plane-at-{c}",
                      f"    effect when p{k}-at-{c}-1:",
                      f"      outcome 0.9: add p{k}-in-plane del p{k}-at-{c}-1",
                      "      outcome 0.1:",
                      f"  action unload-plane-{k}-{c}:",
                      f"    pre: plane-at-{c}",
                      f"    effect when p{k}-in-plane:",
                      f"      outcome 0.8: add p{k}-at-{c}-1 del p{k}-in-plane",
                      "      outcome 0.2:"]
    goals = []
    for k in range(1, z + 1):
        dest = 1 + ((k - 1) % y + 1) % y  # next city, wrapping
        goals.append(f"p{k}-at-{dest}-1")
    lines += ["goal: " + " ".join(goals), f"theta: {theta!r}"]
    return _lines_to_task(lines)


def logistics_l(x: int, y: int, z: int, theta: float = 0.5) -> PlanningTask:
    return logistics(x, y, z, theta, uncertain_init=False)


def logistics_ll(x: int, y: int, z: int, theta: float = 0.5) -> PlanningTask:
    return logistics(x, y, z, theta, uncertain_init=True)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

FAMILIES = {
    "safe-uni": safe_uni,
    "safe-cub": safe_cub,
    "cube": cube,
    "bomb": bomb,
    "sandcastle": sandcastle,
    "slippery-gripper": slippery_gripper,
    "walkgrid-1d": walkgrid_1d,
    "walkgrid-2d": walkgrid_2d,
    "logistics-l": logistics_l,
    "logistics-ll": logistics_ll,
}


def generate(family: str, *args, **kwargs) -> PlanningTask:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r} "
                         f"(choose from {sorted(FAMILIES)})")
    return FAMILIES[family](*args, **kwargs)

import math

import pytest

from beliefplan import benchgen
from beliefplan.benchgen import (
    FAMILIES,
    bomb,
    cube,
    generate,
    logistics_ll,
    safe_cub,
    safe_uni,
    sandcastle,
    slippery_gripper,
    walkgrid_1d,
    walkgrid_2d,
)
from beliefplan.model import serialize_task, validate_task
from beliefplan.oracle import (
    apply_sequence,
    goal_probability,
    initial_belief,
)

SMALL_INSTANCES = [
    ("safe-uni", (5,), {}),
    ("safe-cub", (5,), {}),
    ("cube", (3,), {}),
    ("cube", (3,), {"prior": "cubic", "center": True}),
    ("bomb", (2, 2), {}),
    ("sandcastle", (), {}),
    ("slippery-gripper", (), {}),
    ("walkgrid-1d", (4,), {}),
    ("walkgrid-2d", (3,), {}),
    ("logistics-l", (2, 2, 1), {}),
    ("logistics-ll", (2, 2, 2), {}),
]


@pytest.mark.parametrize("family,args,kwargs", SMALL_INSTANCES)
def test_every_generated_task_validates(family, args, kwargs):
    task = generate(family, *args, **kwargs)
    validate_task(task)  # raises on violation
    assert serialize_task(task)  # round-trippable text form exists


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        generate("nonesuch", 3)


def test_registry_covers_all_ten_families():
    assert set(FAMILIES) == {
        "safe-uni", "safe-cub", "cube", "bomb", "sandcastle",
        "slippery-gripper", "walkgrid-1d", "walkgrid-2d",
        "logistics-l", "logistics-ll",
    }


def test_generators_are_deterministic():
    for family, args, kwargs in SMALL_INSTANCES:
        a = serialize_task(generate(family, *args, **kwargs))
        b = serialize_task(generate(family, *args, **kwargs))
        assert a == b


def test_safe_uni_k_tries_reach_probability_k_over_n():
    n = 6
    task = safe_uni(n, theta=0.5)
    b0 = initial_belief(task)
    for k in range(0, n + 1):
        b = apply_sequence(
            task, b0, [task.action(f"try-c{i}") for i in range(1, k + 1)])
        assert goal_probability(b, task.goal) == pytest.approx(k / n, abs=1e-12)


def test_safe_uni_structure():
    task = safe_uni(7, theta=0.25)
    tries = [a for a in task.actions if a.id.startswith("try-c")]
    assert len(tries) == 7
    b = initial_belief(task)
    combos = [p for p in sorted(task.propositions) if p.startswith("c")]
    for c in [f"c{i}" for i in range(1, 8)]:
        assert sum(pw for w, pw in b.dist.items() if c in w) == pytest.approx(
            1 / 7, abs=1e-12)
    assert combos  # sanity: the uniform prior covers every combination


def test_safe_cub_prior_is_cubic_with_last_combination_impossible():
    n = 5
    task = safe_cub(n)
    b = initial_belief(task)
    total = sum((n - i) ** 3 for i in range(1, n + 1))
    for i in range(1, n + 1):
        got = sum(pw for w, pw in b.dist.items() if f"c{i}" in w)
        assert got == pytest.approx((n - i) ** 3 / total, abs=1e-12)
    assert sum(pw for w, pw in b.dist.items() if f"c{n}" in w) == 0.0


def test_bomb_arming_prior_is_one_over_n_independent():
    n, m = 3, 1
    task = bomb(n, m)
    b = initial_belief(task)
    for i in range(1, n + 1):
        armed = sum(pw for w, pw in b.dist.items() if f"armed-{i}" in w)
        assert armed == pytest.approx(1 / n, abs=1e-12)
    all_armed = sum(
        pw for w, pw in b.dist.items()
        if all(f"armed-{i}" in w for i in range(1, n + 1)))
    assert all_armed == pytest.approx((1 / n) ** n, abs=1e-12)


def test_bomb_dunk_requires_unclogged_toilet_and_flush_restores():
    task = bomb(2, 1)
    dunk = task.action("dunk-1-1")
    assert dunk.precondition == frozenset({"unclogged-1"})
    b = initial_belief(task)
    b = apply_sequence(task, b, [dunk])
    assert all("clogged-1" in w for w in b.dist)  # toilet clogged
    b = apply_sequence(task, b, [task.action("flush-1")])
    assert all("unclogged-1" in w for w in b.dist)


def test_sandcastle_two_step_goal_probability():
    task = sandcastle()
    b = initial_belief(task)
    b = apply_sequence(
        task, b, [task.action("dig-moat"), task.action("erect-castle")])
    # 0.5 * 0.67 (moat path) + 0.5 * 0.25 (no moat): independent oracle fold.
    assert goal_probability(b, {"castle"}) == pytest.approx(0.46, abs=1e-12)


def test_slippery_gripper_initial_marginals():
    task = slippery_gripper()
    b = initial_belief(task)
    dry = sum(pw for w, pw in b.dist.items() if "dry" in w)
    assert dry == pytest.approx(0.7, abs=1e-12)
    assert all("clean" in w and "unpainted" in w and "free" in w
               for w, pw in b.dist.items() if pw > 0.0)


def test_walkgrid_1d_single_move_advances_with_point_eight():
    task = walkgrid_1d(3)
    b = initial_belief(task)
    b = apply_sequence(task, b, [task.action("move-right")])
    assert goal_probability(b, {"p2"}) == pytest.approx(0.8, abs=1e-12)
    assert goal_probability(b, {"p1"}) == pytest.approx(0.2, abs=1e-12)


def test_walkgrid_2d_move_splits_forward_and_lateral():
    task = walkgrid_2d(3)
    b = initial_belief(task)
    b = apply_sequence(task, b, [task.action("move-right")])
    # From (1,1): forward 0.8 to (2,1); lateral up 0.1 to (1,2); lateral down
    # leaves the grid and stays at (1,1).
    assert goal_probability(b, {"x2", "y1"}) == pytest.approx(0.8, abs=1e-12)
    assert goal_probability(b, {"x1", "y2"}) == pytest.approx(0.1, abs=1e-12)
    assert goal_probability(b, {"x1", "y1"}) == pytest.approx(0.1, abs=1e-12)


def test_logistics_load_drive_unload_probabilities():
    task = benchgen.logistics_l(2, 2, 1)
    b = initial_belief(task)
    seq = ["load-truck-1-1-1", "drive-1-1-2"]
    b = apply_sequence(task, b, [task.action(a) for a in seq])
    assert goal_probability(b, {"p1-in-t1"}) == pytest.approx(0.875, abs=1e-12)
    b = apply_sequence(task, b, [task.action("unload-truck-1-1-2")])
    assert goal_probability(b, {"p1-at-1-2"}) == pytest.approx(
        0.875 * 0.75, abs=1e-12)


def test_logistics_ll_uniform_package_prior():
    task = logistics_ll(3, 2, 1)
    b = initial_belief(task)
    for loc in (1, 2, 3):
        got = sum(pw for w, pw in b.dist.items() if f"p1-at-1-{loc}" in w)
        assert got == pytest.approx(1 / 3, abs=1e-12)


def test_cube_goal_is_origin_corner_and_center_variant_differs():
    corner = cube(3)
    assert corner.goal == frozenset({"x1", "y1", "z1"})
    center = cube(3, center=True)
    assert center.goal == frozenset({"x2", "y2", "z2"})


def test_cube_moves_saturate_at_walls():
    task = cube(2)
    b = initial_belief(task)
    b = apply_sequence(task, b, [task.action("move-x-down")] * 3)
    # After enough down moves the x coordinate is 1 in every world.
    assert goal_probability(b, {"x1"}) == pytest.approx(1.0, abs=1e-12)

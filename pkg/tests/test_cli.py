import csv
import io

import pytest

from beliefplan import cli
from beliefplan.benchgen import bomb, safe_uni, walkgrid_1d
from beliefplan.model import parse_task, serialize_task
from beliefplan.oracle import goal_probability, initial_belief
from beliefplan.solver import wmc
from beliefplan.wcnf import from_dimacs, wmc_bruteforce
from helpers import ROBOT_BLOCK_TEXT


def write_task(tmp_path, name, task):
    path = tmp_path / name
    path.write_text(serialize_task(task))
    return path


def write_plan(tmp_path, name, actions):
    path = tmp_path / name
    path.write_text("".join(a + "\n" for a in actions))
    return path


def run(argv):
    return cli.main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def test_plan_safe_uni_4_theta_half(tmp_path, capsys):
    task = write_task(tmp_path, "safe-uni-4.task", safe_uni(4))
    assert run(["plan", task, "--theta", "0.5"]) == 0
    out = capsys.readouterr().out
    assert len(out.splitlines()) == 2  # two try actions suffice


def test_plan_writes_output_file(tmp_path):
    task = write_task(tmp_path, "safe-uni-4.task", safe_uni(4))
    out = tmp_path / "plan.txt"
    assert run(["plan", task, "--theta", "0.25", "-o", out]) == 0
    assert len(out.read_text().splitlines()) == 1


def test_plan_broken_file_is_input_error(tmp_path, capsys):
    broken = tmp_path / "broken.task"
    broken.write_text("vars:\n  X = \n")
    assert run(["plan", broken]) == 3
    assert "error" in capsys.readouterr().err


def test_plan_missing_file_is_input_error(tmp_path):
    assert run(["plan", tmp_path / "nonesuch.task"]) == 3


def test_plan_unsolvable_at_root_exits_one(tmp_path):
    text = """
vars:
  X = a | b
bn:
  node X:
    row *: a = 1.0, b = 0.0
actions:
  action wait:
    pre:
    effect:
      outcome 1.0:
goal: b
theta: 0.5
"""
    path = tmp_path / "unreachable.task"
    path.write_text(text)
    assert run(["plan", path]) == 1


def test_plan_resource_limit_exits_two(tmp_path):
    task = write_task(tmp_path, "safe-uni-10.task", safe_uni(10, theta=1.0))
    assert run(["plan", task, "--node-limit", "2"]) == 2


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def test_validate_exact_two_step_robot_block(tmp_path, capsys):
    task_path = tmp_path / "robot.task"
    task_path.write_text(ROBOT_BLOCK_TEXT)
    plan = write_plan(tmp_path, "p.txt", ["move-b-right", "move-left"])
    assert run(["validate", task_path, plan, "--theta", "0.75"]) == 0
    out = capsys.readouterr().out
    assert "0.791" in out and "exact" in out and "pass" in out


def test_validate_exact_below_theta_fails(tmp_path, capsys):
    task_path = tmp_path / "robot.task"
    task_path.write_text(ROBOT_BLOCK_TEXT)
    plan = write_plan(tmp_path, "p.txt", ["move-b-right", "move-left"])
    assert run(["validate", task_path, plan, "--theta", "0.9"]) == 1
    assert "fail" in capsys.readouterr().out


def test_validate_empty_plan_known_goal_is_one(tmp_path, capsys):
    text = """
vars:
  X = a | b
bn:
  node X:
    row *: a = 1.0, b = 0.0
actions:
  action wait:
    pre:
    effect:
      outcome 1.0:
goal: a
theta: 0.5
"""
    task_path = tmp_path / "t.task"
    task_path.write_text(text)
    plan = write_plan(tmp_path, "empty.txt", [])
    assert run(["validate", task_path, plan]) == 0
    assert " 1 " in capsys.readouterr().out


def test_validate_reports_inapplicable_step(tmp_path, capsys):
    task = write_task(tmp_path, "bomb.task", bomb(2, 1))
    # dunk-1-1 clogs the toilet, so a second dunk violates its precondition.
    plan = write_plan(tmp_path, "p.txt", ["dunk-1-1", "dunk-2-1"])
    assert run(["validate", task, plan]) == 3
    assert "step 2" in capsys.readouterr().err


def test_validate_mc_seeded_interval_reproducible(tmp_path, capsys):
    task = write_task(tmp_path, "walk.task", walkgrid_1d(4, theta=0.5))
    plan = write_plan(tmp_path, "p.txt", ["move-right"] * 5)
    args = ["validate", task, plan, "--mode", "mc",
            "--samples", "4000", "--seed", "7"]
    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first
    assert "ci99" in first


def test_validate_mc_interval_covers_exact_probability(tmp_path, capsys):
    n = 4
    task = walkgrid_1d(n, theta=0.5)
    plan_ids = ["move-right"] * 6
    b = initial_belief(task)
    from beliefplan.oracle import apply_sequence
    exact = goal_probability(
        apply_sequence(task, b, [task.action(a) for a in plan_ids]), task.goal)
    task_path = write_task(tmp_path, "walk.task", task)
    plan = write_plan(tmp_path, "p.txt", plan_ids)
    run(["validate", task_path, plan, "--mode", "mc", "--samples", "20000"])
    out = capsys.readouterr().out
    lo = float(out.split("[")[1].split(",")[0])
    hi = float(out.split(",")[-1].split("]")[0])
    assert lo <= exact <= hi


def test_wilson_interval_bounds():
    lo, hi = cli.wilson_interval(0, 100)
    assert lo == 0.0 and hi < 0.1
    lo, hi = cli.wilson_interval(100, 100)
    assert hi == 1.0 and lo > 0.9
    lo, hi = cli.wilson_interval(50, 100)
    assert lo < 0.5 < hi


# ---------------------------------------------------------------------------
# count / encode
# ---------------------------------------------------------------------------

def test_count_reports_initial_goal_probability(tmp_path, capsys):
    task_path = tmp_path / "robot.task"
    task_path.write_text(ROBOT_BLOCK_TEXT)
    task = parse_task(ROBOT_BLOCK_TEXT)
    expect = goal_probability(initial_belief(task), task.goal)
    assert run(["count", task_path]) == 0
    got = float(capsys.readouterr().out)
    assert got == pytest.approx(expect, abs=1e-12)


def test_count_after_plan_matches_oracle(tmp_path, capsys):
    task_path = tmp_path / "robot.task"
    task_path.write_text(ROBOT_BLOCK_TEXT)
    plan = write_plan(tmp_path, "p.txt", ["move-b-right", "move-left"])
    assert run(["count", task_path, "--plan", plan]) == 0
    got = float(capsys.readouterr().out)
    assert got == pytest.approx(0.791, abs=1e-9)


def test_encode_emits_loadable_weighted_dimacs(tmp_path, capsys):
    task_path = tmp_path / "robot.task"
    task_path.write_text(ROBOT_BLOCK_TEXT)
    assert run(["encode", task_path]) == 0
    text = capsys.readouterr().out
    cnf = from_dimacs(text)
    # The encoding is a weighted CNF over one BN layer whose total mass is 1.
    assert wmc(cnf) == pytest.approx(1.0, abs=1e-9)
    assert wmc_bruteforce(cnf) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def test_gen_writes_parseable_task(tmp_path):
    out = tmp_path / "suite"
    assert run(["gen", "safe-uni", "5", "--theta", "0.75", "-o", out]) == 0
    path = out / "safe-uni-5.task"
    task = parse_task(path.read_text())
    assert task.theta == 0.75
    assert len([a for a in task.actions if a.id.startswith("try-")]) == 5


def test_gen_stdout_mode(tmp_path, capsys):
    assert run(["gen", "sandcastle"]) == 0
    task = parse_task(capsys.readouterr().out)
    assert {a.id for a in task.actions} == {"dig-moat", "erect-castle"}


def test_gen_unknown_family_is_input_error(capsys):
    assert run(["gen", "nonesuch", "3"]) == 3
    assert "nonesuch" in capsys.readouterr().err


def test_gen_cube_flags(tmp_path, capsys):
    assert run(["gen", "cube", "3", "--center", "--prior", "cubic"]) == 0
    task = parse_task(capsys.readouterr().out)
    assert task.goal == frozenset({"x2", "y2", "z2"})


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def test_bench_empty_dir_emits_header_only(tmp_path, capsys):
    d = tmp_path / "empty"
    d.mkdir()
    assert run(["bench", d]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows == [cli.BENCH_HEADER]


def test_bench_runs_every_instance_and_theta(tmp_path):
    d = tmp_path / "suite"
    d.mkdir()
    write_task(d, "safe-uni-3.task", safe_uni(3))
    write_task(d, "safe-uni-4.task", safe_uni(4))
    out = tmp_path / "report.csv"
    assert run(["bench", d, "--theta", "0.5,1.0", "-o", out]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    for row in rows:
        assert row["status"] == "plan-found"
        assert float(row["goal_prob"]) >= float(row["theta"]) - 1e-9
    assert [r["instance"] for r in rows] == [
        "safe-uni-3", "safe-uni-3", "safe-uni-4", "safe-uni-4"]


def test_bench_records_failures_and_continues(tmp_path, capsys):
    d = tmp_path / "suite"
    d.mkdir()
    (d / "aaa-broken.task").write_text("not a task")
    write_task(d, "zzz-good.task", safe_uni(3, theta=0.5))
    assert run(["bench", d]) == 0
    captured = capsys.readouterr()
    rows = list(csv.DictReader(io.StringIO(captured.out)))
    assert [r["status"] for r in rows] == ["input-error", "plan-found"]
    assert "aaa-broken" in captured.err


def test_bench_resource_limit_row(tmp_path, capsys):
    d = tmp_path / "suite"
    d.mkdir()
    write_task(d, "safe-uni-10.task", safe_uni(10, theta=1.0))
    assert run(["bench", d, "--node-limit", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["status"] == "resource-exhausted"
    assert rows[0]["goal_prob"] == ""

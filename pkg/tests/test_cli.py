import json
import subprocess
import sys

import pytest

from htnground.cli import main
from htnground.generators import data_path, basic_variant

DOMAIN = str(data_path("rover-domain.pddl"))
BASIC = str(data_path("rover-basic.pddl"))
ESTIMATE = str(data_path("rover-estimate.pddl"))


def test_solve_basic(tmp_path, capsys):
    stats = tmp_path / "s.json"
    assert main(["solve", DOMAIN, BASIC, "--stats", str(stats)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "(navigate rover1 waypoint3 waypoint1)" in lines
    assert lines[-1] == "(communicate_rock_data rover1 general waypoint1 waypoint1 waypoint0)"
    s = json.loads(stats.read_text())
    assert s["exit_status"] == "solved" and s["plan_length"] == len(lines)
    assert s["total_ms"] >= s["parse_ms"] + s["ground_ms"] + s["search_ms"]
    assert (s["actions_before"], s["actions_after"]) == (161, 47)


@pytest.mark.parametrize("planner", ["ishop", "shop"])
def test_exit_codes(tmp_path, planner, capsys):
    assert main(["solve", DOMAIN, BASIC, "--planner", planner, "--timeout", "0"]) == 2
    bad = tmp_path / "p.pddl"
    bad.write_text(basic_variant(drop=("(at_rock_sample waypoint1)",)))
    assert main(["solve", DOMAIN, str(bad), "--planner", planner]) == 1
    assert main(["solve", DOMAIN, str(tmp_path / "absent.pddl"), "--planner", planner]) == 3
    broken = tmp_path / "broken.pddl"
    broken.write_text("(define (problem x)")
    assert main(["solve", DOMAIN, str(broken), "--planner", planner]) == 3


def test_timeout_still_reports_stats(tmp_path):
    stats = tmp_path / "s.json"
    assert main(["solve", DOMAIN, BASIC, "--timeout", "0", "--stats", str(stats)]) == 2
    assert json.loads(stats.read_text())["exit_status"] == "timeout"


def test_estimate(capsys):
    assert main(["estimate", DOMAIN, ESTIMATE, "--operator", "communicate_soil_data"]) == 0
    assert capsys.readouterr().out == "14000000\n"
    assert main(["estimate", DOMAIN, BASIC]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "navigate 16" in out and out[-1].startswith("total ")
    assert main(["estimate", DOMAIN, BASIC, "--operator", "fly"]) == 3


def test_ground_dump_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["ground", DOMAIN, BASIC, "-o", str(a)]) == 0
    report = capsys.readouterr().out
    assert "can_traverse both" in report
    assert main(["ground", DOMAIN, BASIC, "-o", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert main(["ground", DOMAIN, BASIC, "--dump-only"]) == 0
    assert capsys.readouterr().out == a.read_text()


def test_solve_then_validate(tmp_path, capsys):
    plan, trace = tmp_path / "plan.txt", tmp_path / "trace.txt"
    assert main(["solve", DOMAIN, BASIC, "-o", str(plan), "--trace", str(trace)]) == 0
    assert main(["validate", DOMAIN, BASIC, str(plan), "--trace", str(trace)]) == 0
    assert "valid plan of length 5" in capsys.readouterr().out
    lines = plan.read_text().splitlines()
    plan.write_text("\n".join(lines[:-1]) + "\n")
    assert main(["validate", DOMAIN, BASIC, str(plan), "--trace", str(trace)]) == 1


def test_bench_missing_files(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"problems": [{"domain": "x.pddl", "problem": "y.pddl"}]}))
    assert main(["bench", str(m)]) == 3
    err = capsys.readouterr().err
    assert "x.pddl" in err and "y.pddl" in err


def test_bench_json(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"problems": [{"family": "childsnack", "generate": {"sizes": [1, 2]}}]}))
    out = tmp_path / "out.json"
    assert main(["bench", str(m), "--json", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["records"]) == 4
    assert set(data["totals"]["childsnack"]) == {"ishop", "shop"}


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "htnground", "solve", DOMAIN, BASIC],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and r.stdout.count("\n") == 5

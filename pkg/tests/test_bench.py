import json

import pytest

from htnground import bench
from htnground.generators import FAMILIES, data_path


def _manifest(tmp_path, data):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    return path


def test_single_problem_table(tmp_path):
    d = data_path("rover-domain.pddl")
    data = {"timeout": 30, "problems": [{"family": "rover", "domain": str(d),
                                         "problem": str(d.parent / "rover-basic.pddl")}]}
    m = bench.load_manifest(_manifest(tmp_path, data))
    records = bench.run_bench(m)
    assert [r["planner"] for r in records] == ["ishop", "shop"]
    assert all(r["exit_status"] == "solved" and r["valid"] for r in records)
    assert records[0]["plan_length"] == records[1]["plan_length"] == 5
    text = bench.format_tables(records, m["planners"])
    assert text.startswith("== rover ==")
    assert "rover-basic" in text and "total" in text


def test_always_timing_out_planner_scores_zero():
    records = [
        {"family": "f", "problem": f"p{i}", "planner": pl, "exit_status": st,
         "valid": st == "solved", "plan_length": 3 if st == "solved" else None,
         "total_ms": 50.0}
        for i in range(4) for pl, st in (("ishop", "solved"), ("shop", "timeout"))]
    bench.score(records)
    totals = bench.tables(records, ["ishop", "shop"])["f"]["totals"]
    assert totals == {"ishop": 4.0, "shop": 0.0}


def test_zero_timeout_everything_unsolved(tmp_path):
    m = bench.load_manifest(_manifest(tmp_path, {
        "timeout": 0, "problems": [{"family": "satellite", "generate": {"sizes": [1, 2]}}]}))
    records = bench.run_bench(m)
    assert {r["exit_status"] for r in records} == {"timeout"}
    assert all(t == 0.0 for t in bench.tables(records, m["planners"])["satellite"]["totals"].values())


def test_missing_files_are_listed(tmp_path):
    data = {"problems": [{"domain": "nope-d.pddl", "problem": "nope-p.pddl"},
                         {"domain": "also-missing.pddl", "problem": "nope-p.pddl"}]}
    with pytest.raises(bench.ManifestError) as e:
        bench.load_manifest(_manifest(tmp_path, data))
    msg = str(e.value)
    for name in ("nope-d.pddl", "nope-p.pddl", "also-missing.pddl"):
        assert name in msg


def test_unknown_planner_and_family(tmp_path):
    with pytest.raises(bench.ManifestError):
        bench.load_manifest(_manifest(tmp_path, {"planners": ["fd"], "problems": []}))
    with pytest.raises(bench.ManifestError):
        bench.load_manifest(_manifest(tmp_path, {
            "problems": [{"family": "blocks", "generate": {"sizes": [1]}}]}))


def test_unreadable_manifest(tmp_path):
    with pytest.raises(bench.ManifestError):
        bench.load_manifest(tmp_path / "absent.json")


@pytest.fixture(scope="module")
def families_run():
    m = bench.expand({"timeout": 120, "problems": [
        {"family": f, "generate": {"sizes": list(range(1, 11)), "seed": 0}} for f in FAMILIES]},
        data_path("rover-domain.pddl").parent)
    return m, bench.run_bench(m)


def test_families_table(families_run):
    m, records = families_run
    t = bench.tables(records, m["planners"])
    assert list(t) == list(FAMILIES)
    for fam in FAMILIES:
        assert len(t[fam]["rows"]) == 10
        for row in t[fam]["rows"].values():
            assert row["ishop"]["status"] == row["shop"]["status"] == "solved"
            assert row["ishop"]["length"] == row["shop"]["length"]
        assert 0 < t[fam]["totals"]["ishop"] <= 10
    s = bench.series(records, m["planners"])
    assert len(s["rover"]["ishop"]["time_s"]) == 10


def test_results_are_stable_without_timings(families_run):
    m, records = families_run
    again = bench.run_bench(bench.expand({"timeout": 120, "problems": [
        {"family": "satellite", "generate": {"sizes": [1, 2, 3]}}]}, None))
    first = [r for r in records if r["family"] == "satellite"][:6]
    assert bench.strip_timings(again) == bench.strip_timings(first)

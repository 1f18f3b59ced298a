import pytest

from htnground.generators import basic_variant, load_family
from htnground.grounding import GroundingError, dump, estimate, ground
from htnground.model import After, And, Atom, Before, Not, Or, TaskNetwork
from htnground.parser import parse_problem
from htnground.oracle import raw_actions, raw_methods

from dataclasses import replace


def test_basic_counts(basic, basic_gp):
    s = basic_gp.stats
    # the "before" counts are the raw product sizes
    assert s["actions_before"] == len(raw_actions(basic)) == 161
    assert s["methods_before"] == len(raw_methods(basic)) == 372
    assert (s["actions_after"], s["methods_after"], s["propositions"]) == (47, 92, 32)


def test_report_lists_inertia_and_table_sizes(basic_gp):
    r = basic_gp.report
    assert "  can_traverse both" in r and "  at fluent" in r
    assert "  can_traverse 0" in r
    assert "task pass:" in r


def test_dump_is_byte_identical(basic):
    assert dump(ground(basic)) == dump(ground(basic))


def test_dump_lists_sections(basic_gp):
    text = dump(basic_gp)
    for head in ("problem rover-basic", "propositions 32", "actions 47", "methods 92",
                 "goal-tasks 1"):
        assert head in text


def test_estimate_reports_every_schema(basic):
    est = estimate(basic)
    assert est["navigate"] == 16
    assert est["do_navigate#2"] == 1 * 4 * 4 * 4
    assert set(est) >= {o.name for o in basic.operators}


def _with_goal(problem, *constraints):
    return replace(problem, network=TaskNetwork(problem.network.tasks, constraints))


def test_goal_constraints_are_routed(basic):
    at = Atom("at", ("rover1", "waypoint3"))
    comm = Atom("communicated_rock_data", ("waypoint1",))
    gp = ground(_with_goal(basic, Before(at, ("g1",)), After(And((comm, Not(at))), ("g1",))))
    assert gp.goal_pre_pos == {at}
    assert gp.goal_state_pos == {comm} and gp.goal_state_neg == {at}
    assert not gp.unsolvable


def test_false_goal_constraint_is_unsolvable(basic):
    # at_rock_sample is never added, so asking for a new one is impossible
    bad = Atom("at_rock_sample", ("waypoint0",))
    gp = ground(_with_goal(basic, Before(bad, ("g1",))))
    assert gp.unsolvable


def test_disjunctive_goal_state_is_rejected(basic):
    f = Or((Atom("at", ("rover1", "waypoint0")), Atom("at", ("rover1", "waypoint1"))))
    with pytest.raises(GroundingError):
        ground(_with_goal(basic, After(f, ("g1",))))


def test_missing_sample_leaves_nothing_for_the_goal(basic):
    p = parse_problem(basic_variant(drop=("(at_rock_sample waypoint1)",)), basic.domain)
    gp = ground(p)
    assert not any(a.name == "sample_rock" and a.args[2] == "waypoint1" for a in gp.actions)
    assert not gp.options[gp.goal_ids[0]]


def test_family_grounding_is_deterministic():
    p = load_family("satellite", 4)
    assert dump(ground(p)) == dump(ground(p))

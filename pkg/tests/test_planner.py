import pytest
from hypothesis import given, strategies as st

from htnground.generators import (
    FAMILIES, data_text, basic_variant, load_family, random_micro_problem,
)
from htnground.grounding import GroundingOptions, ground
from htnground.oracle import unsimplified_solutions
from htnground.parser import parse_domain, parse_problem
from htnground.planner import (
    DepthExceeded, PlanningFailure, SearchTimeout, solve_ishop, solve_shop_lifted,
)
from htnground.validate import validate_plan, validate_trace

BASIC_CORE = [("navigate", ("rover1", "waypoint3", "waypoint1")),
             ("sample_rock", ("rover1", "store", "waypoint1")),
             ("communicate_rock_data", ("rover1", "general", "waypoint1", "waypoint1", "waypoint0"))]

GUARD_DOMAIN = """
(define (domain guard)
  (:predicates (a) (b))
  (:action mk_b :parameters () :precondition (and) :effect (b))
  (:action kill_b :parameters () :precondition (and) :effect (not (b)))
  (:action mk_a :parameters () :precondition (and) :effect (a))
  (:method top
    :parameters ()
    :expansion ((tag t1 (mk_b)) (tag t2 (mid)) (tag t3 (mk_a)))
    :constraints (between (b) t1 t3))
  (:method mid
    :parameters ()
    :expansion ((tag s1 (kill_b)) (tag s2 (mk_b))))
  (:method mid
    :parameters ()
    :expansion ((tag s1 (mk_a))))
)
"""

GUARD_PROBLEM = """
(define (problem guard-1)
  (:domain guard)
  (:objects)
  (:init)
  (:goal-tasks ((tag g1 (top))))
)
"""


def _parse(domain, problem):
    d = parse_domain(domain)
    return parse_problem(problem, d)


def _basic_text_problem(text):
    return _parse(data_text("rover-domain.pddl"), text)


def _valid(gp, r):
    return validate_plan(gp, r.plan) is None and validate_trace(gp, r.trace, r.plan) is None


def test_basic_plan(basic_gp):
    r = solve_ishop(basic_gp)
    core = [s for s in r.steps if s[0] not in ("visit", "unvisit")]
    assert core == BASIC_CORE
    assert _valid(basic_gp, r)
    assert r.stats.nodes_expanded == 9


def test_basic_lifted_agrees(basic, basic_gp):
    assert solve_shop_lifted(basic).steps == solve_ishop(basic_gp).steps


def test_zero_timeout():
    from htnground.generators import load_bundled
    p = load_bundled("rover-domain.pddl", "rover-basic.pddl")
    with pytest.raises(SearchTimeout):
        solve_ishop(ground(p), timeout=0)
    with pytest.raises(SearchTimeout):
        solve_shop_lifted(p, timeout=0)


def test_unsolvable_variant():
    p = _basic_text_problem(basic_variant(drop=("(at_rock_sample waypoint1)",)))
    with pytest.raises(PlanningFailure):
        solve_ishop(ground(p))
    with pytest.raises(PlanningFailure):
        solve_shop_lifted(p)


def test_depth_cap(basic_gp):
    with pytest.raises(DepthExceeded):
        solve_ishop(basic_gp, depth=2)


def test_loop_check_does_not_change_plan(basic_gp):
    a = solve_ishop(basic_gp, loop_check=True)
    b = solve_ishop(basic_gp, loop_check=False)
    assert a.steps == b.steps
    assert a.stats.nodes_expanded <= b.stats.nodes_expanded


def test_protected_between_is_enforced():
    p = _parse(GUARD_DOMAIN, GUARD_PROBLEM)
    gp = ground(p)
    r = solve_ishop(gp)
    # the first mid method breaks (b) while it is protected
    assert r.steps == [("mk_b", ()), ("mk_a", ()), ("mk_a", ())]
    assert _valid(gp, r)
    assert solve_shop_lifted(p).steps == r.steps


def test_search_is_deterministic(basic_gp):
    a = solve_ishop(basic_gp)
    b = solve_ishop(basic_gp)
    assert a.steps == b.steps and a.stats.nodes_expanded == b.stats.nodes_expanded


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("size", [1, 4, 7])
def test_planners_agree_on_families(family, size):
    p = load_family(family, size, 0)
    gp = ground(p)
    a = solve_ishop(gp)
    b = solve_shop_lifted(p)
    assert a.steps == b.steps
    assert _valid(gp, a)
    assert a.stats.nodes_expanded <= b.stats.nodes_expanded


def test_method_fixpoint_keeps_the_plan(basic):
    a = solve_ishop(ground(basic))
    b = solve_ishop(ground(basic, GroundingOptions(method_fixpoint=False)))
    assert a.steps == b.steps
    assert a.stats.nodes_expanded <= b.stats.nodes_expanded


def _attempt(fn, *args):
    try:
        return fn(*args, timeout=5, depth=30)
    except (PlanningFailure, DepthExceeded, SearchTimeout):
        return None


@given(st.integers(0, 10_000))
def test_random_plans_are_valid_and_known_to_the_oracle(seed):
    p = random_micro_problem(seed)
    gp = ground(p)
    r = _attempt(solve_ishop, gp)
    if r is None:
        return
    assert _valid(gp, r)
    lifted = _attempt(solve_shop_lifted, p)
    assert lifted is not None and lifted.steps == r.steps
    plans = {plan for plan, _ in unsimplified_solutions(p, 10)}
    if plans:
        assert tuple(r.steps) in plans

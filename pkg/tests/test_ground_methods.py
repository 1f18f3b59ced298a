import pytest

from htnground.generators import basic_variant, load_bundled, random_micro_problem
from htnground.ground_methods import (
    TaskPassReport, infer_method_var_types, simplify_methods_by_tasks,
)
from htnground.grounding import GroundingOptions, ground, prepare_methods
from htnground.model import (
    FALSE, Before, GroundAction, GroundMethod, TaskRef,
    TypingError,
)
from htnground.parser import parse_domain, parse_problem
from htnground.ground_actions import compute_inertia, ground_simplify
from htnground.normalize import normalize


def test_free_variable_types_are_inferred(basic):
    methods = {m.name: m for m in prepare_methods(basic)}
    assert dict(methods["do_navigate#2"].free_vars) == {"?mid": "waypoint"}
    assert dict(methods["get_rock_data#1"].free_vars) == {"?x": "rover", "?s": "store"}
    assert dict(methods["send_rock_data#1"].free_vars) == \
        {"?l": "lander", "?w": "waypoint", "?lw": "waypoint"}


def test_inference_prefers_the_more_specific_source():
    d = parse_domain("""
    (define (domain t) (:types vehicle - object rover - vehicle)
      (:predicates (near ?v - vehicle))
      (:action go :parameters (?r - rover) :precondition (and) :effect (near ?r))
      (:method top :parameters () :expansion ((tag t1 (go ?z)))
        :constraints (before (near ?z) t1)))""")
    m = infer_method_var_types(d.methods[0], d)
    assert dict(m.free_vars) == {"?z": "rover"}


def test_inference_rejects_unrelated_types():
    d = parse_domain("""
    (define (domain t) (:types a b - object)
      (:predicates (pa ?x - a))
      (:action go :parameters (?r - b) :precondition (and) :effect (and))
      (:method top :parameters () :expansion ((tag t1 (go ?z)))
        :constraints (before (pa ?z) t1)))""")
    with pytest.raises(TypingError):
        infer_method_var_types(d.methods[0], d)


def test_before_becomes_false_with_direct_edge():
    """(before (and (not (can_traverse ..)) ..) t1) folds to false once the edge exists."""
    problem = load_bundled("rover-domain.pddl", "rover-basic.pddl")
    domain = problem.domain
    problem = parse_problem(basic_variant(add=("(can_traverse rover1 waypoint3 waypoint0)",)),
                            domain)
    m = next(m for m in prepare_methods(problem) if m.name == "do_navigate#2")
    before = next(c for c in m.constraints if isinstance(c, Before))
    inertia = compute_inertia(problem.operators, domain.predicates)
    f = normalize(before.formula, problem.hierarchy, {v for v, _ in m.variables})
    sigma = {"?x": "rover1", "?from": "waypoint3", "?to": "waypoint0", "?mid": "waypoint1"}
    assert ground_simplify(f, sigma, inertia, problem.init) == FALSE


def _has(gp, name, args):
    return any(m.name == name and m.args == args for m in gp.methods)


def test_direct_edge_deletes_the_detour_instance(basic):
    args = ("rover1", "waypoint3", "waypoint0", "waypoint1")
    assert _has(ground(basic), "do_navigate#2", args)
    variant = parse_problem(basic_variant(add=("(can_traverse rover1 waypoint3 waypoint0)",)),
                            basic.domain)
    gp = ground(variant)
    assert not _has(gp, "do_navigate#2", args)
    assert _has(gp, "do_navigate#1", ("rover1", "waypoint3", "waypoint0"))


def test_chain_fixpoint():
    problem = load_bundled("chain-domain.pddl", "chain-problem.pddl")
    gp = ground(problem)
    assert gp.stats["fixpoint_iterations"] == 2
    assert gp.stats["methods_before"] == 2 and gp.stats["methods_after"] == 0
    one = ground(problem, GroundingOptions(method_fixpoint=False))
    assert one.stats["methods_after"] == 1
    assert one.stats["fixpoint_iterations"] == 1


def _gm(name, task, subtasks):
    return GroundMethod(name, (), TaskRef(task), tuple(
        (f"t{i}", TaskRef(n, (), prim)) for i, (n, prim) in enumerate(subtasks)))


def test_recursive_methods_survive_the_fixpoint():
    act = GroundAction("act", (), frozenset(), frozenset(), frozenset(), frozenset())
    methods = [_gm("loop#1", "loop", [("act", True), ("loop", False)]),
               _gm("loop#2", "loop", [("act", True)]),
               _gm("spin", "spin", [("spin", False)]),
               _gm("dead", "dead", [("missing", True)]),
               _gm("up", "up", [("dead", False)])]
    report = TaskPassReport()
    alive = simplify_methods_by_tasks(methods, [act], report=report)
    assert [m.name for m in alive] == ["loop#1", "loop#2", "spin"]
    assert report.deleted_primitive == 1 and report.deleted_compound == 1
    assert report.iterations == 2


@pytest.mark.parametrize("seed", range(30))
def test_task_pass_properties(seed):
    problem = random_micro_problem(seed)
    gp = ground(problem)
    tasks = {m.task.key for m in gp.methods} | {a.task.key for a in gp.actions}
    for m in gp.methods:
        for _, t in m.subtasks:
            assert t.key in tasks                           # closure
    n_methods = gp.stats["methods_before"]
    assert gp.stats["fixpoint_iterations"] - 1 <= n_methods  # deleting rounds bounded

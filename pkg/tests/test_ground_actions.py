from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from htnground import kernels
from htnground.generators import load_family, random_micro_problem
from htnground.ground_actions import (
    FLUENT, InertiaReport, OperatorCounts, compute_inertia, estimate_grounding_size,
    ground_simplify, instantiate_operators, simplify_atom, simplify_expression,
)
from htnground.grounding import GroundingOptions, estimate, ground
from htnground.model import FALSE, TRUE, And, Atom, Not, Or
from htnground.oracle import ground_reachable, raw_actions, raw_reachable

P, Q = Atom("p", ("a",)), Atom("q", ("a",))


def test_rover_inertia_classes(basic):
    inertia = compute_inertia(basic.operators, basic.domain.predicates)
    classes = inertia.classes()
    assert classes["can_traverse"] == "both"
    assert classes["at"] == FLUENT
    assert classes["at_rock_sample"] == "pos-inertia"
    assert classes["communicated_rock_data"] == "neg-inertia"


def test_simplify_atom_truth_table():
    inert = InertiaReport(("p", "q"), frozenset({"p"}), frozenset({"q"}))
    assert simplify_atom(P, inert, set()) == FALSE
    assert simplify_atom(P, inert, {P}) == P
    assert simplify_atom(Q, inert, {Q}) == TRUE
    assert simplify_atom(Q, inert, set()) == Q
    both = InertiaReport(("p",), frozenset({"p"}), frozenset({"p"}))
    assert simplify_atom(P, both, {P}) == TRUE
    assert simplify_atom(P, both, set()) == FALSE


@pytest.mark.parametrize("expr,want", [
    (Not(TRUE), FALSE), (Not(FALSE), TRUE),
    (And((P, TRUE)), P), (And((P, FALSE)), FALSE),
    (Or((P, FALSE)), P), (Or((P, TRUE)), TRUE),
    (And((P, P)), P), (Or((P, P)), P),
    (And((P, Not(P))), FALSE), (Or((P, Not(P))), TRUE),
    (And(()), TRUE), (Or(()), FALSE),
    (And((P, And((Q, TRUE)))), And((P, Q))),
])
def test_simplification_identities(expr, want):
    assert simplify_expression(expr) == want


def test_ground_simplify_substitutes_then_folds():
    inert = InertiaReport(("p", "q"), frozenset({"p"}), frozenset())
    e = And((Atom("p", ("?x",)), Atom("q", ("?x",))))
    assert ground_simplify(e, {"?x": "a"}, inert, set()) == FALSE
    assert ground_simplify(e, {"?x": "a"}, inert, {P}) == And((P, Q))
    static = InertiaReport(("p", "q"), frozenset({"p"}), frozenset({"p"}))
    assert ground_simplify(e, {"?x": "a"}, static, {P}) == Q


def test_estimate_is_the_product_of_domain_sizes(basic):
    nav = basic.domain.operator("navigate")
    assert estimate_grounding_size(nav, basic.hierarchy) == 1 * 4 * 4
    com = basic.domain.operator("communicate_rock_data")
    assert estimate_grounding_size(com, basic.hierarchy) == 1 * 1 * 4 * 4 * 4


@pytest.mark.parametrize("family,size", [("rover", 2), ("childsnack", 2), ("satellite", 3)])
def test_count_law(family, size):
    problem = load_family(family, size)
    est = estimate(problem)
    counts = {}
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    instantiate_operators(problem.operators, problem.hierarchy, inertia, problem.init,
                          problem.domain.predicates, drop_noops=False, counts=counts)
    for name, c in counts.items():
        assert c.candidates == est[name]
        assert c.candidates == (c.kept + c.deleted_by_precondition + c.deleted_by_effect
                                + c.deleted_noop)
    assert sum(c.candidates for c in counts.values()) == len(raw_actions(problem))


def test_noops_dropped_only_on_request():
    problem = load_family("satellite", 2)
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    keep = instantiate_operators(problem.operators, problem.hierarchy, inertia, problem.init,
                                 problem.domain.predicates, drop_noops=False)
    counts: dict[str, OperatorCounts] = {}
    drop = instantiate_operators(problem.operators, problem.hierarchy, inertia, problem.init,
                                 problem.domain.predicates, drop_noops=True, counts=counts)
    assert any(a.name == "confirm" for a in keep)
    assert not any(a.name == "confirm" for a in drop)
    assert counts["confirm"].deleted_noop > 0


def test_surviving_actions_mention_no_inertia_atoms(basic_gp):
    inertia = basic_gp.inertia
    for a in basic_gp.actions:
        for atom in a.pre_pos | a.pre_neg:
            assert atom.predicate not in (inertia.positive & inertia.negative)
    assert not any(a.predicate == "can_traverse" for a in basic_gp.table)


def test_rover_navigate_keeps_only_traversable_edges(basic_gp):
    nav = {a.args for a in basic_gp.actions if a.name == "navigate"}
    edges = {("3", "1"), ("1", "3"), ("3", "2"), ("2", "3"), ("2", "0"), ("0", "2"),
             ("1", "0"), ("0", "1")}
    assert nav == {("rover1", f"waypoint{a}", f"waypoint{b}") for a, b in edges}


def test_unary_scan_narrows_estimates():
    problem = random_micro_problem(3)
    full = estimate(problem)
    narrow = estimate(problem, unary_scan=True)
    assert all(narrow[k] <= full[k] for k in full)


@pytest.mark.parametrize("seed", range(25))
def test_inertia_soundness(seed):
    """Projected onto the table's atoms, raw and simplified reachability agree."""
    problem = random_micro_problem(seed)
    gp = ground(problem)
    raw = raw_reachable(problem)
    simple = ground_reachable(gp)
    table_atoms = set(gp.table)
    assert {s & table_atoms for s in raw} == {s & table_atoms for s in simple}


@pytest.mark.parametrize("seed", range(15))
def test_ground_is_deterministic(seed):
    from htnground.grounding import dump
    problem = random_micro_problem(seed)
    assert dump(ground(problem)) == dump(ground(problem))


# ---------------------------------------------------------------------------
# backends

@st.composite
def kernel_cases(draw):
    n = draw(st.integers(1, 5))
    k = draw(st.integers(0, 4))
    domains = [draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n)) for _ in range(k)]
    lits = []
    for _ in range(draw(st.integers(0, 4))):
        arity = draw(st.integers(0, 2))
        slots = tuple(draw(st.integers(-n, k - 1)) for _ in range(arity))
        lits.append(kernels.KillLiteral(draw(st.sampled_from([0, 25])), slots,
                                        draw(st.booleans()), draw(st.integers(0, 1))))
    s0 = np.unique(np.array(draw(st.lists(st.integers(0, 49), max_size=30)), dtype=np.int64))
    return domains, lits, s0, n


def brute(domains, lits, s0, n):
    keep, killed = [], [0, 0]
    members = set(s0.tolist())
    for digits in product(*[range(len(d)) for d in domains]):
        vals = [d[i] for d, i in zip(domains, digits)]
        dead = None
        for lit in sorted(lits, key=lambda l: l.last):
            key, mul = lit.offset, 1
            for s in lit.slots:
                key += (vals[s] if s >= 0 else -s - 1) * mul
                mul *= n
            if (key in members) == lit.kill_if_member:
                dead = lit
                break
        if dead is None:
            c = 0
            for d, i in zip(domains, digits):
                c = c * len(d) + i
            keep.append(c)
        else:
            killed[dead.group] += 1
    return keep, killed


@given(kernel_cases())
def test_backends_match_brute_force(case):
    domains, lits, s0, n = case
    want_keep, want_killed = brute(domains, lits, s0, n)
    for backend in ("numpy", "numba"):
        surv, killed = kernels.enumerate_candidates(domains, lits, s0, n, 2, backend)
        assert surv.tolist() == want_keep
        assert killed.tolist() == want_killed


def test_backends_agree_on_rover():
    problem = load_family("rover", 5)
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    out = {}
    for backend in ("numpy", "numba"):
        out[backend] = instantiate_operators(
            problem.operators, problem.hierarchy, inertia, problem.init,
            problem.domain.predicates, drop_noops=False, backend=backend)
    assert out["numpy"] == out["numba"]


def test_backend_env_flag(monkeypatch):
    monkeypatch.setenv("HTNGROUND_BACKEND", "numpy")
    assert kernels.backend_name(10 ** 9) == "numpy"
    monkeypatch.setenv("HTNGROUND_BACKEND", "auto")
    assert kernels.backend_name(10) == "numpy"
    assert kernels.backend_name(kernels.AUTO_NUMBA_MIN) == ("numba" if kernels.HAVE_NUMBA
                                                             else "numpy")
    monkeypatch.setenv("HTNGROUND_BACKEND", "gpu")
    with pytest.raises(ValueError):
        kernels.backend_name()


def test_grounding_identical_under_both_backends():
    from htnground.grounding import dump
    problem = load_family("childsnack", 3)
    a = dump(ground(problem, GroundingOptions(backend="numpy")))
    b = dump(ground(problem, GroundingOptions(backend="numba")))
    assert a == b

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from htnground.model import (
    FALSE, TRUE, And, Atom, Exists, Forall, Imply, Not, Or, Truth, TypeHierarchy,
)
from htnground.normalize import DNFExplosion, NormalizationError, normalize, to_dnf
from htnground.validate import holds

ATOMS = [Atom(f"a{i}", ()) for i in range(10)]


def exprs(depth=4):
    leaf = st.sampled_from(ATOMS) | st.sampled_from([TRUE, FALSE])
    return st.recursive(leaf, lambda kids: st.one_of(
        kids.map(Not),
        st.lists(kids, min_size=0, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(kids, min_size=0, max_size=3).map(lambda xs: Or(tuple(xs))),
        st.tuples(kids, kids).map(lambda ab: Imply(*ab)),
    ), max_leaves=12)


def evaluate(e, state):
    if isinstance(e, Imply):
        return (not evaluate(e.lhs, state)) or evaluate(e.rhs, state)
    if isinstance(e, Not):
        return not evaluate(e.arg, state)
    if isinstance(e, And):
        return all(evaluate(a, state) for a in e.args)
    if isinstance(e, Or):
        return any(evaluate(a, state) for a in e.args)
    return holds(e, state)


def forbidden(e):
    if isinstance(e, (Imply, Forall, Exists)):
        return True
    if isinstance(e, Not):
        return not isinstance(e.arg, Atom)
    if isinstance(e, (And, Or)):
        return any(forbidden(a) for a in e.args)
    return False


H = TypeHierarchy()


def assignments(e):
    names = sorted({a for a in ATOMS if a.predicate in str(e)}, key=str)
    for bits in itertools.product([False, True], repeat=len(names)):
        yield frozenset(a for a, b in zip(names, bits) if b)


@given(exprs())
def test_normalize_is_idempotent_and_in_nnf(e):
    n = normalize(e, H)
    assert not forbidden(n)
    assert normalize(n, H) == n


@given(exprs())
def test_normalize_and_dnf_preserve_truth(e):
    n = normalize(e, H)
    clauses = to_dnf(n)
    for s in assignments(e):
        want = evaluate(e, s)
        assert holds(n, s) == want
        assert any(all(holds(lit, s) for lit in cl) for cl in clauses) == want


def test_implication_rule():
    a, b = ATOMS[:2]
    assert normalize(Imply(a, b), H) == Or((Not(a), b))
    assert normalize(Not(Imply(a, b)), H) == And((a, Not(b)))


def test_quantifiers_expand_over_instances():
    h = TypeHierarchy({"t": "object"}, {"x": "t", "y": "t", "z": "object"})
    body = Atom("p", ("?v",))
    assert normalize(Forall("?v", "t", body), h) == And((Atom("p", ("x",)), Atom("p", ("y",))))
    assert normalize(Exists("?v", "t", body), h) == Or((Atom("p", ("x",)), Atom("p", ("y",))))
    assert normalize(Not(Forall("?v", "t", body)), h) == \
        Or((Not(Atom("p", ("x",))), Not(Atom("p", ("y",)))))
    empty = TypeHierarchy({"t": "object"})
    assert normalize(Forall("?v", "t", body), empty) == TRUE
    assert normalize(Exists("?v", "t", body), empty) == FALSE


def test_unbound_variable_is_reported():
    with pytest.raises(NormalizationError):
        normalize(Atom("p", ("?v",)), H, bound=set())


def test_dnf_cap():
    e = And(tuple(Or((ATOMS[i], Not(ATOMS[i]))) for i in range(10)))
    assert len(to_dnf(e, cap=1024)) == 1024
    with pytest.raises(DNFExplosion):
        to_dnf(e, cap=1000)


def test_dnf_constants():
    assert to_dnf(TRUE) == [()]
    assert to_dnf(FALSE) == []
    assert to_dnf(And((ATOMS[0], ATOMS[0]))) == [(ATOMS[0],)]
    assert isinstance(normalize(And(()), H), Truth)

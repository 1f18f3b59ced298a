import pytest
from hypothesis import given
from hypothesis import strategies as st

from htnground.model import (
    ROOT_TYPE, And, Atom, GroundAction, ModelError, Not, PropositionTable, State,
    TaskRef, TypeHierarchy, TypingError, applicable, apply, atoms_of, substitute,
    variables_of,
)


def hierarchy():
    h = TypeHierarchy({"vehicle": ROOT_TYPE, "rover": "vehicle", "place": ROOT_TYPE})
    for name, t in [("r1", "rover"), ("v1", "vehicle"), ("p1", "place"), ("p2", "place")]:
        h.add_object(name, t)
    return h


def test_instances_follow_declaration_order_and_subtypes():
    h = hierarchy()
    assert h.instances_of("vehicle") == ("r1", "v1")
    assert h.instances_of("rover") == ("r1",)
    assert h.instances_of(ROOT_TYPE) == ("r1", "v1", "p1", "p2")
    assert h.is_subtype("rover", ROOT_TYPE)
    assert not h.is_subtype("vehicle", "rover")


def test_unknown_and_cyclic_types_are_rejected():
    h = hierarchy()
    with pytest.raises(TypingError):
        h.instances_of("boat")
    with pytest.raises(TypingError):
        h.add_object("x", "boat")
    with pytest.raises(TypingError):
        h.add_object("r1", "place")
    with pytest.raises(TypingError):
        TypeHierarchy({"a": "b", "b": "a"})


def test_substitute_checks_types_when_asked():
    h = hierarchy()
    e = Atom("at", ("?x", "?p"))
    assert substitute(e, {"?x": "r1"}) == Atom("at", ("r1", "?p"))
    with pytest.raises(TypingError):
        substitute(e, {"?x": "p1"}, h, {"?x": "vehicle"})
    t = substitute(TaskRef("go", ("?x",)), {"?x": "r1"})
    assert t.key == ("go", ("r1",))


def test_atoms_and_variables():
    e = And((Atom("a", ("?x",)), Not(Atom("b", ("?y", "c")))))
    assert [a.predicate for a in atoms_of(e)] == ["a", "b"]
    assert variables_of(e) == ["?x", "?y"]


def test_ground_action_rejects_contradictions():
    p = Atom("p", ())
    with pytest.raises(ModelError):
        GroundAction("a", (), frozenset([p]), frozenset([p]), frozenset(), frozenset())
    with pytest.raises(ModelError):
        GroundAction("a", (), frozenset(), frozenset(), frozenset([p]), frozenset([p]))


ATOMS = [Atom("p", (str(i),)) for i in range(8)]
atom_sets = st.frozensets(st.sampled_from(ATOMS), max_size=8)


@given(st.lists(st.sampled_from(ATOMS), unique=True))
def test_interning_round_trips(atoms):
    t = PropositionTable()
    ids = [t.intern(a) for a in atoms]
    assert ids == list(range(len(atoms)))
    assert [t.atom(i) for i in ids] == atoms
    assert all(t.intern(a) == t.id(a) for a in atoms)
    assert State(t.mask(atoms)).atoms(t) == set(atoms)


@given(atom_sets, atom_sets, atom_sets, atom_sets, atom_sets)
def test_apply_frame_property(state, pre, neg, add, dele):
    dele = dele - add
    neg = neg - pre
    table = PropositionTable(ATOMS)
    a = GroundAction("a", (), pre, neg, add, dele)
    s = State(table.mask(state))
    before = s.bits
    t = apply(a, s, table)
    assert s.bits == before                      # input untouched
    out = t.atoms(table)
    assert out == (state - dele) | add
    for p in ATOMS:
        if p not in add and p not in dele:
            assert (p in out) == (p in state)   # frame
    assert applicable(a, s, table) == (pre <= state and not (neg & state))

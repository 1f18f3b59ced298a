import pytest

from htnground.generators import FAMILIES, data_text, family_problem, random_micro_problem
from htnground.model import After, Before, Between, Forall, Imply, Series
from htnground.parser import format_domain, format_problem, parse_domain, parse_problem
from htnground.sexpr import ParseError, read_all

DOMAINS = ["rover-domain.pddl", "childsnack-domain.pddl", "satellite-domain.pddl",
           "chain-domain.pddl"]


def test_reader_lowercases_and_tracks_positions():
    forms = read_all("(Foo\n  (BAR baz))", "x.pddl")
    assert forms == [["foo", ["bar", "baz"]]]
    assert forms[0][1].span.line == 2
    assert str(forms[0][1][0].span) == "x.pddl:2:4"


@pytest.mark.parametrize("text", ["(a (b)", "(a))", ")"])
def test_reader_reports_unbalanced_input(text):
    with pytest.raises(ParseError) as e:
        read_all(text, "bad.pddl")
    assert "bad.pddl" in str(e.value)


def test_rover_domain_structure(rover_domain_text):
    d = parse_domain(rover_domain_text)
    assert [o.name for o in d.operators][:3] == ["navigate", "visit", "unvisit"]
    labels = [m.name for m in d.methods]
    assert "do_navigate#2" in labels and "get_rock_data#1" in labels
    rec = next(m for m in d.methods if m.name == "do_navigate#2")
    assert [v for v, _ in rec.free_vars] == ["?mid"]
    kinds = {type(c) for c in rec.constraints}
    assert kinds == {Series, Before, After, Between}


def test_unknown_predicate_has_a_span():
    text = data_text("chain-domain.pddl").replace("(p)", "(q)", 1)
    with pytest.raises(Exception) as e:
        parse_domain(text, "chain.pddl")
    assert "chain.pddl:" in str(e.value)


def test_quantifiers_and_implication_parse():
    d = parse_domain("""
    (define (domain q) (:types t)
      (:predicates (p ?x - t) (r))
      (:action a :parameters ()
        :precondition (and (forall (?x - t) (p ?x)) (imply (r) (exists (?y - t) (p ?y))))
        :effect (r)))""")
    pre = d.operators[0].precondition
    assert isinstance(pre.args[0], Forall) and isinstance(pre.args[1], Imply)


@pytest.mark.parametrize("name", DOMAINS)
def test_domain_print_parse_fixpoint(name):
    d1 = parse_domain(data_text(name))
    text = format_domain(d1)
    d2 = parse_domain(text)
    assert format_domain(d2) == text
    assert d2.operators == d1.operators
    assert [m.name for m in d2.methods] == [m.name for m in d1.methods]


@pytest.mark.parametrize("family", FAMILIES)
def test_problem_print_parse_fixpoint(family):
    d = parse_domain(data_text(f"{family}-domain.pddl"))
    p1 = parse_problem(family_problem(family, 3), d)
    text = format_problem(p1)
    p2 = parse_problem(text, d)
    assert format_problem(p2) == text
    assert p2.init == p1.init and p2.network == p1.network


@pytest.mark.parametrize("seed", range(20))
def test_random_domains_print_parse_fixpoint(seed):
    p = random_micro_problem(seed)
    text = format_domain(p.domain)
    d2 = parse_domain(text)
    assert format_domain(d2) == text
    ptext = format_problem(p)
    assert format_problem(parse_problem(ptext, d2)) == ptext

"""Reader and printer for the domain/problem dialect.

Domains follow PDDL conventions for types, predicates and actions; methods
use ``:expansion`` with tagged subtasks and ``:constraints`` over the tags::

    (:method do_navigate
      :parameters (?x - rover ?from ?to - waypoint)
      :expansion ((tag t1 (navigate ?x ?from ?mid)) ...)
      :constraints (and (series t1 t2) (before (visited ?mid) t1)))

Problems give ``:objects``, ``:init``, ``:goal-tasks`` and optionally
``:goal-constraints``.
"""

from __future__ import annotations

from pathlib import Path

from .model import (
    ROOT_TYPE, FALSE, TRUE, After, And, Atom, Before, Between, Domain, Exists,
    Expression, Forall, Imply, MethodSchema, Not, OperatorSchema, Or, Problem,
    Series, TaskNetwork, TaskRef, Truth, TypeHierarchy, constraint_tags,
    is_variable, variables_of,
)
from .sexpr import ParseError, SList, read_all, span_of


def _fail(msg: str, node) -> ParseError:
    return ParseError(msg, span_of(node))


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, list):
        raise _fail(f"expected {what}", node)
    return node


def _expect_symbol(node, what: str) -> str:
    if isinstance(node, list):
        raise _fail(f"expected {what}", node)
    return str(node)


def _typed_list(items) -> list[tuple[str, str]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        tok = _expect_symbol(items[i], "name")
        if tok == "-":
            if i + 1 >= len(items) or not pending:
                raise _fail("dangling '-' in typed list", items[i])
            t = items[i + 1]
            if isinstance(t, list):
                if t and str(t[0]) == "either":
                    raise _fail("'either' types are not supported", t)
                raise _fail("expected a type name", t)
            out.extend((p, str(t)) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _sections(form, start: int):
    """Yield (keyword, node) for the ``(:key ...)`` sections of a define."""
    for node in form[start:]:
        lst = _expect_list(node, "a (:section ...)")
        if not lst:
            raise _fail("empty section", lst)
        yield _expect_symbol(lst[0], "section keyword"), lst


def _keyword_args(items, allowed: set[str]) -> dict:
    out = {}
    i = 0
    while i < len(items):
        key = _expect_symbol(items[i], "keyword")
        if key not in allowed:
            raise _fail(f"unexpected keyword {key}", items[i])
        if i + 1 >= len(items):
            raise _fail(f"missing value for {key}", items[i])
        if key in out:
            raise _fail(f"duplicate {key}", items[i])
        out[key] = items[i + 1]
        i += 2
    return out


class _Scope:
    """What a formula may mention: predicates, constants and variables."""

    def __init__(self, domain: Domain, variables: dict[str, str],
                 objects: dict[str, str] | None = None, allow_free: bool = False):
        self.domain = domain
        self.variables = variables
        self.objects = objects if objects is not None else domain.constants
        self.allow_free = allow_free

    def term(self, tok, bound: frozenset[str]) -> str:
        t = _expect_symbol(tok, "term")
        if is_variable(t):
            if t in bound or t in self.variables or self.allow_free:
                return t
            raise _fail(f"undeclared variable {t}", tok)
        if t not in self.objects:
            raise _fail(f"unknown constant {t}", tok)
        return t


def _parse_atom(node, scope: _Scope, bound: frozenset[str]) -> Atom:
    pred = _expect_symbol(node[0], "predicate name")
    sig = scope.domain.predicates.get(pred)
    if sig is None:
        raise _fail(f"unknown predicate {pred}", node[0])
    if len(node) - 1 != len(sig):
        raise _fail(f"{pred} expects {len(sig)} arguments, got {len(node) - 1}", node)
    return Atom(pred, tuple(scope.term(a, bound) for a in node[1:]))


def _parse_expr(node, scope: _Scope, bound: frozenset[str] = frozenset()) -> Expression:
    lst = _expect_list(node, "a formula")
    if not lst:
        return TRUE
    head = _expect_symbol(lst[0], "formula head")
    if head == "and":
        return And(tuple(_parse_expr(a, scope, bound) for a in lst[1:]))
    if head == "or":
        return Or(tuple(_parse_expr(a, scope, bound) for a in lst[1:]))
    if head == "not":
        if len(lst) != 2:
            raise _fail("not takes one argument", lst)
        return Not(_parse_expr(lst[1], scope, bound))
    if head == "imply":
        if len(lst) != 3:
            raise _fail("imply takes two arguments", lst)
        return Imply(_parse_expr(lst[1], scope, bound), _parse_expr(lst[2], scope, bound))
    if head in ("forall", "exists"):
        if len(lst) != 3:
            raise _fail(f"{head} takes a variable list and a body", lst)
        params = _typed_list(_expect_list(lst[1], "quantified variables"))
        for v, t in params:
            if not is_variable(v):
                raise _fail(f"expected a variable, got {v}", lst[1])
            if t not in scope.domain.hierarchy.types:
                raise _fail(f"unknown type {t}", lst[1])
        body = _parse_expr(lst[2], scope, bound | {v for v, _ in params})
        kind = Forall if head == "forall" else Exists
        for v, t in reversed(params):
            body = kind(v, t, body)
        return body
    if head == "when":
        raise _fail("conditional effects are not supported", lst)
    if head in ("true", "false") and len(lst) == 1 and head not in scope.domain.predicates:
        return TRUE if head == "true" else FALSE
    if head == "=":
        raise _fail("equality atoms are not supported", lst)
    return _parse_atom(lst, scope, bound)


def _check_effect(e: Expression, node) -> None:
    if isinstance(e, Atom):
        return
    if isinstance(e, Not) and isinstance(e.arg, Atom):
        return
    if isinstance(e, And):
        for a in e.args:
            _check_effect(a, node)
        return
    if isinstance(e, Forall):
        _check_effect(e.body, node)
        return
    if isinstance(e, Truth) and e.value:
        return
    raise _fail("effects must be conjunctions of literals", node)


def _parse_group(node) -> tuple[str, ...]:
    if isinstance(node, list):
        tags = tuple(_expect_symbol(t, "tag") for t in node)
        if not tags:
            raise _fail("empty tag group", node)
        return tags
    return (str(node),)


def _parse_constraint(node, scope: _Scope):
    lst = _expect_list(node, "a constraint")
    if not lst:
        raise _fail("empty constraint", lst)
    head = _expect_symbol(lst[0], "constraint keyword")
    if head == "series":
        if len(lst) < 2:
            raise _fail("series needs at least one tag", lst)
        return Series(tuple(_expect_symbol(t, "tag") for t in lst[1:])), lst
    if head in ("before", "after"):
        if len(lst) != 3:
            raise _fail(f"{head} takes a formula and a tag group", lst)
        f = _parse_expr(lst[1], scope)
        cls = Before if head == "before" else After
        return cls(f, _parse_group(lst[2])), lst
    if head == "between":
        if len(lst) != 4:
            raise _fail("between takes a formula and two tag groups", lst)
        f = _parse_expr(lst[1], scope)
        return Between(f, _parse_group(lst[2]), _parse_group(lst[3])), lst
    raise _fail(f"unknown constraint keyword {head}", lst[0])


def _parse_constraints(node, scope: _Scope):
    lst = _expect_list(node, "constraints")
    if not lst:
        return []
    if str(lst[0]) == "and" and not isinstance(lst[0], list):
        return [_parse_constraint(c, scope) for c in lst[1:]]
    return [_parse_constraint(lst, scope)]


def _parse_task(node, scope: _Scope) -> TaskRef:
    lst = _expect_list(node, "a task")
    if not lst:
        raise _fail("empty task", lst)
    name = _expect_symbol(lst[0], "task name")
    return TaskRef(name, tuple(scope.term(a, frozenset()) for a in lst[1:]))


def _parse_network(tasks_node, constraints_node, scope: _Scope, what: str):
    tasks: list[tuple[str, TaskRef]] = []
    spans = {}
    for entry in _expect_list(tasks_node, f"{what} task list"):
        e = _expect_list(entry, "(tag T task)")
        if len(e) != 3 or _expect_symbol(e[0], "tag") != "tag":
            raise _fail("expected (tag <name> <task>)", e)
        tag = _expect_symbol(e[1], "tag name")
        if tag in spans:
            raise _fail(f"duplicate tag {tag}", e[1])
        spans[tag] = e
        tasks.append((tag, _parse_task(e[2], scope)))
    constraints = []
    if constraints_node is not None:
        for c, cnode in _parse_constraints(constraints_node, scope):
            for t in constraint_tags(c):
                if t not in spans:
                    raise _fail(f"constraint refers to unknown tag {t}", cnode)
            constraints.append(c)
    return tuple(tasks), tuple(constraints), spans


def _resolve_task(t: TaskRef, domain: Domain, node) -> TaskRef:
    prim = domain.is_primitive(t.name)
    comp = domain.is_compound(t.name)
    if not prim and not comp:
        raise _fail(f"no operator or method is relevant for task {t.name}", node)
    if prim:
        arity = len(domain.operator(t.name).params)
    else:
        arity = len(domain.methods_for(t.name)[0].params)
    if arity != len(t.args):
        raise _fail(f"task {t.name} expects {arity} arguments, got {len(t.args)}", node)
    return TaskRef(t.name, t.args, prim)


def _define_header(form, kind: str) -> str:
    lst = _expect_list(form, "(define ...)")
    if len(lst) < 2 or _expect_symbol(lst[0], "define") != "define":
        raise _fail("expected (define ...)", lst)
    head = _expect_list(lst[1], f"({kind} <name>)")
    if len(head) != 2 or _expect_symbol(head[0], kind) != kind:
        raise _fail(f"expected ({kind} <name>)", head)
    return _expect_symbol(head[1], f"{kind} name")


def _single_form(text: str, file: str):
    forms = read_all(text, file)
    if len(forms) != 1:
        raise ParseError(f"expected one (define ...) form, found {len(forms)}",
                         span_of(forms[1]) if len(forms) > 1 else None)
    return forms[0]


def parse_domain(text: str, file: str = "<domain>") -> Domain:
    form = _single_form(text, file)
    name = _define_header(form, "domain")
    hierarchy = TypeHierarchy()
    domain = Domain(name, hierarchy, {}, [], [])
    raw_actions, raw_methods = [], []
    for key, sec in _sections(form, 2):
        if key == ":requirements":
            continue
        elif key == ":types":
            for t, parent in _typed_list(sec[1:]):
                hierarchy.add_type(t, parent)
        elif key == ":constants":
            for c, t in _typed_list(sec[1:]):
                if t not in hierarchy.types:
                    raise _fail(f"unknown type {t}", sec)
                hierarchy.add_object(c, t)
                domain.constants[c] = t
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "a predicate declaration")
                pname = _expect_symbol(p[0], "predicate name")
                if pname in domain.predicates:
                    raise _fail(f"duplicate predicate {pname}", p)
                args = _typed_list(p[1:])
                for _, t in args:
                    if t not in hierarchy.types:
                        raise _fail(f"unknown type {t}", p)
                domain.predicates[pname] = tuple(t for _, t in args)
        elif key == ":action":
            raw_actions.append(sec)
        elif key == ":method":
            raw_methods.append(sec)
        else:
            raise _fail(f"unknown domain section {key}", sec)

    for sec in raw_actions:
        domain.operators.append(_parse_action(sec, domain))
    names = [o.name for o in domain.operators]
    for o in domain.operators:
        if names.count(o.name) > 1:
            raise ParseError(f"duplicate action {o.name}", None)

    parsed = [_parse_method(sec, domain) for sec in raw_methods]
    counts: dict[str, int] = {}
    for m, _ in parsed:
        counts[m.task] = counts.get(m.task, 0) + 1
    seen: dict[str, int] = {}
    for m, sec in parsed:
        if m.task in names:
            raise _fail(f"{m.task} is both an operator and a method name", sec)
        seen[m.task] = seen.get(m.task, 0) + 1
        label = m.task if counts[m.task] == 1 else f"{m.task}#{seen[m.task]}"
        domain.methods.append(MethodSchema(label, m.task, m.params, m.subtasks,
                                           m.constraints, m.free_vars))
    arity: dict[str, int] = {}
    for m, (_, sec) in zip(domain.methods, parsed):
        if arity.setdefault(m.task, len(m.params)) != len(m.params):
            raise _fail(f"methods for {m.task} disagree on arity", sec)

    # resolve subtasks now that every task name is known
    for i, (m, (_, sec)) in enumerate(zip(domain.methods, parsed)):
        subtasks = tuple((tag, _resolve_task(t, domain, sec)) for tag, t in m.subtasks)
        domain.methods[i] = MethodSchema(m.name, m.task, m.params, subtasks,
                                         m.constraints, m.free_vars)
    return domain


def _params(node, domain: Domain) -> tuple[tuple[str, str], ...]:
    params = _typed_list(_expect_list(node, "a parameter list"))
    seen = set()
    for v, t in params:
        if not is_variable(v):
            raise _fail(f"parameter {v} must start with '?'", node)
        if v in seen:
            raise _fail(f"duplicate parameter {v}", node)
        seen.add(v)
        if t not in domain.hierarchy.types:
            raise _fail(f"unknown type {t}", node)
    return tuple(params)


def _parse_action(sec, domain: Domain) -> OperatorSchema:
    if len(sec) < 2:
        raise _fail("action needs a name", sec)
    name = _expect_symbol(sec[1], "action name")
    kw = _keyword_args(sec[2:], {":parameters", ":precondition", ":effect"})
    params = _params(kw.get(":parameters", SList()), domain)
    scope = _Scope(domain, dict(params))
    pre = _parse_expr(kw[":precondition"], scope) if ":precondition" in kw else TRUE
    eff = _parse_expr(kw[":effect"], scope) if ":effect" in kw else And(())
    _check_effect(eff, kw.get(":effect", sec))
    return OperatorSchema(name, params, pre, eff)


def _parse_method(sec, domain: Domain):
    if len(sec) < 2:
        raise _fail("method needs a name", sec)
    task = _expect_symbol(sec[1], "method name")
    kw = _keyword_args(sec[2:], {":parameters", ":expansion", ":constraints"})
    params = _params(kw.get(":parameters", SList()), domain)
    scope = _Scope(domain, dict(params), allow_free=True)
    tasks, constraints, _ = _parse_network(kw.get(":expansion", SList()),
                                           kw.get(":constraints"), scope, "method")
    # order free variables by first occurrence: subtasks, then constraints
    declared = {v for v, _ in params}
    free: dict[str, None] = {}
    for _, t in tasks:
        for a in t.args:
            if is_variable(a) and a not in declared:
                free.setdefault(a)
    for c in constraints:
        if not isinstance(c, Series):
            for v in variables_of(c.formula):
                if v not in declared:
                    free.setdefault(v)
    m = MethodSchema(task, task, params, tasks, constraints,
                     tuple((v, None) for v in free))
    return m, sec


def parse_problem(text: str, domain: Domain, file: str = "<problem>") -> Problem:
    form = _single_form(text, file)
    name = _define_header(form, "problem")
    hierarchy = domain.hierarchy.copy()
    init_nodes, tasks_node, constraints_node = None, None, None
    for key, sec in _sections(form, 2):
        if key == ":domain":
            dname = _expect_symbol(sec[1], "domain name") if len(sec) > 1 else ""
            if dname != domain.name:
                raise _fail(f"problem is for domain {dname}, not {domain.name}", sec)
        elif key == ":requirements":
            continue
        elif key == ":objects":
            for o, t in _typed_list(sec[1:]):
                if t not in hierarchy.types:
                    raise _fail(f"object {o} has unknown type {t}", sec)
                if is_variable(o):
                    raise _fail(f"object names cannot start with '?': {o}", sec)
                hierarchy.add_object(o, t)
        elif key == ":init":
            init_nodes = sec[1:]
        elif key == ":goal-tasks":
            if len(sec) != 2:
                raise _fail(":goal-tasks takes one list of tagged tasks", sec)
            tasks_node = sec[1]
        elif key == ":goal-constraints":
            if len(sec) != 2:
                raise _fail(":goal-constraints takes one constraint form", sec)
            constraints_node = sec[1]
        else:
            raise _fail(f"unknown problem section {key}", sec)

    scope = _Scope(domain, {}, hierarchy.objects)
    init: list[Atom] = []
    for node in init_nodes or []:
        atom = _parse_atom(_expect_list(node, "an atom"), scope, frozenset())
        for arg, t, tok in zip(atom.args, domain.predicates[atom.predicate], node[1:]):
            if not hierarchy.is_subtype(hierarchy.objects[arg], t):
                raise _fail(f"{arg} is not a {t}", tok)
        if atom not in init:
            init.append(atom)

    tasks, constraints = (), ()
    if tasks_node is not None:
        tasks, constraints, spans = _parse_network(tasks_node, constraints_node, scope, "goal")
        tasks = tuple((tag, _resolve_task(t, domain, spans[tag])) for tag, t in tasks)
    elif constraints_node is not None:
        raise _fail(":goal-constraints without :goal-tasks", constraints_node)
    return Problem(name, domain, hierarchy, frozenset(init), TaskNetwork(tasks, constraints),
                   tuple(init))


def load(domain_path: str | Path, problem_path: str | Path) -> Problem:
    domain_path, problem_path = Path(domain_path), Path(problem_path)
    domain = parse_domain(domain_path.read_text(), str(domain_path))
    return parse_problem(problem_path.read_text(), domain, str(problem_path))


# ---------------------------------------------------------------------------
# printing

def _fmt_params(params) -> str:
    return " ".join(f"{v} - {t}" for v, t in params)


def _fmt_task(tag: str, t: TaskRef) -> str:
    return f"(tag {tag} {t})"


def _fmt_constraints(cs) -> str:
    if not cs:
        return "()"
    return "(and\n      " + "\n      ".join(str(c) for c in cs) + ")"


def format_domain(domain: Domain) -> str:
    h = domain.hierarchy
    lines = [f"(define (domain {domain.name})"]
    declared = [t for t in h.types if t != "object"]
    if declared:
        # parents before children keeps the output stable
        order = sorted(declared, key=lambda t: (len(h.ancestors(t)), t))
        lines.append("  (:types " + " ".join(f"{t} - {h.parent.get(t, 'object')}" for t in order) + ")")
    if domain.constants:
        lines.append("  (:constants " + " ".join(f"{c} - {t}" for c, t in domain.constants.items()) + ")")
    preds = []
    for p, sig in domain.predicates.items():
        args = " ".join(f"?a{i} - {t}" for i, t in enumerate(sig))
        preds.append(f"({p}{' ' + args if args else ''})")
    lines.append("  (:predicates " + " ".join(preds) + ")")
    for o in domain.operators:
        lines.append(f"  (:action {o.name}\n    :parameters ({_fmt_params(o.params)})"
                     f"\n    :precondition {o.precondition}\n    :effect {o.effect})")
    for m in domain.methods:
        exp = " ".join(_fmt_task(tag, t) for tag, t in m.subtasks)
        lines.append(f"  (:method {m.task}\n    :parameters ({_fmt_params(m.params)})"
                     f"\n    :expansion ({exp})\n    :constraints {_fmt_constraints(m.constraints)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def format_problem(problem: Problem) -> str:
    h = problem.hierarchy
    objs = [(o, t) for o, t in h.objects.items() if o not in problem.domain.constants]
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain.name})",
             "  (:objects " + " ".join(f"{o} - {t}" for o, t in objs) + ")",
             "  (:init " + " ".join(str(a) for a in problem.init_order) + ")"]
    tasks = " ".join(_fmt_task(tag, t) for tag, t in problem.network.tasks)
    lines.append(f"  (:goal-tasks ({tasks}))")
    if problem.network.constraints:
        lines.append(f"  (:goal-constraints {_fmt_constraints(problem.network.constraints)})")
    lines.append(")")
    return "\n".join(lines) + "\n"

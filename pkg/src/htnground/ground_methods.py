"""Method grounding: variable typing, instantiation and the deletion passes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import kernels
from .ground_actions import (
    InertiaReport, _split_literals, enumerate_bindings, ground_simplify,
)
from .model import (
    FALSE, TRUE, And, Before, Constraint, Domain, Expression, GroundAction,
    GroundMethod, MethodSchema, Series, TaskRef, TypeHierarchy, TypingError,
    _substitute, atoms_of, with_formula,
)
from .normalize import normalize, to_dnf


# ---------------------------------------------------------------------------
# type inference

def _most_specific(types: list[str], hierarchy: TypeHierarchy, var: str, where: str) -> str:
    best = types[0]
    for t in types[1:]:
        if hierarchy.is_subtype(t, best):
            best = t
        elif not hierarchy.is_subtype(best, t):
            raise TypingError(f"{var} in {where}: unrelated candidate types {best} and {t}")
    return best


def infer_method_var_types(m: MethodSchema, domain: Domain) -> MethodSchema:
    """Give every undeclared variable of `m` a type.

    Candidates come from the subtasks (the parameter type of the relevant
    operator or methods at the same position) and from the predicate
    signatures of constraint atoms.  Each source keeps its most specific
    candidate, then the most specific of the two sources wins.  Unrelated
    candidates raise TypingError.
    """
    if all(t is not None for _, t in m.free_vars):
        return m
    h = domain.hierarchy
    typed = []
    for var, known in m.free_vars:
        if known is not None:
            typed.append((var, known))
            continue
        from_tasks: list[str] = []
        for _, t in m.subtasks:
            for i, a in enumerate(t.args):
                if a != var:
                    continue
                op = domain.operator(t.name)
                if op is not None:
                    from_tasks.append(op.params[i][1])
                for other in domain.methods_for(t.name):
                    from_tasks.append(other.params[i][1])
        from_constraints: list[str] = []
        for c in m.constraints:
            if isinstance(c, Series):
                continue
            for atom in atoms_of(c.formula):
                for i, a in enumerate(atom.args):
                    if a == var:
                        from_constraints.append(domain.predicates[atom.predicate][i])
        picks = []
        if from_tasks:
            picks.append(_most_specific(from_tasks, h, var, f"subtasks of {m.name}"))
        if from_constraints:
            picks.append(_most_specific(from_constraints, h, var, f"constraints of {m.name}"))
        if not picks:
            raise TypingError(f"cannot infer a type for {var} in method {m.name}")
        typed.append((var, _most_specific(picks, h, var, f"method {m.name}")))
    return MethodSchema(m.name, m.task, m.params, m.subtasks, m.constraints, tuple(typed))


# ---------------------------------------------------------------------------
# instantiation

@dataclass
class MethodCounts:
    candidates: int = 0
    kept: int = 0
    deleted_by_constraint: int = 0
    deleted_by_task: int = 0
    instances: int = 0  # after DNF splitting and task passes


@dataclass(frozen=True)
class MethodCandidate:
    """A substitution of a method schema with atom-simplified constraints."""

    name: str
    args: tuple[str, ...]
    task: TaskRef
    subtasks: tuple[tuple[str, TaskRef], ...]
    constraints: tuple[Constraint, ...]


def _normalize_constraints(m: MethodSchema, hierarchy: TypeHierarchy) -> tuple[Constraint, ...]:
    bound = {v for v, _ in m.variables}
    out = []
    for c in m.constraints:
        if isinstance(c, Series):
            out.append(c)
        else:
            out.append(with_formula(c, normalize(c.formula, hierarchy, bound)))
    return tuple(out)


def iter_method_candidates(methods: Iterable[MethodSchema], hierarchy: TypeHierarchy,
                           inertia: InertiaReport, s0, keys: kernels.AtomKeys, s0_keys,
                           counts: dict[str, MethodCounts] | None = None,
                           backend: str | None = None) -> Iterator[MethodCandidate]:
    """Candidates in schema order, then lexicographic substitution order.

    Substitutions that make a top-level conjunct of some constraint formula
    statically false never leave the enumeration kernel; they are counted
    as deleted by constraint.
    """
    for m in methods:
        if any(t is None for _, t in m.free_vars):
            raise TypingError(f"method {m.name} has untyped variables; run inference first")
        cs = _normalize_constraints(m, hierarchy)
        c = counts.setdefault(m.name, MethodCounts()) if counts is not None else None
        formulas = [(0, x.formula) for x in cs if not isinstance(x, Series)]
        en = enumerate_bindings(list(m.variables), formulas, 1, hierarchy, inertia,
                                s0_keys, keys, None, backend)
        if c is not None:
            c.candidates += en.total
            c.deleted_by_constraint += en.killed[0]
        names = [v for v, _ in m.variables]
        params = [v for v, _ in m.params]
        for sigma in en.bindings:
            ground = []
            for x in cs:
                if isinstance(x, Series):
                    ground.append(x)
                else:
                    ground.append(with_formula(x, ground_simplify(x.formula, sigma, inertia, s0)))
            yield MethodCandidate(
                m.name, tuple(sigma[v] for v in names),
                TaskRef(m.task, tuple(sigma[v] for v in params), False),
                tuple((tag, _substitute(t, sigma)) for tag, t in m.subtasks),
                tuple(ground))


def simplify_methods_by_constraints(candidates: Iterable[MethodCandidate],
                                    counts: dict[str, MethodCounts] | None = None,
                                    dnf_cap: int = 4096) -> list[GroundMethod]:
    """Drop true constraints, delete methods with a false one.

    Before constraints anchored at the first subtask become the method's
    precondition; a disjunctive precondition gives one method per DNF clause.
    """
    out: list[GroundMethod] = []
    for cand in candidates:
        c = counts.setdefault(cand.name, MethodCounts()) if counts is not None else None
        kept: list[Constraint] = []
        anchored: list[Expression] = []
        pos = {tag: i for i, (tag, _) in enumerate(cand.subtasks)}
        dead = False
        for x in cand.constraints:
            if isinstance(x, Series):
                kept.append(x)
                continue
            if x.formula == FALSE:
                dead = True
                break
            if x.formula == TRUE:
                continue
            if isinstance(x, Before) and min(pos[t] for t in x.tags) == 0:
                anchored.append(x.formula)
            else:
                kept.append(x)
        if dead:
            if c:
                c.deleted_by_constraint += 1
            continue
        pre = And(tuple(anchored)) if len(anchored) > 1 else (anchored[0] if anchored else TRUE)
        clauses = [s for s in (_split_literals(cl) for cl in
                               to_dnf(pre, cap=dnf_cap, context=cand.name)) if s is not None]
        if not clauses:
            if c:
                c.deleted_by_constraint += 1
            continue
        if c:
            c.kept += 1
        for i, (pp, pn) in enumerate(clauses):
            out.append(GroundMethod(cand.name, cand.args, cand.task, cand.subtasks,
                                    pp, pn, tuple(kept), i))
    return out


def instantiate_methods(methods, hierarchy: TypeHierarchy, inertia: InertiaReport, s0,
                        predicates: dict[str, tuple], counts=None, backend=None,
                        dnf_cap: int = 4096) -> list[GroundMethod]:
    """Ground every (typed) method schema and apply the constraint rules."""
    s0 = frozenset(s0)
    keys = kernels.AtomKeys(predicates, list(hierarchy.objects))
    s0_keys = keys.sorted_keys(a for a in s0 if a.predicate in keys.offset)
    cands = iter_method_candidates(methods, hierarchy, inertia, s0, keys, s0_keys,
                                   counts, backend)
    return simplify_methods_by_constraints(cands, counts, dnf_cap)


# ---------------------------------------------------------------------------
# task-based deletion

@dataclass
class TaskPassReport:
    deleted_primitive: int = 0
    deleted_compound: int = 0
    # the primitive pass counts as iteration 1, each deleting compound round adds one
    iterations: int = 0
    deleted_per_round: list[int] = field(default_factory=list)


def simplify_methods_by_tasks(methods: list[GroundMethod], actions: Iterable[GroundAction],
                              fixpoint: bool = True,
                              counts: dict[str, MethodCounts] | None = None,
                              report: TaskPassReport | None = None) -> list[GroundMethod]:
    """Delete methods whose subtasks can no longer be realized.

    The first pass removes methods with a primitive subtask that has no
    action left.  The second (optional) pass repeatedly removes methods with
    a compound subtask that has no method left, until nothing changes.  A
    recursive method keeps itself alive, so this computes the greatest
    fixpoint.
    """
    report = report if report is not None else TaskPassReport()
    have_action = {a.task.key for a in actions}
    report.iterations = 1
    alive = []
    for m in methods:
        if all(t.key in have_action for _, t in m.subtasks if t.primitive):
            alive.append(m)
        else:
            report.deleted_primitive += 1
            if counts is not None:
                counts.setdefault(m.name, MethodCounts()).deleted_by_task += 1
    if not fixpoint:
        return alive
    while alive:
        decomposable = {m.task.key for m in alive}
        survivors = []
        for m in alive:
            if all(t.key in decomposable for _, t in m.subtasks if not t.primitive):
                survivors.append(m)
            elif counts is not None:
                counts.setdefault(m.name, MethodCounts()).deleted_by_task += 1
        gone = len(alive) - len(survivors)
        report.deleted_per_round.append(gone)
        report.deleted_compound += gone
        alive = survivors
        if not gone:
            break
        report.iterations += 1
    return alive


def build_relevance(actions: list[GroundAction], methods: list[GroundMethod]
                    ) -> dict[tuple[str, tuple[str, ...]], list[int]]:
    """Ground task key -> indices of its actions (primitive) or methods (compound)."""
    rel: dict[tuple[str, tuple[str, ...]], list[int]] = {}
    for i, a in enumerate(actions):
        rel.setdefault(a.task.key, []).append(i)
    for i, m in enumerate(methods):
        rel.setdefault(m.task.key, []).append(i)
    return rel

"""Operator grounding: inertia, instantiation and action simplification."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Iterator

from . import kernels
from .model import (
    FALSE, ROOT_TYPE, TRUE, And, Atom, Expression, Forall, GroundAction, Not,
    OperatorSchema, Or, Truth, TypeHierarchy, is_variable,
)
from .normalize import normalize, to_dnf


# ---------------------------------------------------------------------------
# inertia

POS_INERTIA = "pos-inertia"
NEG_INERTIA = "neg-inertia"
BOTH = "both"
FLUENT = "fluent"


@dataclass
class InertiaReport:
    """Per-predicate flags.

    ``positive`` holds predicates that no operator adds, ``negative`` those
    that no operator deletes.
    """

    predicates: tuple[str, ...]
    positive: frozenset[str]
    negative: frozenset[str]

    def classify(self, predicate: str) -> str:
        p, n = predicate in self.positive, predicate in self.negative
        if p and n:
            return BOTH
        if p:
            return POS_INERTIA
        if n:
            return NEG_INERTIA
        return FLUENT

    def classes(self) -> dict[str, str]:
        return {p: self.classify(p) for p in self.predicates}


def _effect_literals(e: Expression) -> Iterator[tuple[str, bool]]:
    if isinstance(e, Atom):
        yield e.predicate, True
    elif isinstance(e, Not) and isinstance(e.arg, Atom):
        yield e.arg.predicate, False
    elif isinstance(e, And):
        for a in e.args:
            yield from _effect_literals(a)
    elif isinstance(e, Forall):
        yield from _effect_literals(e.body)


def compute_inertia(operators: Iterable[OperatorSchema],
                    predicates: Iterable[str] = ()) -> InertiaReport:
    """One pass over the operators' effects."""
    added, deleted = set(), set()
    names = dict.fromkeys(predicates)
    for op in operators:
        for p, positive in _effect_literals(op.effect):
            (added if positive else deleted).add(p)
            names.setdefault(p)
    preds = tuple(names)
    return InertiaReport(preds,
                         frozenset(p for p in preds if p not in added),
                         frozenset(p for p in preds if p not in deleted))


def simplify_atom(p: Atom, inertia: InertiaReport, s0) -> Expression:
    if p.predicate in inertia.positive and p not in s0:
        return FALSE
    if p.predicate in inertia.negative and p in s0:
        return TRUE
    return p


# ---------------------------------------------------------------------------
# logical simplification

def _complement(e: Expression) -> Expression:
    return e.arg if isinstance(e, Not) else Not(e)


def simplify_expression(e: Expression) -> Expression:
    """Apply the truth-constant, idempotence and complement identities."""
    if isinstance(e, (Atom, Truth)):
        return e
    if isinstance(e, Not):
        a = simplify_expression(e.arg)
        if isinstance(a, Truth):
            return Truth(not a.value)
        return Not(a)
    if isinstance(e, (And, Or)):
        conj = isinstance(e, And)
        kind = type(e)
        unit, zero = (TRUE, FALSE) if conj else (FALSE, TRUE)
        kids: dict[Expression, None] = {}
        stack = [simplify_expression(a) for a in e.args]
        flat = []
        for a in stack:
            if isinstance(a, kind):
                flat.extend(a.args)
            else:
                flat.append(a)
        for a in flat:
            if a == zero:
                return zero
            if a == unit:
                continue
            if _complement(a) in kids:
                return zero
            kids.setdefault(a)
        if not kids:
            return unit
        if len(kids) == 1:
            return next(iter(kids))
        return kind(tuple(kids))
    raise TypeError(f"cannot simplify {e!r}; normalize it first")


def ground_simplify(e: Expression, sigma, inertia: InertiaReport, s0) -> Expression:
    """Substitute `sigma`, replace inertia atoms by constants, simplify."""
    return simplify_expression(_ground_atoms(e, sigma, inertia, s0))


def _ground_atoms(e: Expression, sigma, inertia, s0) -> Expression:
    if isinstance(e, Atom):
        return simplify_atom(Atom(e.predicate, tuple(sigma.get(a, a) for a in e.args)),
                             inertia, s0)
    if isinstance(e, Not):
        return Not(_ground_atoms(e.arg, sigma, inertia, s0))
    if isinstance(e, And):
        return And(tuple(_ground_atoms(a, sigma, inertia, s0) for a in e.args))
    if isinstance(e, Or):
        return Or(tuple(_ground_atoms(a, sigma, inertia, s0) for a in e.args))
    return e


# ---------------------------------------------------------------------------
# enumeration

def estimate_grounding_size(schema, hierarchy: TypeHierarchy,
                            domains: dict[str, list[str]] | None = None) -> int:
    """Product of parameter domain sizes (free method variables included)."""
    variables = getattr(schema, "variables", None) or schema.params
    sizes = []
    for v, t in variables:
        if domains is not None and v in domains:
            sizes.append(len(domains[v]))
        else:
            sizes.append(len(hierarchy.instances_of(t or ROOT_TYPE)))
    return prod(sizes)


def top_conjuncts(e: Expression) -> tuple[Expression, ...]:
    return e.args if isinstance(e, And) else (e,)


def kill_literals(exprs: list[tuple[int, Expression]], variables: list[str],
                  inertia: InertiaReport, keys: kernels.AtomKeys) -> list[kernels.KillLiteral]:
    """Top-level literals of each (group, expression) that inertia can falsify."""
    index = {v: i for i, v in enumerate(variables)}
    out = []
    for group, e in exprs:
        for lit in top_conjuncts(e):
            positive = isinstance(lit, Atom)
            atom = lit if positive else (lit.arg if isinstance(lit, Not) else None)
            if not isinstance(atom, Atom):
                continue
            if positive and atom.predicate not in inertia.positive:
                continue
            if not positive and atom.predicate not in inertia.negative:
                continue
            slots = []
            for a in atom.args:
                if is_variable(a):
                    if a not in index:
                        break
                    slots.append(index[a])
                else:
                    slots.append(-(keys.obj[a] + 1))
            else:
                out.append(kernels.KillLiteral(keys.offset[atom.predicate], tuple(slots),
                                               not positive, group))
    return out


@dataclass
class Enumeration:
    total: int
    killed: list[int]
    bindings: list[dict[str, str]]


def enumerate_bindings(variables: list[tuple[str, str]], exprs: list[tuple[int, Expression]],
                       n_groups: int, hierarchy: TypeHierarchy, inertia: InertiaReport,
                       s0_keys, keys: kernels.AtomKeys,
                       domains: dict[str, list[str]] | None = None,
                       backend: str | None = None) -> Enumeration:
    """Type-consistent substitutions that survive the inertia prefilter."""
    names = [v for v, _ in variables]
    values = []
    for v, t in variables:
        if domains is not None and v in domains:
            values.append(list(domains[v]))
        else:
            values.append(list(hierarchy.instances_of(t or ROOT_TYPE)))
    idx_domains = [[keys.obj[c] for c in vals] for vals in values]
    lits = kill_literals(exprs, names, inertia, keys)
    surv, killed = kernels.enumerate_candidates(idx_domains, lits, s0_keys, keys.n,
                                                n_groups, backend)
    lens = [len(v) for v in values]
    bindings = []
    for c in surv.tolist():
        digits = kernels.decode(c, lens)
        bindings.append({names[i]: values[i][d] for i, d in enumerate(digits)})
    return Enumeration(prod(lens), [int(k) for k in killed], bindings)


def unary_domains(params, precondition: Expression, hierarchy: TypeHierarchy,
                  inertia: InertiaReport, s0) -> dict[str, list[str]]:
    """Narrow untyped parameters through static unary preconditions.

    For a parameter of the root type, every positive top-level ``(p ?x)``
    with `p` never added restricts ``?x`` to the constants c with
    ``(p c)`` in the initial state.
    """
    out: dict[str, list[str]] = {}
    for v, t in params:
        if t != ROOT_TYPE:
            continue
        allowed = None
        for lit in top_conjuncts(precondition):
            if (isinstance(lit, Atom) and lit.args == (v,)
                    and lit.predicate in inertia.positive):
                good = {a.args[0] for a in s0 if a.predicate == lit.predicate}
                allowed = good if allowed is None else allowed & good
        if allowed is not None:
            out[v] = [c for c in hierarchy.instances_of(ROOT_TYPE) if c in allowed]
    return out


# ---------------------------------------------------------------------------
# operators

@dataclass
class OperatorCounts:
    candidates: int = 0
    kept: int = 0
    deleted_by_precondition: int = 0
    deleted_by_effect: int = 0
    deleted_noop: int = 0
    actions: int = 0  # kept candidates after DNF splitting


@dataclass(frozen=True)
class ActionCandidate:
    name: str
    args: tuple[str, ...]
    precondition: Expression
    effect: Expression


@dataclass
class _PreparedOperator:
    schema: OperatorSchema
    precondition: Expression
    effect: Expression
    domains: dict[str, list[str]] = field(default_factory=dict)


def prepare_operators(operators, hierarchy: TypeHierarchy, inertia: InertiaReport | None = None,
                      s0=frozenset(), unary_scan: bool = False) -> list[_PreparedOperator]:
    out = []
    for op in operators:
        bound = {v for v, _ in op.params}
        pre = normalize(op.precondition, hierarchy, bound)
        eff = normalize(op.effect, hierarchy, bound)
        doms = unary_domains(op.params, pre, hierarchy, inertia, s0) if unary_scan else {}
        out.append(_PreparedOperator(op, pre, eff, doms))
    return out


def iter_action_candidates(prepared: list[_PreparedOperator], hierarchy: TypeHierarchy,
                           inertia: InertiaReport, s0, keys: kernels.AtomKeys, s0_keys,
                           counts: dict[str, OperatorCounts] | None = None,
                           backend: str | None = None) -> Iterator[ActionCandidate]:
    """Atom-simplified candidates in schema then substitution order.

    Candidates whose precondition has a statically false top-level literal
    are dropped inside the enumeration kernel and only counted.
    """
    for p in prepared:
        op = p.schema
        c = counts.setdefault(op.name, OperatorCounts()) if counts is not None else None
        en = enumerate_bindings(list(op.params), [(0, p.precondition)], 1, hierarchy,
                                inertia, s0_keys, keys, p.domains, backend)
        if c is not None:
            c.candidates += en.total
            c.deleted_by_precondition += en.killed[0]
        names = [v for v, _ in op.params]
        for sigma in en.bindings:
            yield ActionCandidate(op.name, tuple(sigma[v] for v in names),
                                  ground_simplify(p.precondition, sigma, inertia, s0),
                                  ground_simplify(p.effect, sigma, inertia, s0))


def _split_literals(clause) -> tuple[frozenset, frozenset] | None:
    pos = frozenset(l for l in clause if isinstance(l, Atom))
    neg = frozenset(l.arg for l in clause if isinstance(l, Not))
    if pos & neg:
        return None
    return pos, neg


def simplify_actions(candidates: Iterable[ActionCandidate], drop_noops: bool = True,
                     counts: dict[str, OperatorCounts] | None = None) -> list[GroundAction]:
    """Delete impossible or useless candidates; split disjunctive preconditions.

    A candidate goes when its precondition or effect is false, or (with
    `drop_noops`) when every effect simplified to true.  Each remaining DNF
    clause of the precondition yields one action.
    """
    out: list[GroundAction] = []
    for cand in candidates:
        c = counts.setdefault(cand.name, OperatorCounts()) if counts is not None else None
        pre, eff = cand.precondition, cand.effect
        if pre == FALSE:
            if c:
                c.deleted_by_precondition += 1
            continue
        if eff == FALSE:
            if c:
                c.deleted_by_effect += 1
            continue
        if eff == TRUE and drop_noops:
            if c:
                c.deleted_noop += 1
            continue
        eff_lits = () if eff == TRUE else top_conjuncts(eff)
        if any(not isinstance(l, (Atom, Not)) for l in eff_lits):
            raise ValueError(f"effect of ({cand.name} {' '.join(cand.args)}) is not a conjunction")
        eff_split = _split_literals(eff_lits)
        if eff_split is None:
            if c:
                c.deleted_by_effect += 1
            continue
        clauses = [s for s in (_split_literals(cl) for cl in to_dnf(pre, context=cand.name))
                   if s is not None]
        if not clauses:
            if c:
                c.deleted_by_precondition += 1
            continue
        if c:
            c.kept += 1
            c.actions += len(clauses)
        for i, (pp, pn) in enumerate(clauses):
            out.append(GroundAction(cand.name, cand.args, pp, pn, eff_split[0], eff_split[1], i))
    return out


def instantiate_operators(operators, hierarchy: TypeHierarchy, inertia: InertiaReport, s0,
                          predicates: dict[str, tuple] | None = None,
                          drop_noops: bool = True, unary_scan: bool = False,
                          counts: dict[str, OperatorCounts] | None = None,
                          backend: str | None = None) -> list[GroundAction]:
    """Ground and simplify every operator."""
    s0 = frozenset(s0)
    if predicates is None:
        predicates = _predicates_from(operators, s0)
    keys = kernels.AtomKeys(predicates, list(hierarchy.objects))
    s0_keys = keys.sorted_keys(a for a in s0 if a.predicate in keys.offset)
    prepared = prepare_operators(operators, hierarchy, inertia, s0, unary_scan)
    cands = iter_action_candidates(prepared, hierarchy, inertia, s0, keys, s0_keys,
                                   counts, backend)
    return simplify_actions(cands, drop_noops, counts)


def _predicates_from(operators, s0) -> dict[str, tuple]:
    from .model import atoms_of
    preds: dict[str, tuple] = {}
    for op in operators:
        for e in (op.precondition, op.effect):
            for a in atoms_of(e):
                preds.setdefault(a.predicate, (ROOT_TYPE,) * len(a.args))
    for a in s0:
        preds.setdefault(a.predicate, (ROOT_TYPE,) * len(a.args))
    return preds

"""Quantifier-free negation normal form and DNF conversion."""

from __future__ import annotations

from itertools import product

from .model import (
    FALSE, TRUE, And, Atom, Exists, Expression, Forall, Imply, ModelError, Not,
    Or, Truth, TypeHierarchy, _substitute, is_variable,
)


class NormalizationError(ModelError):
    pass


class DNFExplosion(NormalizationError):
    pass


def _collapse(kind, children) -> Expression:
    flat: list[Expression] = []
    for c in children:
        if isinstance(c, kind):
            flat.extend(c.args)
        else:
            flat.append(c)
    if not flat:
        return TRUE if kind is And else FALSE
    if len(flat) == 1:
        return flat[0]
    return kind(tuple(flat))


def normalize(e: Expression, hierarchy: TypeHierarchy,
              bound: frozenset[str] | set[str] | None = None) -> Expression:
    """Rewrite `e` into And/Or over literals and truth constants.

    Implications become ``not lhs or rhs``, ``forall``/``exists`` expand to a
    conjunction/disjunction over the instances of the quantified type, and
    negations are pushed down to atoms.  Nested And/Or are flattened and
    single-child connectives collapsed; no other simplification happens.

    If `bound` is given, every variable left in the result must belong to it.
    """
    out = _nnf(e, hierarchy, False)
    if bound is not None:
        for a in _atoms(out):
            for t in a.args:
                if is_variable(t) and t not in bound:
                    raise NormalizationError(f"unbound variable {t} in {a}")
    return out


def _atoms(e: Expression):
    if isinstance(e, Atom):
        yield e
    elif isinstance(e, Not):
        yield from _atoms(e.arg)
    elif isinstance(e, (And, Or)):
        for a in e.args:
            yield from _atoms(a)


def _nnf(e: Expression, h: TypeHierarchy, neg: bool) -> Expression:
    if isinstance(e, Atom):
        return Not(e) if neg else e
    if isinstance(e, Truth):
        return Truth(e.value != neg)
    if isinstance(e, Not):
        return _nnf(e.arg, h, not neg)
    if isinstance(e, And):
        kind = Or if neg else And
        return _collapse(kind, [_nnf(a, h, neg) for a in e.args])
    if isinstance(e, Or):
        kind = And if neg else Or
        return _collapse(kind, [_nnf(a, h, neg) for a in e.args])
    if isinstance(e, Imply):
        return _nnf(Or((Not(e.lhs), e.rhs)), h, neg)
    if isinstance(e, (Forall, Exists)):
        conj = isinstance(e, Forall) != neg
        parts = [_nnf(_substitute(e.body, {e.var: c}), h, neg)
                 for c in h.instances_of(e.type)]
        return _collapse(And if conj else Or, parts)
    raise TypeError(f"not an expression: {e!r}")


Clause = tuple  # tuple of literals (Atom or Not(Atom))


def to_dnf(e: Expression, cap: int = 4096, context: str = "") -> list[Clause]:
    """Disjunctive normal form of a normalized expression.

    Returns a list of clauses, each a tuple of literals.  ``TRUE`` gives one
    empty clause, ``FALSE`` gives no clause.  Clauses keep input order and
    repeated literals inside a clause are dropped.
    """
    clauses = _dnf(e, cap, context)
    out = []
    for cl in clauses:
        seen: dict = {}
        for lit in cl:
            seen.setdefault(lit)
        out.append(tuple(seen))
    return out


def _dnf(e: Expression, cap: int, context: str) -> list[Clause]:
    if isinstance(e, Truth):
        return [()] if e.value else []
    if isinstance(e, Atom) or (isinstance(e, Not) and isinstance(e.arg, Atom)):
        return [(e,)]
    if isinstance(e, Or):
        out: list[Clause] = []
        for a in e.args:
            out.extend(_dnf(a, cap, context))
            if len(out) > cap:
                raise DNFExplosion(f"DNF of {context or 'expression'} exceeds {cap} clauses")
        return out
    if isinstance(e, And):
        parts = [_dnf(a, cap, context) for a in e.args]
        size = 1
        for p in parts:
            size *= len(p)
        if size > cap:
            raise DNFExplosion(f"DNF of {context or 'expression'} exceeds {cap} clauses")
        return [sum(combo, ()) for combo in product(*parts)]
    raise NormalizationError(f"expression is not normalized: {e}")


def literals_of_conjunction(e: Expression) -> list | None:
    """The literals of a conjunction of literals, or None for anything else."""
    if isinstance(e, Truth):
        return [] if e.value else None
    if isinstance(e, Atom) or (isinstance(e, Not) and isinstance(e.arg, Atom)):
        return [e]
    if isinstance(e, And) and all(
            isinstance(a, Atom) or (isinstance(a, Not) and isinstance(a.arg, Atom))
            for a in e.args):
        return list(e.args)
    return None

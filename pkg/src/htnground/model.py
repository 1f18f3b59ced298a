"""Core data types for hierarchical planning problems.

Terms are plain strings: a leading ``?`` marks a variable, anything else is a
constant.  Expressions, tasks and constraints are frozen dataclasses so they
hash and compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class ModelError(Exception):
    """Raised for ill-formed domains, problems or bindings."""


class TypingError(ModelError):
    pass


def is_variable(term: str) -> bool:
    return term.startswith("?")


# ---------------------------------------------------------------------------
# types and objects

ROOT_TYPE = "object"


class TypeHierarchy:
    """Types, their supertypes and the typed constants of a problem."""

    def __init__(self, parent: Mapping[str, str] | None = None,
                 objects: Mapping[str, str] | None = None):
        self.parent: dict[str, str] = {}
        self.types: set[str] = {ROOT_TYPE}
        self.objects: dict[str, str] = {}
        self._instances: dict[str, tuple[str, ...]] = {}
        for t, p in (parent or {}).items():
            self.add_type(t, p)
        for name, t in (objects or {}).items():
            self.add_object(name, t)

    def add_type(self, name: str, parent: str = ROOT_TYPE) -> None:
        if name == ROOT_TYPE:
            return
        self.types.add(name)
        self.types.add(parent)
        if parent != ROOT_TYPE:
            self.parent.setdefault(parent, ROOT_TYPE)
        self.parent[name] = parent
        seen = {name}
        t = parent
        while t != ROOT_TYPE and t in self.parent:
            if t in seen:
                raise TypingError(f"cyclic type hierarchy through {name!r}")
            seen.add(t)
            t = self.parent[t]
        self._instances.clear()

    def add_object(self, name: str, type_: str = ROOT_TYPE) -> None:
        if type_ not in self.types:
            raise TypingError(f"object {name!r} has unknown type {type_!r}")
        if name in self.objects and self.objects[name] != type_:
            raise TypingError(f"object {name!r} declared with two types")
        self.objects[name] = type_
        self._instances.clear()

    def __eq__(self, other) -> bool:
        if not isinstance(other, TypeHierarchy):
            return NotImplemented
        return (self.types, self.parent, list(self.objects.items())) == \
            (other.types, other.parent, list(other.objects.items()))

    __hash__ = None

    def copy(self) -> TypeHierarchy:
        h = TypeHierarchy()
        h.types = set(self.types)
        h.parent = dict(self.parent)
        h.objects = dict(self.objects)
        return h

    def ancestors(self, t: str) -> list[str]:
        """`t` followed by its supertypes, ending at the root."""
        out = [t]
        while t != ROOT_TYPE:
            t = self.parent.get(t, ROOT_TYPE)
            out.append(t)
        return out

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def instances_of(self, t: str) -> tuple[str, ...]:
        """Constants whose type is `t` or a subtype, in declaration order."""
        if t not in self.types:
            raise TypingError(f"unknown type {t!r}")
        cached = self._instances.get(t)
        if cached is None:
            cached = tuple(o for o, ot in self.objects.items() if self.is_subtype(ot, t))
            self._instances[t] = cached
        return cached

    def object_index(self) -> dict[str, int]:
        return {o: i for i, o in enumerate(self.objects)}


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate,) + self.args) + ")"

    @property
    def ground(self) -> bool:
        return not any(is_variable(a) for a in self.args)


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Expression"

    def __str__(self) -> str:
        return f"(not {self.arg})"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple["Expression", ...]

    def __str__(self) -> str:
        return "(and" + "".join(" " + str(a) for a in self.args) + ")"


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple["Expression", ...]

    def __str__(self) -> str:
        return "(or" + "".join(" " + str(a) for a in self.args) + ")"


@dataclass(frozen=True, slots=True)
class Imply:
    lhs: "Expression"
    rhs: "Expression"

    def __str__(self) -> str:
        return f"(imply {self.lhs} {self.rhs})"


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    type: str
    body: "Expression"

    def __str__(self) -> str:
        return f"(forall ({self.var} - {self.type}) {self.body})"


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    type: str
    body: "Expression"

    def __str__(self) -> str:
        return f"(exists ({self.var} - {self.type}) {self.body})"


@dataclass(frozen=True, slots=True)
class Truth:
    value: bool

    def __str__(self) -> str:
        return "(true)" if self.value else "(false)"


TRUE = Truth(True)
FALSE = Truth(False)

Expression = Union[Atom, Not, And, Or, Imply, Forall, Exists, Truth]
Literal = Union[Atom, Not]


def atoms_of(e: Expression) -> Iterator[Atom]:
    if isinstance(e, Atom):
        yield e
    elif isinstance(e, Not):
        yield from atoms_of(e.arg)
    elif isinstance(e, (And, Or)):
        for a in e.args:
            yield from atoms_of(a)
    elif isinstance(e, Imply):
        yield from atoms_of(e.lhs)
        yield from atoms_of(e.rhs)
    elif isinstance(e, (Forall, Exists)):
        yield from atoms_of(e.body)


def variables_of(e: Expression) -> list[str]:
    """Free variables in order of first occurrence."""
    out: dict[str, None] = {}

    def walk(x: Expression, bound: frozenset[str]) -> None:
        if isinstance(x, Atom):
            for a in x.args:
                if is_variable(a) and a not in bound:
                    out.setdefault(a)
        elif isinstance(x, Not):
            walk(x.arg, bound)
        elif isinstance(x, (And, Or)):
            for a in x.args:
                walk(a, bound)
        elif isinstance(x, Imply):
            walk(x.lhs, bound)
            walk(x.rhs, bound)
        elif isinstance(x, (Forall, Exists)):
            walk(x.body, bound | {x.var})

    walk(e, frozenset())
    return list(out)


# ---------------------------------------------------------------------------
# tasks, constraints, schemas

@dataclass(frozen=True, slots=True)
class TaskRef:
    name: str
    args: tuple[str, ...] = ()
    primitive: bool | None = field(default=None, compare=False)

    def __str__(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, self.args)


@dataclass(frozen=True, slots=True)
class Series:
    tags: tuple[str, ...]

    def __str__(self) -> str:
        return "(series " + " ".join(self.tags) + ")"


def _group(tags: tuple[str, ...]) -> str:
    return tags[0] if len(tags) == 1 else "(" + " ".join(tags) + ")"


@dataclass(frozen=True, slots=True)
class Before:
    formula: Expression
    tags: tuple[str, ...]

    def __str__(self) -> str:
        return f"(before {self.formula} {_group(self.tags)})"


@dataclass(frozen=True, slots=True)
class After:
    formula: Expression
    tags: tuple[str, ...]

    def __str__(self) -> str:
        return f"(after {self.formula} {_group(self.tags)})"


@dataclass(frozen=True, slots=True)
class Between:
    formula: Expression
    tags1: tuple[str, ...]
    tags2: tuple[str, ...]

    def __str__(self) -> str:
        return f"(between {self.formula} {_group(self.tags1)} {_group(self.tags2)})"


Constraint = Union[Series, Before, After, Between]


def constraint_tags(c: Constraint) -> tuple[str, ...]:
    if isinstance(c, Between):
        return c.tags1 + c.tags2
    return c.tags


def with_formula(c: Constraint, formula: Expression) -> Constraint:
    if isinstance(c, Before):
        return Before(formula, c.tags)
    if isinstance(c, After):
        return After(formula, c.tags)
    if isinstance(c, Between):
        return Between(formula, c.tags1, c.tags2)
    raise TypeError("series constraints carry no formula")


@dataclass(frozen=True)
class TaskNetwork:
    tasks: tuple[tuple[str, TaskRef], ...] = ()
    constraints: tuple[Constraint, ...] = ()

    @property
    def primitive(self) -> bool:
        return all(t.primitive for _, t in self.tasks)

    def position(self) -> dict[str, int]:
        return {tag: i for i, (tag, _) in enumerate(self.tasks)}


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: Expression
    effect: Expression


@dataclass(frozen=True)
class MethodSchema:
    name: str
    task: str
    params: tuple[tuple[str, str], ...]
    subtasks: tuple[tuple[str, TaskRef], ...]
    constraints: tuple[Constraint, ...] = ()
    # (variable, type or None until inferred)
    free_vars: tuple[tuple[str, str | None], ...] = ()

    @property
    def variables(self) -> tuple[tuple[str, str | None], ...]:
        return self.params + self.free_vars

    def network(self) -> TaskNetwork:
        return TaskNetwork(self.subtasks, self.constraints)


@dataclass
class Domain:
    name: str
    hierarchy: TypeHierarchy
    predicates: dict[str, tuple[str, ...]]
    operators: list[OperatorSchema]
    methods: list[MethodSchema]
    constants: dict[str, str] = field(default_factory=dict)

    def operator(self, name: str) -> OperatorSchema | None:
        for o in self.operators:
            if o.name == name:
                return o
        return None

    def methods_for(self, task: str) -> list[MethodSchema]:
        return [m for m in self.methods if m.task == task]

    def is_primitive(self, task: str) -> bool:
        return any(o.name == task for o in self.operators)

    def is_compound(self, task: str) -> bool:
        return any(m.task == task for m in self.methods)


@dataclass
class Problem:
    name: str
    domain: Domain
    hierarchy: TypeHierarchy
    init: frozenset[Atom]
    network: TaskNetwork
    init_order: tuple[Atom, ...] = ()

    @property
    def operators(self) -> list[OperatorSchema]:
        return self.domain.operators

    @property
    def methods(self) -> list[MethodSchema]:
        return self.domain.methods


# ---------------------------------------------------------------------------
# substitution

Binding = Mapping[str, str]


def _sub_args(args: tuple[str, ...], sigma: Binding) -> tuple[str, ...]:
    return tuple(sigma.get(a, a) for a in args)


def substitute(e, sigma: Binding, hierarchy: TypeHierarchy | None = None,
               types: Mapping[str, str] | None = None):
    """Replace the variables bound in `sigma` inside an expression, task or
    constraint.

    When both `hierarchy` and `types` (variable -> declared type) are given,
    each binding is checked against the variable's type first.
    """
    if hierarchy is not None and types is not None:
        for var, const in sigma.items():
            t = types.get(var)
            if t is None:
                continue
            ct = hierarchy.objects.get(const)
            if ct is None or not hierarchy.is_subtype(ct, t):
                raise TypingError(f"cannot bind {var} - {t} to {const}")
    if not sigma:
        return e
    return _substitute(e, sigma)


def _substitute(e, sigma: Binding):
    if isinstance(e, Atom):
        return Atom(e.predicate, _sub_args(e.args, sigma))
    if isinstance(e, TaskRef):
        return TaskRef(e.name, _sub_args(e.args, sigma), e.primitive)
    if isinstance(e, Not):
        return Not(_substitute(e.arg, sigma))
    if isinstance(e, And):
        return And(tuple(_substitute(a, sigma) for a in e.args))
    if isinstance(e, Or):
        return Or(tuple(_substitute(a, sigma) for a in e.args))
    if isinstance(e, Imply):
        return Imply(_substitute(e.lhs, sigma), _substitute(e.rhs, sigma))
    if isinstance(e, (Forall, Exists)):
        inner = {k: v for k, v in sigma.items() if k != e.var}
        return type(e)(e.var, e.type, _substitute(e.body, inner) if inner else e.body)
    if isinstance(e, Truth):
        return e
    if isinstance(e, Series):
        return e
    if isinstance(e, (Before, After, Between)):
        return with_formula(e, _substitute(e.formula, sigma))
    raise TypeError(f"cannot substitute into {type(e).__name__}")


# ---------------------------------------------------------------------------
# grounded objects

class PropositionTable:
    """Bijection between ground atoms and dense integer ids."""

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._ids: dict[Atom, int] = {}
        self._atoms: list[Atom] = []
        self.frozen = False
        for a in atoms:
            self.intern(a)

    def intern(self, atom: Atom) -> int:
        pid = self._ids.get(atom)
        if pid is None:
            if self.frozen:
                raise KeyError(f"table is frozen; unknown proposition {atom}")
            pid = len(self._atoms)
            self._ids[atom] = pid
            self._atoms.append(atom)
        return pid

    def freeze(self) -> PropositionTable:
        self.frozen = True
        return self

    def id(self, atom: Atom) -> int:
        return self._ids[atom]

    def get(self, atom: Atom) -> int | None:
        return self._ids.get(atom)

    def atom(self, pid: int) -> Atom:
        return self._atoms[pid]

    def __contains__(self, atom: Atom) -> bool:
        return atom in self._ids

    def __len__(self) -> int:
        return len(self._atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._atoms)

    def mask(self, atoms: Iterable[Atom]) -> int:
        m = 0
        for a in atoms:
            m |= 1 << self._ids[a]
        return m


@dataclass(frozen=True, slots=True)
class State:
    """A set of proposition ids stored as a bit vector."""

    bits: int = 0

    @classmethod
    def from_ids(cls, ids: Iterable[int]) -> State:
        b = 0
        for i in ids:
            b |= 1 << i
        return cls(b)

    def __contains__(self, pid: int) -> bool:
        return (self.bits >> pid) & 1 == 1

    def ids(self) -> list[int]:
        out, b, i = [], self.bits, 0
        while b:
            if b & 1:
                out.append(i)
            b >>= 1
            i += 1
        return out

    def __len__(self) -> int:
        return self.bits.bit_count()

    def atoms(self, table: PropositionTable) -> set[Atom]:
        return {table.atom(i) for i in self.ids()}


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre_pos: frozenset[Atom]
    pre_neg: frozenset[Atom]
    eff_pos: frozenset[Atom]
    eff_neg: frozenset[Atom]
    clause: int = 0

    def __post_init__(self):
        if self.pre_pos & self.pre_neg:
            raise ModelError(f"{self.signature} has contradictory preconditions")
        if self.eff_pos & self.eff_neg:
            raise ModelError(f"{self.signature} has contradictory effects")

    @property
    def task(self) -> TaskRef:
        return TaskRef(self.name, self.args, True)

    @property
    def signature(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class GroundMethod:
    name: str
    args: tuple[str, ...]
    task: TaskRef
    subtasks: tuple[tuple[str, TaskRef], ...]
    pre_pos: frozenset[Atom] = frozenset()
    pre_neg: frozenset[Atom] = frozenset()
    residual_constraints: tuple[Constraint, ...] = ()
    clause: int = 0

    @property
    def signature(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


def applicable(a: GroundAction | GroundMethod, s: State, table: PropositionTable) -> bool:
    """pre+ is contained in s and pre- is disjoint from s."""
    pos = table.mask(a.pre_pos)
    if s.bits & pos != pos:
        return False
    for atom in a.pre_neg:
        pid = table.get(atom)
        if pid is not None and pid in s:
            return False
    return True


def apply(a: GroundAction, s: State, table: PropositionTable) -> State:
    """(s minus eff-) union eff+; `s` is left untouched."""
    neg = 0
    for atom in a.eff_neg:
        pid = table.get(atom)
        if pid is not None:
            neg |= 1 << pid
    return State((s.bits & ~neg) | table.mask(a.eff_pos))

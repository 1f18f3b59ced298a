"""The grounding pipeline: lifted Problem in, simplified GroundProblem out.

Operators are grounded first (inertia, instantiation, atom and action
simplification), then methods (type inference, instantiation, constraint
simplification, task-based deletion).  The result is interned into a
proposition table and compiled into bit masks and task ids for search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import kernels
from .ground_actions import (
    InertiaReport, OperatorCounts, compute_inertia, estimate_grounding_size,
    ground_simplify, instantiate_operators, unary_domains,
)
from .ground_methods import (
    MethodCounts, TaskPassReport, build_relevance, infer_method_var_types,
    instantiate_methods, simplify_methods_by_tasks,
)
from .model import (
    FALSE, TRUE, After, Atom, Before, Constraint, GroundAction, GroundMethod,
    ModelError, Problem, PropositionTable, Series, State, TaskRef, atoms_of,
    with_formula,
)
from .normalize import literals_of_conjunction, normalize


class GroundingError(ModelError):
    pass


@dataclass
class GroundingOptions:
    # deleting actions whose effects all simplify to true can lose HTN
    # solutions (a method may need the action as a subtask), so keep them
    drop_noops: bool = False
    method_fixpoint: bool = True
    unary_scan: bool = False
    backend: str | None = None
    dnf_cap: int = 4096


def atom_key(a: Atom):
    return (a.predicate, a.args)


@dataclass
class GroundProblem:
    name: str
    table: PropositionTable
    state0: State
    goal_tasks: tuple[TaskRef, ...]
    goal_tags: tuple[str, ...]
    goal_pre_pos: frozenset[Atom]
    goal_pre_neg: frozenset[Atom]
    goal_state_pos: frozenset[Atom]
    goal_state_neg: frozenset[Atom]
    root_constraints: tuple[Constraint, ...]
    actions: list[GroundAction]
    methods: list[GroundMethod]
    relevance: dict[tuple[str, tuple[str, ...]], list[int]]
    # a goal formula simplified to false: no plan can exist
    unsolvable: bool = False
    inertia: InertiaReport | None = None
    stats: dict = field(default_factory=dict)
    report: str = ""

    def __post_init__(self):
        t = self.table
        self.a_pre = [t.mask(a.pre_pos) for a in self.actions]
        self.a_neg = [t.mask(a.pre_neg) for a in self.actions]
        self.a_add = [t.mask(a.eff_pos) for a in self.actions]
        self.a_del = [t.mask(a.eff_neg) for a in self.actions]
        self.m_pre = [t.mask(m.pre_pos) for m in self.methods]
        self.m_neg = [t.mask(m.pre_neg) for m in self.methods]
        self.goal_pre = (t.mask(self.goal_pre_pos), t.mask(self.goal_pre_neg))
        self.goal_state = (t.mask(self.goal_state_pos), t.mask(self.goal_state_neg))
        # ground tasks as dense ids
        self.task_keys: list[tuple[str, tuple[str, ...]]] = []
        self.task_id: dict[tuple[str, tuple[str, ...]], int] = {}
        self.task_primitive: list[bool] = []
        for g in self.goal_tasks:
            self._tid(g)
        for a in self.actions:
            self._tid(a.task)
        for m in self.methods:
            self._tid(m.task)
            for _, s in m.subtasks:
                self._tid(s)
        self.m_subtasks = [tuple(self.task_id[s.key] for _, s in m.subtasks)
                           for m in self.methods]
        self.goal_ids = tuple(self.task_id[g.key] for g in self.goal_tasks)
        self.options = [self.relevance.get(k, []) for k in self.task_keys]

    def _tid(self, t: TaskRef) -> int:
        i = self.task_id.get(t.key)
        if i is None:
            i = len(self.task_keys)
            self.task_id[t.key] = i
            self.task_keys.append(t.key)
            self.task_primitive.append(bool(t.primitive))
        return i

    def task_str(self, tid: int) -> str:
        name, args = self.task_keys[tid]
        return "(" + " ".join((name,) + args) + ")"


# ---------------------------------------------------------------------------

def _timed(stats: dict, key: str, t0: float) -> float:
    t1 = time.perf_counter()
    stats[key] = stats.get(key, 0.0) + (t1 - t0) * 1000.0
    return t1


def prepare_methods(problem: Problem):
    return [infer_method_var_types(m, problem.domain) for m in problem.methods]


def _root_network(problem: Problem, inertia: InertiaReport):
    """Split goal constraints into precondition, goal state and residuals."""
    net = problem.network
    pos = net.position()
    last = len(net.tasks) - 1
    h = problem.hierarchy
    pre_pos, pre_neg, goal_pos, goal_neg = set(), set(), set(), set()
    residual: list[Constraint] = []
    unsolvable = False
    for c in net.constraints:
        if isinstance(c, Series):
            residual.append(c)
            continue
        f = ground_simplify(normalize(c.formula, h, frozenset()), {}, inertia, problem.init)
        if f == TRUE:
            continue
        if f == FALSE:
            unsolvable = True
            continue
        lits = literals_of_conjunction(f)
        if isinstance(c, After) and max(pos[t] for t in c.tags) == last:
            if lits is None:
                raise GroundingError(f"goal state {c} is not a conjunction of literals")
            dest_pos, dest_neg = goal_pos, goal_neg
        elif isinstance(c, Before) and min(pos[t] for t in c.tags) == 0 and lits is not None:
            dest_pos, dest_neg = pre_pos, pre_neg
        else:
            residual.append(with_formula(c, f))
            continue
        for lit in lits:
            if isinstance(lit, Atom):
                dest_pos.add(lit)
            else:
                dest_neg.add(lit.arg)
    if (pre_pos & pre_neg) or (goal_pos & goal_neg):
        unsolvable = True
    return pre_pos, pre_neg, goal_pos, goal_neg, residual, unsolvable


def _intern_all(actions, methods, extra_atoms) -> PropositionTable:
    table = PropositionTable()
    for a in actions:
        for group in (a.pre_pos, a.pre_neg, a.eff_pos, a.eff_neg):
            for atom in sorted(group, key=atom_key):
                table.intern(atom)
    for m in methods:
        for group in (m.pre_pos, m.pre_neg):
            for atom in sorted(group, key=atom_key):
                table.intern(atom)
        for c in m.residual_constraints:
            if not isinstance(c, Series):
                for atom in atoms_of(c.formula):
                    table.intern(atom)
    for atom in extra_atoms:
        table.intern(atom)
    return table.freeze()


def ground(problem: Problem, options: GroundingOptions | None = None) -> GroundProblem:
    """Run the full grounding and simplification pipeline."""
    opts = options or GroundingOptions()
    stats: dict = {}
    t = time.perf_counter()
    domain = problem.domain
    s0 = problem.init
    inertia = compute_inertia(problem.operators, domain.predicates)

    op_counts: dict[str, OperatorCounts] = {}
    actions = instantiate_operators(problem.operators, problem.hierarchy, inertia, s0,
                                    domain.predicates, opts.drop_noops, opts.unary_scan,
                                    op_counts, opts.backend)
    t = _timed(stats, "ground_actions_ms", t)

    schemas = prepare_methods(problem)
    m_counts: dict[str, MethodCounts] = {m.name: MethodCounts() for m in schemas}
    methods = instantiate_methods(schemas, problem.hierarchy, inertia, s0, domain.predicates,
                                  m_counts, opts.backend, opts.dnf_cap)
    passes = TaskPassReport()
    methods = simplify_methods_by_tasks(methods, actions, opts.method_fixpoint, m_counts, passes)
    for m in methods:
        m_counts[m.name].instances += 1
    t = _timed(stats, "ground_methods_ms", t)

    pre_pos, pre_neg, goal_pos, goal_neg, residual, unsolvable = _root_network(problem, inertia)
    extra = []
    for c in residual:
        if not isinstance(c, Series):
            extra.extend(atoms_of(c.formula))
    for group in (pre_pos, pre_neg, goal_pos, goal_neg):
        extra.extend(sorted(group, key=atom_key))
    table = _intern_all(actions, methods, extra)
    state0 = State(table.mask(a for a in problem.init_order or sorted(s0, key=atom_key)
                              if a in table))
    relevance = build_relevance(actions, methods)
    gp = GroundProblem(
        problem.name, table, state0,
        tuple(t_ for _, t_ in problem.network.tasks),
        tuple(tag for tag, _ in problem.network.tasks),
        frozenset(pre_pos), frozenset(pre_neg), frozenset(goal_pos), frozenset(goal_neg),
        tuple(residual), actions, methods, relevance, unsolvable, inertia)
    _timed(stats, "compile_ms", t)

    stats.update(
        actions_before=sum(c.candidates for c in op_counts.values()),
        actions_after=len(actions),
        methods_before=sum(c.candidates for c in m_counts.values()),
        methods_after=len(methods),
        propositions=len(table),
        fixpoint_iterations=passes.iterations,
    )
    gp.stats = stats
    gp.report = format_report(problem, gp, inertia, op_counts, m_counts, passes, opts)
    return gp


# ---------------------------------------------------------------------------
# text output

def format_report(problem, gp: GroundProblem, inertia: InertiaReport, op_counts, m_counts,
                  passes: TaskPassReport, opts: GroundingOptions) -> str:
    lines = [f"problem {problem.name}", "", "inertia"]
    for p in inertia.predicates:
        lines.append(f"  {p} {inertia.classify(p)}")
    lines += ["", "operators  candidates kept del-pre del-eff del-noop actions"]
    for name, c in op_counts.items():
        lines.append(f"  {name} {c.candidates} {c.kept} {c.deleted_by_precondition} "
                     f"{c.deleted_by_effect} {c.deleted_noop} {c.actions}")
    lines += ["", "methods  candidates kept del-constraint del-task instances"]
    for name, c in m_counts.items():
        lines.append(f"  {name} {c.candidates} {c.kept} {c.deleted_by_constraint} "
                     f"{c.deleted_by_task} {c.instances}")
    lines.append("")
    lines.append(f"task pass: primitive-deleted {passes.deleted_primitive} "
                 f"compound-deleted {passes.deleted_compound} "
                 f"iterations {passes.iterations if opts.method_fixpoint else 1}")
    per_pred: dict[str, int] = {p: 0 for p in problem.domain.predicates}
    for atom in gp.table:
        per_pred[atom.predicate] = per_pred.get(atom.predicate, 0) + 1
    lines += ["", "propositions"]
    for p, n in per_pred.items():
        lines.append(f"  {p} {n}")
    lines.append(f"  total {len(gp.table)}")
    s = gp.stats
    lines += ["", f"actions {s['actions_before']} -> {s['actions_after']}",
              f"methods {s['methods_before']} -> {s['methods_after']}"]
    return "\n".join(lines) + "\n"


def _ids(table: PropositionTable, atoms) -> str:
    return " ".join(str(i) for i in sorted(table.id(a) for a in atoms))


def dump(gp: GroundProblem) -> str:
    """Line-oriented, deterministic text form of a ground problem."""
    t = gp.table
    out = [f"problem {gp.name}", f"propositions {len(t)}"]
    for i, atom in enumerate(t):
        out.append(f"{i} {atom}")
    out.append("state0 " + " ".join(str(i) for i in gp.state0.ids()))
    out.append(f"goal-tasks {len(gp.goal_tasks)}")
    for tag, task in zip(gp.goal_tags, gp.goal_tasks):
        out.append(f"{tag} {task}")
    out.append("goal-pre+ " + _ids(t, gp.goal_pre_pos))
    out.append("goal-pre- " + _ids(t, gp.goal_pre_neg))
    out.append("goal-state+ " + _ids(t, gp.goal_state_pos))
    out.append("goal-state- " + _ids(t, gp.goal_state_neg))
    out.append(f"goal-constraints {len(gp.root_constraints)}")
    for c in gp.root_constraints:
        out.append(str(c))
    if gp.unsolvable:
        out.append("unsolvable")
    out.append(f"actions {len(gp.actions)}")
    for i, a in enumerate(gp.actions):
        out.append(f"{i} {a.signature} clause {a.clause}")
        out.append("  pre+ " + _ids(t, a.pre_pos))
        out.append("  pre- " + _ids(t, a.pre_neg))
        out.append("  eff+ " + _ids(t, a.eff_pos))
        out.append("  eff- " + _ids(t, a.eff_neg))
    out.append(f"methods {len(gp.methods)}")
    for i, m in enumerate(gp.methods):
        out.append(f"{i} {m.signature} clause {m.clause} task {m.task}")
        out.append("  pre+ " + _ids(t, m.pre_pos))
        out.append("  pre- " + _ids(t, m.pre_neg))
        for tag, s in m.subtasks:
            out.append(f"  sub {tag} {s}")
        for c in m.residual_constraints:
            out.append(f"  con {c}")
    return "\n".join(out) + "\n"


def estimate(problem: Problem, unary_scan: bool = False) -> dict[str, int]:
    """Candidate counts per operator and per method, without enumerating."""
    out: dict[str, int] = {}
    h = problem.hierarchy
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    for op in problem.operators:
        doms = None
        if unary_scan:
            pre = normalize(op.precondition, h, {v for v, _ in op.params})
            doms = unary_domains(op.params, pre, h, inertia, problem.init)
        out[op.name] = estimate_grounding_size(op, h, doms)
    for m in prepare_methods(problem):
        out[m.name] = estimate_grounding_size(m, h)
    return out


__all__ = ["GroundProblem", "GroundingOptions", "GroundingError", "ground", "dump",
           "estimate", "kernels"]

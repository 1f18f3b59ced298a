"""Brute-force reference implementations used by the test-suite.

Nothing here uses inertia, the enumeration kernels or the simplifier: the
oracle grounds every operator and method over the full cartesian product,
evaluates formulas directly in each state, and enumerates every solution of
bounded size.  It is slow by design and only meant for tiny problems.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .grounding import GroundProblem, prepare_methods
from .model import (
    And, Atom, Before, Not, Problem, Series, TaskRef,
    _substitute, with_formula,
)
from .normalize import normalize
from .planner import TraceNode, method_constraints, root_constraints
from .validate import _check_node, holds


@dataclass(frozen=True)
class RawAction:
    name: str
    args: tuple[str, ...]
    pre: object
    add: frozenset
    dele: frozenset


@dataclass(frozen=True)
class RawMethod:
    name: str
    args: tuple[str, ...]
    task: tuple
    tags: tuple[str, ...]
    subtasks: tuple[tuple, ...]
    pre: object            # conjunction of the anchored before formulas
    constraints: tuple     # every constraint, ground but not simplified


def _bindings(variables, hierarchy):
    names = [v for v, _ in variables]
    for combo in product(*(hierarchy.instances_of(t) for _, t in variables)):
        yield dict(zip(names, combo))


def _effect_literals(e):
    if isinstance(e, Atom):
        return [e], []
    if isinstance(e, Not):
        return [], [e.arg]
    add, dele = [], []
    if isinstance(e, And):
        for a in e.args:
            x, y = _effect_literals(a)
            add += x
            dele += y
    return add, dele


def raw_actions(problem: Problem) -> list[RawAction]:
    h = problem.hierarchy
    out = []
    for op in problem.operators:
        bound = {v for v, _ in op.params}
        pre = normalize(op.precondition, h, bound)
        eff = normalize(op.effect, h, bound)
        for sigma in _bindings(op.params, h):
            add, dele = _effect_literals(_substitute(eff, sigma))
            out.append(RawAction(op.name, tuple(sigma[v] for v, _ in op.params),
                                 _substitute(pre, sigma), frozenset(add), frozenset(dele)))
    return out


def raw_methods(problem: Problem) -> list[RawMethod]:
    h = problem.hierarchy
    out = []
    for m in prepare_methods(problem):
        bound = {v for v, _ in m.variables}
        pos = {tag: i for i, (tag, _) in enumerate(m.subtasks)}
        cs = [c if isinstance(c, Series) else with_formula(c, normalize(c.formula, h, bound))
              for c in m.constraints]
        for sigma in _bindings(m.variables, h):
            ground = tuple(c if isinstance(c, Series) else _substitute(c, sigma) for c in cs)
            anchored = [c.formula for c in ground
                        if isinstance(c, Before) and min(pos[t] for t in c.tags) == 0]
            out.append(RawMethod(
                m.name, tuple(sigma[v] for v, _ in m.variables),
                (m.task, tuple(sigma[v] for v, _ in m.params)),
                tuple(tag for tag, _ in m.subtasks),
                tuple(_substitute(t, sigma).key for _, t in m.subtasks),
                And(tuple(anchored)), ground))
    return out


def raw_applicable(a: RawAction, s) -> bool:
    # an action asked to both add and delete an atom is treated as inapplicable
    return not (a.add & a.dele) and holds(a.pre, s)


# ---------------------------------------------------------------------------
# exhaustive enumeration

def _enumerate(root_tasks, s0, expand, max_choices: int):
    """Every complete choice sequence of length <= max_choices, with no loop check."""
    out = []
    path: list = []

    def rec(state, pending: tuple, budget: int):
        if not pending:
            out.append((list(path), state))
            return
        if budget == 0:
            return
        for choice, child, subs in expand(state, pending[0]):
            path.append(choice)
            rec(child, tuple(subs) + pending[1:], budget - 1)
            path.pop()

    rec(s0, tuple(root_tasks), max_choices)
    return out


def _replay(root: TraceNode, root_tags, choices):
    """Plan steps, method labels and trace tree from pre-order choices."""
    plan, methods = [], []
    stack = [[root, list(root_tags), 0, 0]]

    def close():
        while stack and stack[-1][2] == len(stack[-1][1]):
            stack.pop()
            if stack:
                p = stack[-1]
                p[0].spans.append((p[1][p[2]], p[3], len(plan)))
                p[2] += 1

    close()
    for kind, payload in choices:
        top = stack[-1]
        top[3] = len(plan)
        if kind == 0:
            plan.append(payload)
            top[0].spans.append((top[1][top[2]], top[3], len(plan)))
            top[2] += 1
        else:
            label, args, tags, constraints = payload
            methods.append((label, args))
            node = TraceNode(label, args, TaskRef(label), [], constraints)
            top[0].children.append(node)
            stack.append([node, list(tags), 0, len(plan)])
        close()
    return tuple(plan), tuple(methods), root


def _states(s0, plan, step):
    states = [s0]
    for p in plan:
        states.append(step(states[-1], p))
    return states


def unsimplified_solutions(problem: Problem, max_choices: int) -> set:
    """(plan, method sequence) pairs found by brute force on the raw grounding."""
    actions = raw_actions(problem)
    methods = raw_methods(problem)
    by_task: dict = {}
    for a in actions:
        by_task.setdefault((a.name, a.args), []).append(("a", a))
    for m in methods:
        by_task.setdefault(m.task, []).append(("m", m))

    def expand(s, task):
        for kind, x in by_task.get(task, ()):
            if kind == "a":
                if raw_applicable(x, s):
                    yield (0, (x.name, x.args)), (s - x.dele) | x.add, ()
            elif holds(x.pre, s):
                yield (1, (x.name, x.args, x.tags, x.constraints)), s, x.subtasks

    net = problem.network
    h = problem.hierarchy
    root_cs = tuple(c if isinstance(c, Series) else with_formula(c, normalize(c.formula, h, set()))
                    for c in net.constraints)
    tags = [tag for tag, _ in net.tasks]
    s0 = frozenset(problem.init)
    step = {(a.name, a.args): a for a in actions}
    found = set()
    for choices, _ in _enumerate([t.key for _, t in net.tasks], s0, expand, max_choices):
        root = TraceNode("__goal__", (), TaskRef("__goal__"), [], root_cs)
        plan, meths, tree = _replay(root, tags, choices)
        states = _states(s0, plan, lambda s, p: (s - step[p].dele) | step[p].add)
        if _check_node(tree, states) is None:
            found.add((plan, meths))
    return found


def simplified_solutions(gp: GroundProblem, max_choices: int) -> set:
    """The same enumeration over a simplified GroundProblem."""
    table = gp.table

    def expand(s, tid):
        opts = gp.options[tid]
        if gp.task_primitive[tid]:
            for i in opts:
                a = gp.actions[i]
                if a.pre_pos <= s and not (a.pre_neg & s):
                    yield (0, (a.name, a.args)), (s - a.eff_neg) | a.eff_pos, ()
        else:
            for i in opts:
                m = gp.methods[i]
                if m.pre_pos <= s and not (m.pre_neg & s):
                    payload = (m.name, m.args, tuple(tag for tag, _ in m.subtasks),
                               method_constraints(m))
                    yield (1, payload), s, gp.m_subtasks[i]

    if gp.unsolvable:
        return set()
    s0 = frozenset(gp.state0.atoms(table))
    eff = {}
    for a in gp.actions:
        eff[(a.name, a.args)] = a
    found = set()
    for choices, _ in _enumerate(gp.goal_ids, s0, expand, max_choices):
        root = TraceNode("__goal__", (), TaskRef("__goal__"), [], root_constraints(gp))
        plan, meths, tree = _replay(root, gp.goal_tags, choices)
        states = _states(s0, plan, lambda s, p: (s - eff[p].eff_neg) | eff[p].eff_pos)
        if _check_node(tree, states) is None:
            found.add((plan, meths))
    return found


# ---------------------------------------------------------------------------
# reachability

def reachable_states(s0, actions, step, applicable, limit: int = 200_000) -> set:
    """Breadth-first closure of `s0` under the given actions."""
    seen = {s0}
    queue = deque([s0])
    while queue:
        s = queue.popleft()
        for a in actions:
            if applicable(a, s):
                t = step(a, s)
                if t not in seen:
                    seen.add(t)
                    if len(seen) > limit:
                        raise RuntimeError("state space too large for the oracle")
                    queue.append(t)
    return seen


def raw_reachable(problem: Problem) -> set:
    acts = raw_actions(problem)
    return reachable_states(frozenset(problem.init), acts,
                            lambda a, s: (s - a.dele) | a.add, raw_applicable)


def ground_reachable(gp: GroundProblem) -> set:
    s0 = frozenset(gp.state0.atoms(gp.table))
    return reachable_states(
        s0, gp.actions, lambda a, s: (s - a.eff_neg) | a.eff_pos,
        lambda a, s: a.pre_pos <= s and not (a.pre_neg & s))

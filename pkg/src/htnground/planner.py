"""Total-order forward decomposition search.

`solve_ishop` runs on a GroundProblem: states are int bit sets, pending task
lists are hash-consed cons cells, so a search node is the pair of two ints.
`solve_shop_lifted` runs the same search directly on the lifted Problem,
binding method variables while it goes.  Both try choices in the same
canonical order and return the same first plan.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .grounding import GroundProblem, _root_network
from .ground_actions import compute_inertia, simplify_expression, top_conjuncts
from .model import (
    FALSE, ROOT_TYPE, TRUE, After, And, Atom, Before, Between, Constraint, Not, Or,
    Problem, Series, TaskRef, Truth, is_variable,
)
from .normalize import normalize

DEFAULT_TIMEOUT = 600.0
DEFAULT_DEPTH = 10 ** 6


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    backtracks: int = 0
    max_depth: int = 0
    pruned_revisits: int = 0
    search_ms: float = 0.0

    def as_dict(self) -> dict:
        return dict(nodes_expanded=self.nodes_expanded, backtracks=self.backtracks,
                    max_depth=self.max_depth, pruned_revisits=self.pruned_revisits,
                    search_ms=self.search_ms)


class SearchError(Exception):
    def __init__(self, message: str, stats: SearchStats):
        super().__init__(message)
        self.stats = stats


class PlanningFailure(SearchError):
    """Every choice was tried and none led to a plan."""


class SearchTimeout(SearchError):
    pass


class DepthExceeded(SearchError):
    """The search failed, but only after cutting branches at the depth cap."""


@dataclass
class TraceNode:
    """One method application: spans index into the plan, [lo, hi)."""

    name: str
    args: tuple[str, ...]
    task: TaskRef
    spans: list[tuple[str, int, int]] = field(default_factory=list)
    constraints: tuple[Constraint, ...] = ()
    children: list["TraceNode"] = field(default_factory=list)


@dataclass
class SearchResult:
    steps: list[tuple[str, tuple[str, ...]]]
    stats: SearchStats
    plan: list[int] | None = None       # action indices (ground search only)
    trace: TraceNode | None = None

    def plan_lines(self) -> list[str]:
        return ["(" + " ".join((n,) + a) + ")" for n, a in self.steps]


# ---------------------------------------------------------------------------
# shared driver

class _Cons:
    """Hash-consed immutable lists of task handles; 0 is the empty list."""

    def __init__(self):
        self.head: list = [None]
        self.tail: list[int] = [0]
        self._ids: dict = {}

    def cons(self, head, tail: int) -> int:
        key = (head, tail)
        i = self._ids.get(key)
        if i is None:
            i = len(self.head)
            self._ids[key] = i
            self.head.append(head)
            self.tail.append(tail)
        return i

    def prepend(self, items, tail: int) -> int:
        for h in reversed(items):
            tail = self.cons(h, tail)
        return tail


@dataclass(frozen=True, slots=True)
class _Mark:
    """A constraint check woven into a pending list between two subtasks.

    at: the formula must hold now.  pb/pe: begin/end protecting the formula,
    which is checked now and after every action until the end mark.
    wb/we: begin/end a watch; if no action ran in between, the formula must
    hold at the end mark.  Reversed series pairs protect a false formula.
    """

    kind: str
    formula: object


def weave(tags, items, constraints, conv, false) -> tuple:
    """Interleave marks for residual constraints with the subtask handles."""
    pos = {t: i for i, t in enumerate(tags)}
    before: list[list] = [[] for _ in tags]
    after: list[list] = [[] for _ in tags]
    for c in constraints:
        if isinstance(c, Series):
            for i, a in enumerate(c.tags):
                for b in c.tags[i + 1:]:
                    if pos[a] >= pos[b]:
                        before[pos[b]].append(_Mark("pb", false))
                        after[pos[a]].append(_Mark("pe", false))
        elif isinstance(c, Before):
            before[min(pos[t] for t in c.tags)].append(_Mark("at", conv(c.formula)))
        elif isinstance(c, After):
            after[max(pos[t] for t in c.tags)].append(_Mark("at", conv(c.formula)))
        elif isinstance(c, Between):
            g1 = max(pos[t] for t in c.tags1)
            g2 = min(pos[t] for t in c.tags2)
            f = conv(c.formula)
            if g1 < g2:
                after[g1].append(_Mark("pb", f))
                before[g2].append(_Mark("pe", f))
            else:
                before[g2].append(_Mark("wb", f))
                after[g1].append(_Mark("we", f))
    out: list = []
    for i, item in enumerate(items):
        out += before[i]
        out.append(item)
        out += after[i]
    return tuple(out)


def _drop(bag: tuple, f) -> tuple:
    i = len(bag) - 1 - bag[::-1].index(f)
    return bag[:i] + bag[i + 1:]


def _search(root_state, root_pending: int, cells: _Cons, expand, is_goal,
            timeout: float | None, depth_cap: int, loop_check: bool, stats: SearchStats,
            check=None):
    """Depth-first search with chronological backtracking.

    `expand(state, task)` yields (choice, child_state, subtasks) triples in
    canonical order; choices of the form (0, ...) are actions.  Pending lists
    may hold _Mark items, evaluated with `check(formula, state)`.  Returns the
    list of choices along the solution path.
    """
    start = time.perf_counter()
    deadline = None if timeout is None else start + timeout
    seen: set = set()
    cut = False
    head, tail = cells.head, cells.tail
    # frame: [state, pending, generator or None, choice, protected, watched]
    stack = [[root_state, root_pending, None, None, (), ()]]
    try:
        while stack:
            if deadline is not None and time.perf_counter() >= deadline:
                raise SearchTimeout("search timed out", stats)
            frame = stack[-1]
            state, pending, gen, _, prot, watch = frame
            if gen is None:
                ok = True
                while pending and type(head[pending]) is _Mark:
                    mk = head[pending]
                    pending = tail[pending]
                    kind, f = mk.kind, mk.formula
                    if kind == "at":
                        ok = check(f, state)
                    elif kind == "pb":
                        ok = check(f, state)
                        prot = prot + (f,)
                    elif kind == "pe":
                        prot = _drop(prot, f)
                    elif kind == "wb":
                        watch = watch + (f,)
                    elif f in watch:
                        watch = _drop(watch, f)
                        ok = check(f, state)
                    if not ok:
                        break
                if not ok:
                    stack.pop()
                    stats.backtracks += 1
                    continue
                frame[1], frame[4], frame[5] = pending, prot, watch
                if pending == 0:
                    if is_goal(state):
                        return [f[3] for f in stack[1:]]
                    stack.pop()
                    stats.backtracks += 1
                    continue
                if len(stack) > depth_cap:
                    cut = True
                    stack.pop()
                    continue
                if loop_check:
                    key = (state, pending, prot, watch)
                    if key in seen:
                        stats.pruned_revisits += 1
                        stack.pop()
                        continue
                    seen.add(key)
                stats.nodes_expanded += 1
                if len(stack) > stats.max_depth:
                    stats.max_depth = len(stack)
                gen = frame[2] = expand(state, head[pending])
            nxt = next(gen, None)
            if nxt is None:
                stack.pop()
                stats.backtracks += 1
                continue
            choice, child_state, subtasks = nxt
            child_watch = watch
            if choice[0] == 0:
                if prot and not all(check(f, child_state) for f in prot):
                    continue
                child_watch = ()
            child_pending = cells.prepend(subtasks, tail[pending])
            stack.append([child_state, child_pending, None, choice, prot, child_watch])
    finally:
        stats.search_ms = (time.perf_counter() - start) * 1000.0
    if cut:
        raise DepthExceeded(f"no plan within depth {depth_cap}", stats)
    raise PlanningFailure("no plan exists", stats)


# ---------------------------------------------------------------------------
# ground search

def solve_ishop(gp: GroundProblem, timeout: float | None = DEFAULT_TIMEOUT,
                depth: int = DEFAULT_DEPTH, loop_check: bool = True) -> SearchResult:
    """Find the first plan in canonical order, with its decomposition trace."""
    stats = SearchStats()
    if timeout is not None and timeout <= 0:
        raise SearchTimeout("no time left for search", stats)
    gpre, gneg = gp.goal_pre
    s0 = gp.state0.bits
    if gp.unsolvable or (s0 & gpre) != gpre or (s0 & gneg):
        raise PlanningFailure("goal network is unsatisfiable", stats)
    for tid in gp.goal_ids:
        if not gp.options[tid]:
            raise PlanningFailure(f"nothing is relevant for goal task {gp.task_str(tid)}", stats)
    a_pre, a_neg, a_add, a_del = gp.a_pre, gp.a_neg, gp.a_add, gp.a_del
    m_pre, m_neg, m_sub = gp.m_pre, gp.m_neg, gp.m_subtasks
    prim, options = gp.task_primitive, gp.options
    gpos, gnot = gp.goal_state

    conv = _bit_compiler(gp.table)
    false = conv(FALSE)
    woven = {}
    for i, m in enumerate(gp.methods):
        if m.residual_constraints:
            woven[i] = weave([tag for tag, _ in m.subtasks], m_sub[i],
                             m.residual_constraints, conv, false)
    m_sub = [woven.get(i, sub) for i, sub in enumerate(m_sub)]

    def expand(s, t):
        if prim[t]:
            for a in options[t]:
                if (s & a_pre[a]) == a_pre[a] and not (s & a_neg[a]):
                    yield (0, a), (s & ~a_del[a]) | a_add[a], ()
        else:
            for m in options[t]:
                if (s & m_pre[m]) == m_pre[m] and not (s & m_neg[m]):
                    yield (1, m), s, m_sub[m]

    def is_goal(s):
        return (s & gpos) == gpos and not (s & gnot)

    cells = _Cons()
    root_items = weave(gp.goal_tags, gp.goal_ids, gp.root_constraints, conv, false)
    root = cells.prepend(root_items, 0)
    choices = _search(s0, root, cells, expand, is_goal, timeout, depth, loop_check, stats,
                      _eval_bits)
    plan, trace = _replay(gp, choices)
    steps = [(gp.actions[a].name, gp.actions[a].args) for a in plan]
    return SearchResult(steps, stats, plan, trace)


def _bit_compiler(table):
    """Compile ground formulas into hashable tuples evaluated on bit states."""
    cache: dict = {}

    def conv(e):
        out = cache.get(e)
        if out is None:
            if isinstance(e, Truth):
                out = (0, e.value)
            elif isinstance(e, Atom):
                out = (1, 1 << table.id(e))
            elif isinstance(e, Not) and isinstance(e.arg, Atom):
                out = (2, 1 << table.id(e.arg))
            elif isinstance(e, And):
                out = (3, tuple(conv(a) for a in e.args))
            elif isinstance(e, Or):
                out = (4, tuple(conv(a) for a in e.args))
            else:
                raise TypeError(f"not normalized: {e}")
            cache[e] = out
        return out
    return conv


def _eval_bits(f, s) -> bool:
    kind, arg = f
    if kind == 1:
        return bool(s & arg)
    if kind == 2:
        return not s & arg
    if kind == 3:
        return all(_eval_bits(g, s) for g in arg)
    if kind == 4:
        return any(_eval_bits(g, s) for g in arg)
    return arg


def _pre_constraint(pos, neg, tag: str) -> list[Constraint]:
    lits = sorted(pos, key=lambda a: (a.predicate, a.args)) + \
        [Not(a) for a in sorted(neg, key=lambda a: (a.predicate, a.args))]
    if not lits:
        return []
    f = lits[0] if len(lits) == 1 else And(tuple(lits))
    return [Before(f, (tag,))]


def root_constraints(gp: GroundProblem) -> tuple[Constraint, ...]:
    out: list[Constraint] = []
    if gp.goal_tags:
        out += _pre_constraint(gp.goal_pre_pos, gp.goal_pre_neg, gp.goal_tags[0])
    out += list(gp.root_constraints)
    if gp.goal_tags and (gp.goal_state_pos or gp.goal_state_neg):
        lits = sorted(gp.goal_state_pos, key=lambda a: (a.predicate, a.args)) + \
            [Not(a) for a in sorted(gp.goal_state_neg, key=lambda a: (a.predicate, a.args))]
        f = lits[0] if len(lits) == 1 else And(tuple(lits))
        out.append(After(f, (gp.goal_tags[-1],)))
    return tuple(out)


def method_constraints(m) -> tuple[Constraint, ...]:
    """Residual constraints plus the compiled precondition as a before."""
    pre = _pre_constraint(m.pre_pos, m.pre_neg, m.subtasks[0][0]) if m.subtasks else []
    return tuple(pre) + tuple(m.residual_constraints)


def _replay(gp: GroundProblem, choices) -> tuple[list[int], TraceNode]:
    """Rebuild plan and method tree from the pre-order list of choices."""
    root = TraceNode("__goal__", (), TaskRef("__goal__", ()), [], root_constraints(gp))
    plan: list[int] = []
    # frame: [node, tags, next child index, lo of current child]
    stack = [[root, list(gp.goal_tags), 0, 0]]

    def close():
        while stack and stack[-1][2] == len(stack[-1][1]):
            stack.pop()
            if stack:
                parent = stack[-1]
                parent[0].spans.append((parent[1][parent[2]], parent[3], len(plan)))
                parent[2] += 1

    close()
    for kind, idx in choices:
        top = stack[-1]
        top[3] = len(plan)
        if kind == 0:
            plan.append(idx)
            top[0].spans.append((top[1][top[2]], top[3], len(plan)))
            top[2] += 1
        else:
            m = gp.methods[idx]
            node = TraceNode(m.name, m.args, m.task, [], method_constraints(m))
            top[0].children.append(node)
            stack.append([node, [tag for tag, _ in m.subtasks], 0, len(plan)])
        close()
    return plan, root


# ---------------------------------------------------------------------------
# lifted search

def _holds(e, sigma, state) -> bool:
    if isinstance(e, Atom):
        return Atom(e.predicate, tuple(sigma.get(a, a) for a in e.args)) in state
    if isinstance(e, Not):
        return not _holds(e.arg, sigma, state)
    if isinstance(e, And):
        return all(_holds(a, sigma, state) for a in e.args)
    if isinstance(e, Or):
        return any(_holds(a, sigma, state) for a in e.args)
    if isinstance(e, Truth):
        return e.value
    raise TypeError(f"not normalized: {e}")


def _vars(e) -> set[str]:
    if isinstance(e, Atom):
        return {a for a in e.args if is_variable(a)}
    if isinstance(e, Not):
        return _vars(e.arg)
    if isinstance(e, (And, Or)):
        out: set[str] = set()
        for a in e.args:
            out |= _vars(a)
        return out
    return set()


def _with(c, f):
    if isinstance(c, Between):
        return Between(f, c.tags1, c.tags2)
    return type(c)(f, c.tags)


def _bind_expr(e, sigma):
    if isinstance(e, Atom):
        return Atom(e.predicate, tuple(sigma.get(a, a) for a in e.args))
    if isinstance(e, Not):
        return Not(_bind_expr(e.arg, sigma))
    if isinstance(e, (And, Or)):
        return type(e)(tuple(_bind_expr(a, sigma) for a in e.args))
    return e


def _check_ground(e, state) -> bool:
    return _holds(e, {}, state)


class _LiftedOp:
    def __init__(self, op, h):
        bound = {v for v, _ in op.params}
        self.name = op.name
        self.params = op.params
        self.pre = normalize(op.precondition, h, bound)
        eff = simplify_expression(normalize(op.effect, h, bound))
        lits = () if eff == TRUE else top_conjuncts(eff)
        self.add = [l for l in lits if isinstance(l, Atom)]
        self.dele = [l.arg for l in lits if isinstance(l, Not)]
        self.contradictory = eff == FALSE


class _LiftedMethod:
    def __init__(self, m, h):
        self.schema = m
        self.params = m.params
        bound = {v for v, _ in m.variables}
        pos = {tag: i for i, (tag, _) in enumerate(m.subtasks)}
        anchored = [normalize(c.formula, h, bound) for c in m.constraints
                    if isinstance(c, Before) and min(pos[t] for t in c.tags) == 0]
        conj = []
        for f in anchored:
            conj.extend(top_conjuncts(f))
        # each conjunct is tested as soon as its last variable is bound
        order = {v: i for i, (v, _) in enumerate(m.free_vars)}
        self.checks: list[list] = [[] for _ in range(len(m.free_vars) + 1)]
        for c in conj:
            level = max((order[v] + 1 for v in _vars(c) if v in order), default=0)
            self.checks[level].append(c)
        self.free = [(v, tuple(h.instances_of(t))) for v, t in m.free_vars]
        self.tags = [tag for tag, _ in m.subtasks]
        self.residual: list[Constraint] = []
        for c in m.constraints:
            if isinstance(c, Series):
                self.residual.append(c)
            elif not (isinstance(c, Before) and min(pos[t] for t in c.tags) == 0):
                f = normalize(c.formula, h, bound)
                if f != TRUE:
                    self.residual.append(_with(c, f))


def solve_shop_lifted(problem: Problem, timeout: float | None = DEFAULT_TIMEOUT,
                      depth: int = DEFAULT_DEPTH, loop_check: bool = True) -> SearchResult:
    """SHOP-style search that instantiates operators and methods on demand."""
    from .grounding import prepare_methods
    stats = SearchStats()
    if timeout is not None and timeout <= 0:
        raise SearchTimeout("no time left for search", stats)
    h = problem.hierarchy
    ops = {o.name: _LiftedOp(o, h) for o in problem.operators}
    methods: dict[str, list[_LiftedMethod]] = {}
    for m in prepare_methods(problem):
        methods.setdefault(m.task, []).append(_LiftedMethod(m, h))
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    pre_pos, pre_neg, goal_pos, goal_neg, residual, unsolvable = _root_network(problem, inertia)
    s0 = frozenset(problem.init)
    if unsolvable or not pre_pos <= s0 or pre_neg & s0:
        raise PlanningFailure("goal network is unsatisfiable", stats)

    def typed(args, params) -> bool:
        for a, (_, t) in zip(args, params):
            ot = h.objects.get(a)
            if ot is None or not h.is_subtype(ot, t or ROOT_TYPE):
                return False
        return True

    def expand(s, task):
        name, args = task
        op = ops.get(name)
        if op is not None:
            if op.contradictory or not typed(args, op.params):
                return
            sigma = dict(zip((v for v, _ in op.params), args))
            if not _holds(op.pre, sigma, s):
                return
            dele = {Atom(a.predicate, tuple(sigma.get(x, x) for x in a.args)) for a in op.dele}
            add = {Atom(a.predicate, tuple(sigma.get(x, x) for x in a.args)) for a in op.add}
            if add & dele:
                return
            yield (0, task), (s - dele) | add, ()
            return
        for lm in methods.get(name, ()):
            if not typed(args, lm.params):
                continue
            sigma = dict(zip((v for v, _ in lm.params), args))
            if not all(_holds(c, sigma, s) for c in lm.checks[0]):
                continue
            yield from _bind(lm, sigma, 0, s, task)

    def _bind(lm, sigma, i, s, task):
        if i == len(lm.free):
            m = lm.schema
            subs = tuple((t.name, tuple(sigma.get(a, a) for a in t.args)) for _, t in m.subtasks)
            if lm.residual:
                subs = weave(lm.tags, subs, lm.residual,
                             lambda f: _bind_expr(f, sigma), FALSE)
            yield (1, (m.name, tuple(sigma[v] for v, _ in m.variables))), s, subs
            return
        var, values = lm.free[i]
        for val in values:
            sigma[var] = val
            if all(_holds(c, sigma, s) for c in lm.checks[i + 1]):
                yield from _bind(lm, sigma, i + 1, s, task)
        sigma.pop(var, None)

    def is_goal(s):
        return goal_pos <= s and not (goal_neg & s)

    cells = _Cons()
    net = problem.network.tasks
    root_items = weave([tag for tag, _ in net], [t.key for _, t in net], residual,
                       lambda f: f, FALSE)
    root = cells.prepend(root_items, 0)
    choices = _search(s0, root, cells, expand, is_goal, timeout, depth, loop_check, stats,
                      _check_ground)
    steps = [c for kind, c in choices if kind == 0]
    return SearchResult(steps, stats)

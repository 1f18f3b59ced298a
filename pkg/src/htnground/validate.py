"""Plan and decomposition-trace checker.

Simulation runs over plain atom sets, independently of the bit masks the
planner uses.  A span ``(tag, lo, hi)`` says the tagged subtask produced plan
steps ``lo .. hi-1``; state ``k`` is the state after the first k steps.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grounding import GroundProblem
from .model import (
    FALSE, TRUE, After, And, Atom, Before, Between, Constraint, GroundAction,
    Not, Or, Series, TaskRef, Truth,
)
from .planner import TraceNode
from .sexpr import ParseError, read_all, span_of


@dataclass(frozen=True)
class Violation:
    step: int | None
    reason: str
    method: str | None = None
    constraint: str | None = None

    def __str__(self) -> str:
        where = f"step {self.step}" if self.step is not None else "plan"
        if self.method:
            where += f", method {self.method}"
        if self.constraint:
            where += f", {self.constraint}"
        return f"{where}: {self.reason}"


def holds(e, state) -> bool:
    if isinstance(e, Atom):
        return e in state
    if isinstance(e, Not):
        return not holds(e.arg, state)
    if isinstance(e, And):
        return all(holds(a, state) for a in e.args)
    if isinstance(e, Or):
        return any(holds(a, state) for a in e.args)
    if isinstance(e, Truth):
        return e.value
    raise TypeError(f"cannot evaluate {e!r}")


def _lookup(gp: GroundProblem):
    by_sig: dict = {}
    for i, a in enumerate(gp.actions):
        by_sig.setdefault((a.name, a.args), []).append(i)
    return by_sig


def _resolve(gp: GroundProblem, step, by_sig) -> list[int] | None:
    if isinstance(step, int):
        return [step] if 0 <= step < len(gp.actions) else None
    if isinstance(step, GroundAction):
        return by_sig.get((step.name, step.args))
    try:
        name, args = step
        return by_sig.get((name, tuple(args)))
    except (TypeError, ValueError):
        return None


def simulate(gp: GroundProblem, plan) -> tuple[list[frozenset], Violation | None]:
    """States s_0 .. s_k, stopping at the first step that cannot run."""
    by_sig = _lookup(gp)
    s = frozenset(gp.state0.atoms(gp.table))
    states = [s]
    for k, step in enumerate(plan):
        cands = _resolve(gp, step, by_sig)
        if not cands:
            return states, Violation(k, f"unknown action {step!r}")
        chosen = None
        missing = None
        for i in cands:
            a = gp.actions[i]
            lack = sorted((str(p) for p in a.pre_pos if p not in s))
            extra = sorted((str(p) for p in a.pre_neg if p in s))
            if not lack and not extra:
                chosen = a
                break
            if missing is None:
                missing = (f"{a.signature} needs {lack[0]}" if lack
                           else f"{a.signature} needs (not {extra[0]})")
        if chosen is None:
            return states, Violation(k, missing)
        s = (s - chosen.eff_neg) | chosen.eff_pos
        states.append(s)
    return states, None


def validate_plan(gp: GroundProblem, plan) -> Violation | None:
    """None when the plan runs from the initial state and reaches the goal state."""
    states, bad = simulate(gp, plan)
    if bad is not None:
        return bad
    s = states[-1]
    for p in sorted(gp.goal_state_pos, key=str):
        if p not in s:
            return Violation(len(plan), f"goal {p} does not hold at the end")
    for p in sorted(gp.goal_state_neg, key=str):
        if p in s:
            return Violation(len(plan), f"goal (not {p}) does not hold at the end")
    return None


def _check_node(node: TraceNode, states) -> Violation | None:
    spans = {tag: (lo, hi) for tag, lo, hi in node.spans}
    label = "(" + " ".join((node.name,) + tuple(node.args)) + ")"
    n = len(states) - 1
    for c in node.constraints:
        tags = c.tags1 + c.tags2 if isinstance(c, Between) else c.tags
        unknown = [t for t in tags if t not in spans]
        if unknown:
            return Violation(None, f"no span for tag {unknown[0]}", label, str(c))
        if isinstance(c, Series):
            for a, b in zip(c.tags, c.tags[1:]):
                if spans[a][1] > spans[b][0]:
                    return Violation(spans[b][0], f"{a} is not ordered before {b}", label, str(c))
            continue
        if isinstance(c, Before):
            ks = [min(spans[t][0] for t in c.tags)]
        elif isinstance(c, After):
            ks = [max(spans[t][1] for t in c.tags)]
        else:
            first = max(spans[t][1] for t in c.tags1)
            last = min(spans[t][0] for t in c.tags2)
            ks = range(first, last + 1)
        for k in ks:
            if not 0 <= k <= n:
                return Violation(k, "span outside the plan", label, str(c))
            if not holds(c.formula, states[k]):
                return Violation(k, f"formula fails in state {k}", label, str(c))
    for child in node.children:
        bad = _check_node(child, states)
        if bad is not None:
            return bad
    return None


def validate_trace(gp: GroundProblem, trace: TraceNode, plan) -> Violation | None:
    """Check every recorded constraint of every method node against the plan."""
    states, bad = simulate(gp, plan)
    if bad is not None:
        return bad
    bad = _check_cover(trace, 0, len(plan))
    if bad is not None:
        return bad
    return _check_node(trace, states)


def _check_cover(node: TraceNode, lo: int, hi: int) -> Violation | None:
    """Subtask spans must tile [lo, hi) in order, and children their spans."""
    label = "(" + " ".join((node.name,) + tuple(node.args)) + ")"
    k = lo
    for tag, a, b in node.spans:
        if a != k or b < a:
            return Violation(a, f"span of {tag} does not start at step {k}", label)
        k = b
    if k != hi:
        return Violation(k, f"subtasks cover steps {lo}..{k}, not {lo}..{hi}", label)
    for child in node.children:
        inner = [(a, b) for _, a, b in child.spans]
        if inner:
            bad = _check_cover(child, inner[0][0], inner[-1][1])
            if bad is not None:
                return bad
    return None


# ---------------------------------------------------------------------------
# trace files

def _fmt_node(node: TraceNode, indent: int) -> list[str]:
    pad = "  " * indent
    head = "(" + " ".join((node.name,) + tuple(node.args)) + ")"
    lines = [f"{pad}(method {head} (task {node.task})"]
    for tag, lo, hi in node.spans:
        lines.append(f"{pad}  (span {tag} {lo} {hi})")
    lines.append(f"{pad}  (constraints" + "".join(" " + str(c) for c in node.constraints) + ")")
    for child in node.children:
        lines.extend(_fmt_node(child, indent + 1))
    lines[-1] += ")"
    return lines


def write_trace(trace: TraceNode) -> str:
    return "(trace\n" + "\n".join(_fmt_node(trace, 1)) + ")\n"


def _formula(node):
    if not isinstance(node, list):
        raise ParseError("expected a formula", span_of(node))
    if not node:
        return TRUE
    head = str(node[0])
    if head == "and":
        return And(tuple(_formula(a) for a in node[1:]))
    if head == "or":
        return Or(tuple(_formula(a) for a in node[1:]))
    if head == "not":
        return Not(_formula(node[1]))
    if head in ("true", "false") and len(node) == 1:
        return TRUE if head == "true" else FALSE
    return Atom(head, tuple(str(a) for a in node[1:]))


def _group(node) -> tuple[str, ...]:
    return tuple(str(t) for t in node) if isinstance(node, list) else (str(node),)


def _constraint(node) -> Constraint:
    head = str(node[0])
    if head == "series":
        return Series(tuple(str(t) for t in node[1:]))
    if head == "before":
        return Before(_formula(node[1]), _group(node[2]))
    if head == "after":
        return After(_formula(node[1]), _group(node[2]))
    if head == "between":
        return Between(_formula(node[1]), _group(node[2]), _group(node[3]))
    raise ParseError(f"unknown constraint {head}", span_of(node))


def _read_node(node) -> TraceNode:
    if not isinstance(node, list) or len(node) < 2 or str(node[0]) != "method":
        raise ParseError("expected (method ...)", span_of(node))
    head = node[1]
    out = TraceNode(str(head[0]), tuple(str(a) for a in head[1:]), TaskRef("__goal__"))
    cons = []
    for item in node[2:]:
        key = str(item[0])
        if key == "task":
            t = item[1]
            out.task = TaskRef(str(t[0]), tuple(str(a) for a in t[1:]))
        elif key == "span":
            out.spans.append((str(item[1]), int(item[2]), int(item[3])))
        elif key == "constraints":
            cons.extend(_constraint(c) for c in item[1:])
        elif key == "method":
            out.children.append(_read_node(item))
        else:
            raise ParseError(f"unexpected {key} in trace", span_of(item))
    out.constraints = tuple(cons)
    return out


def read_trace(text: str, file: str = "<trace>") -> TraceNode:
    forms = read_all(text, file)
    if len(forms) != 1 or not isinstance(forms[0], list) or str(forms[0][0]) != "trace":
        raise ParseError("expected one (trace ...) form", None)
    return _read_node(forms[0][1])


def read_plan(text: str, file: str = "<plan>") -> list[tuple[str, tuple[str, ...]]]:
    """One ``(name arg ...)`` per line; ``;`` comments allowed."""
    steps = []
    for form in read_all(text, file):
        if not isinstance(form, list) or not form:
            raise ParseError("expected (action args...)", span_of(form))
        steps.append((str(form[0]), tuple(str(a) for a in form[1:])))
    return steps

"""Parse, ground and search one problem, timing each stage."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .grounding import GroundingOptions, GroundProblem, ground
from .model import ModelError
from .parser import parse_domain, parse_problem
from .planner import (
    DEFAULT_DEPTH, DEFAULT_TIMEOUT, DepthExceeded, PlanningFailure, SearchResult,
    SearchTimeout, solve_ishop, solve_shop_lifted,
)
from .sexpr import ParseError
from .validate import validate_plan, validate_trace

PLANNERS = ("ishop", "shop")

EXIT_SOLVED, EXIT_UNSOLVABLE, EXIT_TIMEOUT, EXIT_INPUT = 0, 1, 2, 3
STATUS = {EXIT_SOLVED: "solved", EXIT_UNSOLVABLE: "unsolvable",
          EXIT_TIMEOUT: "timeout", EXIT_INPUT: "input-error"}


@dataclass
class Run:
    exit_code: int
    stats: dict
    result: SearchResult | None = None
    ground: GroundProblem | None = None
    error: str | None = None
    violations: list[str] = field(default_factory=list)


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def run(domain_text: str, problem_text: str, planner: str = "ishop",
        timeout: float | None = DEFAULT_TIMEOUT, depth: int = DEFAULT_DEPTH,
        method_fixpoint: bool = True, loop_check: bool = True, check: bool = False,
        domain_file: str = "<domain>", problem_file: str = "<problem>") -> Run:
    """Solve one problem.  The timeout covers the search only.

    With `check`, the plan is validated (and for the lifted planner the
    problem is grounded for that purpose, outside the timed stages).
    """
    if planner not in PLANNERS:
        raise ValueError(f"unknown planner {planner!r}")
    stats = dict(planner=planner, parse_ms=0.0, ground_ms=0.0, search_ms=0.0, total_ms=0.0,
                 actions_before=None, actions_after=None, methods_before=None,
                 methods_after=None, nodes_expanded=0, plan_length=None)
    t_all = time.perf_counter()

    def finish(code, **kw):
        stats["total_ms"] = _ms(t_all)
        stats["exit_status"] = STATUS[code]
        return Run(code, stats, **kw)

    t = time.perf_counter()
    try:
        domain = parse_domain(domain_text, domain_file)
        problem = parse_problem(problem_text, domain, problem_file)
    except (ParseError, ModelError) as e:
        stats["parse_ms"] = _ms(t)
        return finish(EXIT_INPUT, error=str(e))
    stats["parse_ms"] = _ms(t)

    gp = None
    if planner == "ishop":
        t = time.perf_counter()
        try:
            gp = ground(problem, GroundingOptions(method_fixpoint=method_fixpoint))
        except (ModelError, ValueError) as e:
            stats["ground_ms"] = _ms(t)
            return finish(EXIT_INPUT, error=str(e))
        stats["ground_ms"] = _ms(t)
        for k in ("actions_before", "actions_after", "methods_before", "methods_after"):
            stats[k] = gp.stats[k]

    try:
        if planner == "ishop":
            result = solve_ishop(gp, timeout, depth, loop_check)
        else:
            result = solve_shop_lifted(problem, timeout, depth, loop_check)
    except SearchTimeout as e:
        stats.update(nodes_expanded=e.stats.nodes_expanded, search_ms=e.stats.search_ms)
        return finish(EXIT_TIMEOUT, ground=gp, error=str(e))
    except (PlanningFailure, DepthExceeded) as e:
        stats.update(nodes_expanded=e.stats.nodes_expanded, search_ms=e.stats.search_ms)
        return finish(EXIT_UNSOLVABLE, ground=gp, error=str(e))
    stats.update(nodes_expanded=result.stats.nodes_expanded, search_ms=result.stats.search_ms,
                 plan_length=len(result.steps))
    out = finish(EXIT_SOLVED, result=result, ground=gp)

    if check:
        if gp is None:
            gp = ground(problem)
        bad = validate_plan(gp, result.steps)
        if bad is None and result.trace is not None:
            bad = validate_trace(gp, result.trace, result.steps)
        if bad is not None:
            out.violations.append(str(bad))
        out.ground = gp
    return out

"""Grounding, simplification and planning for totally ordered HTN problems."""

from .grounding import GroundingError, GroundingOptions, GroundProblem, dump, estimate, ground
from .parser import load, parse_domain, parse_problem
from .planner import (
    DepthExceeded, PlanningFailure, SearchError, SearchTimeout, solve_ishop,
    solve_shop_lifted,
)
from .validate import validate_plan, validate_trace

__version__ = "0.1.0"

__all__ = [
    "DepthExceeded", "GroundProblem", "GroundingError", "GroundingOptions",
    "PlanningFailure", "SearchError", "SearchTimeout", "dump", "estimate", "ground",
    "load", "parse_domain", "parse_problem", "solve_ishop", "solve_shop_lifted",
    "validate_plan", "validate_trace",
]

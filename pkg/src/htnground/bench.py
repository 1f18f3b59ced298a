"""Benchmark harness: run every planner on every problem of a manifest.

A manifest is a JSON object::

    {"timeout": 60, "planners": ["ishop", "shop"],
     "problems": [
        {"family": "rover", "domain": "rover-domain.pddl", "problem": "p01.pddl"},
        {"family": "rover", "generate": {"sizes": [1, 2, 3], "seed": 0}}]}

File paths are relative to the manifest.  A `generate` entry expands into
problems of a bundled family, so no files are needed.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .generators import FAMILIES, domain_text, family_problem
from .pipeline import PLANNERS, run
from .scoring import agile_score

TIMED_FIELDS = ("parse_ms", "ground_ms", "search_ms", "total_ms", "time_s", "score")


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class Job:
    family: str
    name: str
    domain: str          # text
    problem: str         # text
    planner: str
    timeout: float
    depth: int


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from None
    return expand(data, path.parent)


def expand(data: dict, base: Path) -> dict:
    """Resolve files and generated families into (family, name, domain, problem)."""
    planners = list(data.get("planners", PLANNERS))
    for p in planners:
        if p not in PLANNERS:
            raise ManifestError(f"unknown planner {p!r}")
    problems = []
    missing = []
    for entry in data.get("problems", []):
        family = entry.get("family", "default")
        if "generate" in entry:
            if family not in FAMILIES:
                raise ManifestError(f"no generator for family {family!r}")
            gen = entry["generate"]
            seed = gen.get("seed", 0)
            for k in gen.get("sizes", range(1, 11)):
                problems.append((family, f"{family}-{k}", domain_text(family),
                                 family_problem(family, k, seed)))
            continue
        paths = [base / entry.get("domain", ""), base / entry.get("problem", "")]
        bad = [str(p) for p in paths if not p.is_file()]
        if bad:
            missing.extend(bad)
            continue
        problems.append((family, paths[1].stem, paths[0].read_text(), paths[1].read_text()))
    if missing:
        raise ManifestError("missing files:\n  " + "\n  ".join(sorted(set(missing))))
    return {"timeout": float(data.get("timeout", 600)), "depth": int(data.get("depth", 10 ** 6)),
            "planners": planners, "problems": problems}


def _run_job(job: Job) -> dict:
    r = run(job.domain, job.problem, job.planner, job.timeout, job.depth, check=True,
            problem_file=job.name)
    s = r.stats
    return {"family": job.family, "problem": job.name, "planner": job.planner,
            "exit_status": s["exit_status"], "plan_length": s["plan_length"],
            "nodes_expanded": s["nodes_expanded"], "valid": r.exit_code == 0 and not r.violations,
            "parse_ms": s["parse_ms"], "ground_ms": s["ground_ms"],
            "search_ms": s["search_ms"], "total_ms": s["total_ms"]}


def run_bench(manifest: dict, jobs: int = 1) -> list[dict]:
    """One record per (problem, planner), in manifest order."""
    work = [Job(f, n, d, p, pl, manifest["timeout"], manifest["depth"])
            for f, n, d, p in manifest["problems"] for pl in manifest["planners"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_job, work))
    else:
        records = [_run_job(j) for j in work]
    score(records)
    return records


def score(records: list[dict]) -> None:
    """Attach time_s and the agile score to every record."""
    by_problem: dict = {}
    for r in records:
        solved = r["exit_status"] == "solved" and r["valid"]
        r["time_s"] = r["total_ms"] / 1000.0
        by_problem.setdefault((r["family"], r["problem"]), {})[r["planner"]] = \
            r["time_s"] if solved else None
    for r in records:
        r["score"] = agile_score(by_problem[(r["family"], r["problem"])])[r["planner"]]


def tables(records: list[dict], planners) -> dict:
    """family -> {"rows": [...], "totals": {planner: score}}"""
    out: dict = {}
    for r in records:
        fam = out.setdefault(r["family"], {"rows": {}, "totals": {p: 0.0 for p in planners}})
        row = fam["rows"].setdefault(r["problem"], {})
        row[r["planner"]] = {"time_s": r["time_s"], "length": r["plan_length"],
                             "score": r["score"], "status": r["exit_status"]}
        fam["totals"][r["planner"]] += r["score"]
    return out


def format_tables(records: list[dict], planners) -> str:
    lines = []
    for family, t in tables(records, planners).items():
        lines.append(f"== {family} ==")
        head = ["problem".ljust(16)]
        for p in planners:
            head += [f"{p}:time".rjust(12), f"{p}:len".rjust(10), f"{p}:score".rjust(11)]
        lines.append(" ".join(head))
        for name, row in t["rows"].items():
            cells = [name.ljust(16)]
            for p in planners:
                c = row.get(p)
                if c is None or c["status"] != "solved":
                    status = c["status"] if c else "-"
                    cells += [status.rjust(12), "-".rjust(10), f"{0.0:11.3f}"]
                else:
                    cells += [f"{c['time_s']:12.3f}", f"{c['length']:10d}", f"{c['score']:11.3f}"]
            lines.append(" ".join(cells))
        total = ["total".ljust(16)]
        for p in planners:
            total += ["".rjust(12), "".rjust(10), f"{t['totals'][p]:11.3f}"]
        lines.append(" ".join(total))
        lines.append("")
    return "\n".join(lines)


def series(records: list[dict], planners) -> dict:
    """Per family and planner, the time and plan-length series in problem order."""
    out: dict = {}
    for r in records:
        fam = out.setdefault(r["family"], {p: {"problems": [], "time_s": [], "length": []}
                                           for p in planners})
        s = fam[r["planner"]]
        s["problems"].append(r["problem"])
        s["time_s"].append(r["time_s"] if r["exit_status"] == "solved" else None)
        s["length"].append(r["plan_length"])
    return out


def strip_timings(records: list[dict]) -> list[dict]:
    """Records without the wall-clock dependent fields, for comparisons."""
    return [{k: v for k, v in r.items() if k not in TIMED_FIELDS} for r in records]


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1) // 2)

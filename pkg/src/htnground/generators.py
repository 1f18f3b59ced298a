"""Problem generators: benchmark families and random micro-domains."""

from __future__ import annotations

import random
from itertools import product
from importlib import resources

from .model import (
    ROOT_TYPE, After, And, Atom, Before, Between, Domain, Exists, Forall,
    Imply, MethodSchema, Not, OperatorSchema, Or, Problem, Series, TaskNetwork,
    TaskRef, TypeHierarchy,
)
from .parser import parse_domain, parse_problem

FAMILIES = ("rover", "childsnack", "satellite")


def data_text(name: str) -> str:
    return resources.files("htnground").joinpath("data").joinpath(name).read_text()


def data_path(name: str):
    return resources.files("htnground").joinpath("data").joinpath(name)


def domain_text(family: str) -> str:
    return data_text(f"{family}-domain.pddl")


def _problem(name: str, domain: str, objects: list[tuple[str, str]], init: list[str],
             goals: list[str]) -> str:
    objs = "\n            ".join(f"{o} - {t}" for o, t in objects)
    facts = "\n    ".join(init)
    tasks = "\n     ".join(f"(tag g{i + 1} {g})" for i, g in enumerate(goals))
    return (f"(define (problem {name})\n  (:domain {domain})\n  (:objects {objs})\n"
            f"  (:init\n    {facts})\n  (:goal-tasks\n    ({tasks}))\n)\n")


# ---------------------------------------------------------------------------
# rover

def rover_problem(size: int, seed: int = 0) -> str:
    """`size` rock goals and `size` soil goals on a tree of 4*size waypoints."""
    rng = random.Random(seed * 1009 + size)
    n = 4 * size
    wps = [f"waypoint{i}" for i in range(n)]
    rovers = [f"rover{i + 1}" for i in range(1 + size // 4)]
    objects = [(r, "rover") for r in rovers] + [(f"{r}store", "store") for r in rovers]
    objects += [("general", "lander")] + [(w, "waypoint") for w in wps]
    init = ["(at_lander general waypoint0)"]
    for i, r in enumerate(rovers):
        init += [f"(at {r} {wps[(i * 7 + 3) % n]})", f"(available {r})",
                 f"(store_of {r}store {r})", f"(empty {r}store)",
                 f"(equipped_for_rock_analysis {r})", f"(equipped_for_soil_analysis {r})"]
    edges = [(i, (i - 1) // 2) for i in range(1, n)]
    for a, b in edges:
        init += [f"(visible {wps[a]} {wps[b]})", f"(visible {wps[b]} {wps[a]})"]
        for r in rovers:
            init += [f"(can_traverse {r} {wps[a]} {wps[b]})",
                     f"(can_traverse {r} {wps[b]} {wps[a]})"]
    rock = sorted(rng.sample(range(1, n), size))
    soil = sorted(rng.sample(range(1, n), size))
    init += [f"(at_rock_sample {wps[i]})" for i in rock]
    init += [f"(at_soil_sample {wps[i]})" for i in soil]
    goals = []
    for r, s in zip(rock, soil):
        goals += [f"(get_rock_data {wps[r]})", f"(get_soil_data {wps[s]})"]
    return _problem(f"rover-{size}", "rover", objects, init, goals)


def estimate_problem(rovers: int = 14, landers: int = 1, waypoints: int = 100) -> str:
    """Objects only; enough to size the rover schemas without grounding them."""
    objects = [(f"rover{i}", "rover") for i in range(rovers)]
    objects += [(f"lander{i}", "lander") for i in range(landers)]
    objects += [(f"waypoint{i}", "waypoint") for i in range(waypoints)]
    objects += [("store0", "store")]
    return _problem("estimate", "rover", objects, [], ["(get_rock_data waypoint0)"])


# ---------------------------------------------------------------------------
# childsnack

def childsnack_problem(size: int, seed: int = 0) -> str:
    rng = random.Random(seed * 1013 + size)
    n = size + 1
    children = [f"child{i + 1}" for i in range(n)]
    allergic = set(rng.sample(children, max(1, n // 3)))
    regular = len(children) - len(allergic)
    # gluten bread first, so regular children never take gluten-free bread
    breads = [f"bread{i + 1}" for i in range(n)]
    contents = [f"content{i + 1}" for i in range(n)]
    places = [f"table{i + 1}" for i in range(3)]
    trays = [f"tray{i + 1}" for i in range(2)]
    sandwiches = [f"sandw{i + 1}" for i in range(n)]
    objects = [(c, "child") for c in children] + [(b, "bread") for b in breads]
    objects += [(c, "content") for c in contents] + [(t, "tray") for t in trays]
    objects += [(s, "sandwich") for s in sandwiches] + [(p, "place") for p in places]
    init = []
    for i, b in enumerate(breads):
        init.append(f"(at_kitchen_bread {b})")
        if i >= regular:
            init.append(f"(no_gluten_bread {b})")
    for i, c in enumerate(contents):
        init.append(f"(at_kitchen_content {c})")
        if i >= regular:
            init.append(f"(no_gluten_content {c})")
    for t in trays:
        init.append(f"(at {t} kitchen)")
    for c in children:
        init.append(f"(allergic_gluten {c})" if c in allergic else f"(not_allergic_gluten {c})")
        init.append(f"(waiting {c} {rng.choice(places)})")
    init += [f"(notexist {s})" for s in sandwiches]
    goals = [f"(serve {c})" for c in children]
    return _problem(f"childsnack-{size}", "childsnack", objects, init, goals)


# ---------------------------------------------------------------------------
# satellite

def satellite_problem(size: int, seed: int = 0) -> str:
    rng = random.Random(seed * 1019 + size)
    sats = [f"satellite{i}" for i in range(1 + size // 3)]
    modes = ["image", "spectrograph", "thermograph"]
    dirs = [f"dir{i}" for i in range(2 + size)]
    objects = [(s, "satellite") for s in sats] + [(m, "mode") for m in modes]
    objects += [(d, "direction") for d in dirs]
    init = []
    k = 0
    for s in sats:
        init += [f"(power_avail {s})", f"(pointing {s} {rng.choice(dirs)})"]
        for _ in range(2):
            inst = f"instrument{k}"
            k += 1
            objects.append((inst, "instrument"))
            init.append(f"(on_board {inst} {s})")
            for m in rng.sample(modes, 2):
                init.append(f"(supports {inst} {m})")
            init.append(f"(calibration_target {inst} {rng.choice(dirs)})")
    supported = sorted({f.split()[2][:-1] for f in init if f.startswith("(supports")})
    goals = []
    for d in rng.sample(dirs, min(len(dirs), size)):
        goals.append(f"(get_image {d} {rng.choice(supported)})")
    return _problem(f"satellite-{size}", "satellite", objects, init, goals)


GENERATORS = {"rover": rover_problem, "childsnack": childsnack_problem,
              "satellite": satellite_problem}


def family_problem(family: str, size: int, seed: int = 0) -> str:
    return GENERATORS[family](size, seed)


def load_family(family: str, size: int, seed: int = 0) -> Problem:
    domain = parse_domain(domain_text(family), f"{family}-domain.pddl")
    return parse_problem(family_problem(family, size, seed), domain, f"{family}-{size}")


def load_bundled(domain_file: str, problem_file: str) -> Problem:
    domain = parse_domain(data_text(domain_file), domain_file)
    return parse_problem(data_text(problem_file), domain, problem_file)


def basic_variant(drop: tuple[str, ...] = (), add: tuple[str, ...] = ()) -> str:
    """The bundled small rover problem with init facts removed or added."""
    text = data_text("rover-basic.pddl")
    for fact in drop:
        if fact not in text:
            raise ValueError(f"{fact} is not in the initial state")
        text = text.replace(fact, "", 1)
    if add:
        text = text.replace("(:init", "(:init\n    " + " ".join(add), 1)
    return text


# ---------------------------------------------------------------------------
# random micro-domains

def _random_formula(rng: random.Random, atoms: list[Atom], depth: int, qvars) -> object:
    r = rng.random()
    if depth == 0 or r < 0.35:
        a = rng.choice(atoms)
        return Not(a) if rng.random() < 0.3 else a
    if r < 0.55:
        return And(tuple(_random_formula(rng, atoms, depth - 1, qvars)
                         for _ in range(2)))
    if r < 0.8:
        return Or(tuple(_random_formula(rng, atoms, depth - 1, qvars)
                        for _ in range(2)))
    if r < 0.85:
        return Imply(_random_formula(rng, atoms, depth - 1, qvars),
                     _random_formula(rng, atoms, depth - 1, qvars))
    if r < 0.92 and qvars:
        var, pred = qvars
        kind = Forall if rng.random() < 0.5 else Exists
        return kind(var, ROOT_TYPE, Atom(pred, (var,)))
    return Not(_random_formula(rng, atoms, depth - 1, qvars))


def random_micro_problem(seed: int, max_objects: int = 6) -> Problem:
    """A small random domain with at most 3 operators and 2 methods.

    Every constraint group of a between constraint lies strictly before its
    second group, so the interval it speaks about always exists.
    """
    rng = random.Random(seed)
    h = TypeHierarchy({"ta": ROOT_TYPE, "tb": "ta"})
    n_obj = rng.randint(2, max_objects)
    for i in range(n_obj):
        h.add_object(f"o{i}", rng.choice([ROOT_TYPE, "ta", "tb"]))
    types = [ROOT_TYPE, "ta", "tb"]

    preds = {"u": (ROOT_TYPE,)}
    for i in range(rng.randint(2, 3)):
        preds[f"p{i}"] = tuple(ROOT_TYPE for _ in range(rng.randint(0, 2)))

    def atoms_over(terms):
        out = []
        for p, sig in preds.items():
            if len(sig) == 0:
                out.append(Atom(p, ()))
            elif terms:
                for _ in range(2):
                    out.append(Atom(p, tuple(rng.choice(terms) for _ in sig)))
        return out

    const_terms = [f"o{rng.randrange(n_obj)}"]

    def term_type(term, scope):
        return scope[term] if term in scope else h.objects[term]

    def pick_args(wanted, terms, scope):
        # prefer type-compatible arguments so that subtasks can be realized
        out = []
        for ty in wanted:
            ok = [t for t in terms if h.is_subtype(term_type(t, scope), ty)]
            out.append(rng.choice(ok or terms))
        return tuple(out)

    operators = []
    for i in range(rng.randint(1, 3)):
        params = tuple((f"?x{j}", rng.choice(types)) for j in range(rng.randint(0, 2)))
        terms = [v for v, _ in params] + const_terms
        pool = atoms_over(terms)
        if rng.random() < 0.3:
            pre = And(())
        else:
            pre = _random_formula(rng, pool, rng.choice([0, 0, 1, 2]), ("?q", "u"))
        effs = []
        chosen = rng.sample(sorted(set(pool), key=str), min(len(set(pool)), rng.randint(1, 3)))
        for a in chosen:
            effs.append(Not(a) if rng.random() < 0.4 else a)
        if rng.random() < 0.1:
            # now and then an action that adds and deletes the same atom
            effs.append(Not(chosen[0]) if isinstance(effs[0], Atom) else chosen[0])
        operators.append(OperatorSchema(f"op{i}", params, pre, And(tuple(effs))))

    # one or two compound tasks, each with at least one method
    n_methods = rng.randint(1, 2)
    tasks = ["c0"] if n_methods == 1 or rng.random() < 0.5 else ["c0", "c1"]
    arity = {t: rng.randint(0, 1) for t in tasks}
    ttype = {t: rng.choice(types) for t in tasks}
    owners = tasks + [rng.choice(tasks) for _ in range(n_methods - len(tasks))]
    counts = {t: owners.count(t) for t in tasks}
    seen: dict[str, int] = {}
    methods = []
    for task in owners:
        seen[task] = seen.get(task, 0) + 1
        label = task if counts[task] == 1 else f"{task}#{seen[task]}"
        params = tuple((f"?y{j}", ttype[task]) for j in range(arity[task]))
        free = tuple((f"?f{j}", rng.choice(types)) for j in range(rng.randint(0, 1)))
        scope = dict(params + free)
        terms = [v for v, _ in params + free] + const_terms
        subtasks = []
        # c1 may call c0; a task calls itself only from its second method
        callable_ = tasks[:tasks.index(task)] + ([task] if seen[task] == 2 else [])
        for k in range(rng.randint(1, 3)):
            if rng.random() < 0.7 or not callable_:
                op = rng.choice(operators)
                args = pick_args([ty for _, ty in op.params], terms, scope)
                subtasks.append((f"t{k}", TaskRef(op.name, args, True)))
            else:
                t = rng.choice(callable_)
                args = pick_args([ttype[t]] * arity[t], terms, scope)
                subtasks.append((f"t{k}", TaskRef(t, args, False)))
        tags = [tag for tag, _ in subtasks]
        pool = atoms_over(terms)
        cons = []
        if rng.random() < 0.5:
            cons.append(Series(tuple(tags)))
        if rng.random() < 0.45:
            cons.append(Before(_random_formula(rng, pool, rng.randint(0, 1), None), (tags[0],)))
        if rng.random() < 0.3:
            cons.append(After(_random_formula(rng, pool, rng.randint(0, 1), None),
                              (rng.choice(tags),)))
        if len(tags) >= 2 and rng.random() < 0.3:
            cut = rng.randint(1, len(tags) - 1)
            cons.append(Between(_random_formula(rng, pool, rng.randint(0, 1), None),
                                tuple(tags[:cut]), (tags[cut],)))
        methods.append(MethodSchema(label, task, params, tuple(subtasks), tuple(cons), free))

    const = const_terms[0]
    dh = TypeHierarchy({"ta": ROOT_TYPE, "tb": "ta"}, {const: h.objects[const]})
    domain = Domain(f"micro{seed}", dh, preds, operators, methods, {const: h.objects[const]})
    objs = list(h.objects)
    density = rng.choice([0.4, 0.6, 0.8])
    init = set()
    for p, sig in preds.items():
        for args in product(objs, repeat=len(sig)):
            if rng.random() < density:
                init.add(Atom(p, args))
    goal = []
    for k in range(rng.randint(1, 2)):
        if rng.random() < 0.75:
            t = rng.choice(tasks)
            cands = h.instances_of(ttype[t])
            if arity[t] and not cands:
                t = tasks[0]
                cands = h.instances_of(ttype[t])
            if arity[t] and not cands:
                continue
            goal.append((f"g{k}", TaskRef(t, tuple(rng.choice(cands) for _ in range(arity[t])),
                                          False)))
        else:
            op = rng.choice(operators)
            args = []
            for _, ty in op.params:
                cands = h.instances_of(ty)
                args.append(rng.choice(cands) if cands else "o0")
            goal.append((f"g{k}", TaskRef(op.name, tuple(args), True)))
    def literals(k):
        pool = atoms_over(const_terms)
        lits = [rng.choice(pool) for _ in range(k)]
        return And(tuple(Not(a) if rng.random() < 0.3 else a for a in lits))

    gcons = []
    if goal and rng.random() < 0.3:
        gcons.append(After(literals(rng.randint(1, 2)), (goal[-1][0],)))
    if goal and rng.random() < 0.3:
        gcons.append(Before(literals(1), (goal[0][0],)))
    if len(goal) == 2 and rng.random() < 0.3:
        gcons.append(Between(_random_formula(rng, atoms_over(const_terms), 1, None),
                             (goal[0][0],), (goal[1][0],)))
    gcons = tuple(gcons)
    order = tuple(sorted(init, key=lambda a: (a.predicate, a.args)))
    return Problem(f"micro{seed}", domain, h, frozenset(init), TaskNetwork(tuple(goal), gcons),
                   order)

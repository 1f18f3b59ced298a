"""Compare the numba and numpy grounding kernels on generated rover problems.

Usage: python3 benchmarks/bench_kernels.py [--sizes 4 8 10] [--repeat 3]

Each backend grounds the operators of the same problem; the surviving
actions must be identical.  The first numba call pays for compilation, so
it is reported separately.
"""

import argparse
import time

import numpy as np

from htnground import kernels
from htnground.generators import load_family
from htnground.ground_actions import compute_inertia, instantiate_operators


def ground_ops(problem, backend):
    inertia = compute_inertia(problem.operators, problem.domain.predicates)
    t = time.perf_counter()
    actions = instantiate_operators(problem.operators, problem.hierarchy, inertia, problem.init,
                                    problem.domain.predicates, drop_noops=False,
                                    backend=backend)
    return time.perf_counter() - t, [a.signature for a in actions]


def kernel_only(n, repeat, seed=0):
    """Four parameters over n objects, two binary static literals."""
    rng = np.random.default_rng(seed)
    keys = np.unique(rng.integers(0, 2 * n * n, size=n * n // 2)).astype(np.int64)
    lits = [kernels.KillLiteral(0, (0, 1), False, 0), kernels.KillLiteral(n * n, (2, 3), False, 0)]
    doms = [list(range(n))] * 4
    out = {}
    for backend in ("numpy", "numba"):
        times = []
        for _ in range(repeat):
            t = time.perf_counter()
            surv, _ = kernels.enumerate_candidates(doms, lits, keys, n, 1, backend)
            times.append(time.perf_counter() - t)
        out[backend] = (min(times), surv)
    if not np.array_equal(out["numpy"][1], out["numba"][1]):
        raise SystemExit(f"kernel n={n}: backends disagree")
    return out["numpy"][0], out["numba"][0], len(out["numpy"][1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 10])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    warm = load_family("rover", 1)
    jit_s, _ = ground_ops(warm, "numba")
    print(f"numba first call (includes compilation): {jit_s:.3f} s")
    print(f"{'size':>4} {'actions':>8} {'numpy_s':>9} {'numba_s':>9} {'speedup':>8}")
    for k in args.sizes:
        problem = load_family("rover", k)
        best = {}
        sigs = {}
        for backend in ("numpy", "numba"):
            times = []
            for _ in range(args.repeat):
                dt, sigs[backend] = ground_ops(problem, backend)
                times.append(dt)
            best[backend] = min(times)
        if sigs["numpy"] != sigs["numba"]:
            raise SystemExit(f"size {k}: backends disagree")
        print(f"{k:>4} {len(sigs['numpy']):>8} {best['numpy']:>9.4f} {best['numba']:>9.4f} "
              f"{best['numpy'] / best['numba']:>8.2f}")

    print()
    print("kernel only, 4 parameters over n objects")
    print(f"{'n':>4} {'product':>10} {'kept':>8} {'numpy_s':>9} {'numba_s':>9} {'speedup':>8}")
    for n in (20, 40, 60):
        a, b, kept = kernel_only(n, args.repeat)
        print(f"{n:>4} {n ** 4:>10} {kept:>8} {a:>9.4f} {b:>9.4f} {a / b:>8.2f}")


if __name__ == "__main__":
    main()

"""Substitution enumeration with inertia pruning.

Grounding a schema means walking the cartesian product of its parameter
domains.  The walk here is depth-first over parameters (left to right,
constants in declaration order) and prunes a whole subtree as soon as a
literal whose variables are all bound is statically false: a positive
literal over a never-added predicate whose atom is absent from the initial
state, or a negative literal over a never-deleted predicate whose atom is
present.

Two implementations share that contract: a numba kernel and a pure numpy
frontier expansion.  ``HTNGROUND_BACKEND`` selects one of ``numba``,
``numpy`` or ``auto`` (the default: numba for large products when it
imports, numpy otherwise).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

# products below this stay on numpy under "auto"; JIT start-up is not free
AUTO_NUMBA_MIN = 20_000
MAX_KEY = 1 << 62
# membership uses a dense bitmap when the literals' key range is below this
BITMAP_MAX = 1 << 26


def backend_name(total: int | None = None) -> str:
    choice = os.environ.get("HTNGROUND_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"HTNGROUND_BACKEND must be auto, numba or numpy, not {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("HTNGROUND_BACKEND=numba but numba is not importable")
    if choice == "auto":
        if HAVE_NUMBA and (total is None or total >= AUTO_NUMBA_MIN):
            return "numba"
        return "numpy"
    return choice


class AtomKeys:
    """Dense integer keys for ground atoms: one block of n**arity per predicate."""

    def __init__(self, predicates: dict[str, tuple], objects: list[str]):
        self.n = max(len(objects), 1)
        self.obj = {o: i for i, o in enumerate(objects)}
        self.offset: dict[str, int] = {}
        off = 0
        for p, sig in predicates.items():
            self.offset[p] = off
            off += self.n ** len(sig)
        if off >= MAX_KEY:
            raise OverflowError("atom key space does not fit in 62 bits")

    def key(self, predicate: str, args) -> int:
        k, mul = self.offset[predicate], 1
        for a in args:
            k += self.obj[a] * mul
            mul *= self.n
        return k

    def sorted_keys(self, atoms) -> np.ndarray:
        return np.unique(np.fromiter((self.key(a.predicate, a.args) for a in atoms),
                                     dtype=np.int64))


@dataclass(frozen=True)
class KillLiteral:
    """A literal that deletes the candidate when statically false.

    `slots` holds a parameter index (>= 0) or ``-(object index + 1)`` for a
    constant argument.  `kill_if_member` is True for a negated never-deleted
    predicate (false when the atom is in the initial state) and False for a
    positive never-added predicate (false when absent).
    """

    offset: int
    slots: tuple[int, ...]
    kill_if_member: bool
    group: int

    @property
    def last(self) -> int:
        return max((s for s in self.slots if s >= 0), default=-1)


def _pack(literals: list[KillLiteral], k: int):
    order = sorted(range(len(literals)), key=lambda i: (literals[i].last, i))
    lits = [literals[i] for i in order]
    L = len(lits)
    width = max((len(l.slots) for l in lits), default=0)
    off = np.zeros(L, np.int64)
    arity = np.zeros(L, np.int64)
    slots = np.zeros((L, max(width, 1)), np.int64)
    member = np.zeros(L, np.bool_)
    group = np.zeros(L, np.int64)
    last = np.zeros(L, np.int64)
    for i, l in enumerate(lits):
        off[i] = l.offset
        arity[i] = len(l.slots)
        slots[i, :len(l.slots)] = l.slots
        member[i] = l.kill_if_member
        group[i] = l.group
        last[i] = l.last
    # literals checked after binding parameter d live in [start[d+1], start[d+2])
    start = np.searchsorted(last, np.arange(-1, k + 1), side="left").astype(np.int64)
    return off, arity, slots, member, group, start


def _domains_array(domains: list[list[int]]):
    k = len(domains)
    width = max((len(d) for d in domains), default=0)
    arr = np.zeros((k, max(width, 1)), np.int64)
    lens = np.zeros(k, np.int64)
    for i, d in enumerate(domains):
        arr[i, :len(d)] = d
        lens[i] = len(d)
    return arr, lens


def enumerate_candidates(domains: list[list[int]], literals: list[KillLiteral],
                         s0_keys: np.ndarray, n_objects: int, n_groups: int,
                         backend: str | None = None):
    """Surviving combination indices and per-group kill counts.

    A combination index is the mixed-radix number whose digits are the
    positions chosen in each domain (first parameter most significant), so
    ascending indices are lexicographic substitution order.  ``killed[g]``
    counts full combinations removed by a literal of group `g` (the first
    failing literal in check order gets the blame).
    """
    total = 1
    for d in domains:
        total *= len(d)
    backend = backend or backend_name(total)
    n = np.int64(max(n_objects, 1))
    dom, lens = _domains_array(domains)
    off, arity, slots, member, group, start = _pack(literals, len(domains))
    s0 = np.ascontiguousarray(s0_keys, dtype=np.int64)
    table = _bitmap(s0, off, arity, int(n))
    if backend == "numba":
        surv, killed = _enumerate_numba(dom, lens, off, arity, slots, member, group,
                                        start, s0, table, n, np.int64(n_groups))
    else:
        surv, killed = _enumerate_numpy(dom, lens, off, arity, slots, member, group,
                                        start, s0, table, n, n_groups)
    return surv, killed


def _bitmap(s0: np.ndarray, off, arity, n: int) -> np.ndarray:
    """A uint8 membership table over the keys the literals can produce.

    Empty when that range is too wide; membership then uses binary search
    over the sorted keys.
    """
    bound = max((int(o) + n ** int(a) for o, a in zip(off, arity)), default=0)
    if bound == 0 or bound > BITMAP_MAX:
        return np.zeros(0, np.uint8)
    table = np.zeros(bound, np.uint8)
    table[s0[s0 < bound]] = 1
    return table


# ---------------------------------------------------------------------------
# numpy frontier expansion

def _keys_numpy(rows, consts_n, off, arity, slots_row, n):
    key = np.full(rows.shape[0], off, dtype=np.int64)
    mul = np.int64(1)
    for j in range(arity):
        s = slots_row[j]
        if s >= 0:
            key += rows[:, s] * mul
        else:
            key += np.int64(-s - 1) * mul
        mul *= n
    return key


def _member_numpy(keys, s0, table):
    if table.shape[0]:
        return table[keys].view(np.bool_)
    if s0.size == 0:
        return np.zeros(keys.shape[0], np.bool_)
    pos = np.searchsorted(s0, keys)
    pos = np.minimum(pos, s0.size - 1)
    return s0[pos] == keys


def _enumerate_numpy(dom, lens, off, arity, slots, member, group, start, s0, table, n,
                     n_groups):
    k = lens.shape[0]
    killed = np.zeros(n_groups, np.int64)
    strides = np.ones(k + 1, np.int64)
    for d in range(k - 1, -1, -1):
        strides[d] = strides[d + 1] * lens[d]
    rows = np.zeros((1, k), np.int64)
    combo = np.zeros(1, np.int64)
    for d in range(-1, k):
        if d >= 0:
            m = int(lens[d])
            r = rows.shape[0]
            rows = np.repeat(rows, m, axis=0)
            rows[:, d] = np.tile(dom[d, :m], r)
            combo = np.repeat(combo, m) * m + np.tile(np.arange(m, dtype=np.int64), r)
        weight = strides[d + 1]
        for i in range(start[d + 1], start[d + 2]):
            if rows.shape[0] == 0:
                break
            keys = _keys_numpy(rows, None, off[i], arity[i], slots[i], n)
            hit = _member_numpy(keys, s0, table)
            dead = hit if member[i] else ~hit
            killed[group[i]] += int(dead.sum()) * int(weight)
            rows = rows[~dead]
            combo = combo[~dead]
    if k == 0 and rows.shape[0] == 1:
        return np.zeros(1, np.int64), killed
    return combo, killed


# ---------------------------------------------------------------------------
# numba depth-first walk

if HAVE_NUMBA:
    @numba.njit(cache=True, inline="always")
    def _member_nb(s0, table, key):
        if table.shape[0] > 0:
            return table[key] != 0
        if s0.shape[0] == 0:
            return False
        pos = np.searchsorted(s0, key)
        if pos >= s0.shape[0]:
            return False
        return s0[pos] == key

    @numba.njit(cache=True, inline="always")
    def _dead_nb(i, assign, off, arity, slots, member, s0, table, n):
        key = off[i]
        mul = np.int64(1)
        for j in range(arity[i]):
            s = slots[i, j]
            if s >= 0:
                key += assign[s] * mul
            else:
                key += (-s - 1) * mul
            mul *= n
        hit = _member_nb(s0, table, key)
        return hit if member[i] else not hit

    @numba.njit(cache=True)
    def _walk_nb(dom, lens, off, arity, slots, member, group, start, s0, table, n,
                 killed, out):
        """Depth-first walk; writes survivors into `out` unless it is empty.

        Returns the number of survivors.  Growing an output array inside the
        loop is several times slower than walking twice, hence the two modes.
        """
        k = lens.shape[0]
        write = out.shape[0] > 0
        strides = np.ones(k + 1, np.int64)
        for d in range(k - 1, -1, -1):
            strides[d] = strides[d + 1] * lens[d]
        assign = np.zeros(max(k, 1), np.int64)
        # ground literals (no parameters) decide everything up front
        for i in range(start[0], start[1]):
            if _dead_nb(i, assign, off, arity, slots, member, s0, table, n):
                killed[group[i]] += strides[0]
                return 0
        if k == 0:
            return 1
        for d in range(k):
            if lens[d] == 0:
                return 0
        count = 0
        idx = np.zeros(k, np.int64)
        base = np.zeros(k + 1, np.int64)   # combination index of the bound prefix
        last = k - 1
        lo, hi = start[k], start[k + 1]
        d = 0
        while True:
            if d == last:
                # innermost parameter: a flat loop, no descent
                for j in range(lens[d]):
                    assign[d] = dom[d, j]
                    ok = True
                    for i in range(lo, hi):
                        if _dead_nb(i, assign, off, arity, slots, member, s0, table, n):
                            killed[group[i]] += 1
                            ok = False
                            break
                    if ok:
                        if write:
                            out[count] = base[d] + j
                        count += 1
                if d == 0:
                    break
                d -= 1
                idx[d] += 1
            elif idx[d] < lens[d]:
                assign[d] = dom[d, idx[d]]
                ok = True
                for i in range(start[d + 1], start[d + 2]):
                    if _dead_nb(i, assign, off, arity, slots, member, s0, table, n):
                        killed[group[i]] += strides[d + 1]
                        ok = False
                        break
                if ok:
                    base[d + 1] = (base[d] + idx[d]) * lens[d + 1]
                    d += 1
                    idx[d] = 0
                else:
                    idx[d] += 1
            else:
                if d == 0:
                    break
                d -= 1
                idx[d] += 1
        return count

    def _enumerate_numba(dom, lens, off, arity, slots, member, group, start, s0, table, n,
                         n_groups):
        killed = np.zeros(n_groups, np.int64)
        count = _walk_nb(dom, lens, off, arity, slots, member, group, start, s0, table, n,
                         killed, np.zeros(0, np.int64))
        out = np.zeros(count, np.int64)
        if count:
            _walk_nb(dom, lens, off, arity, slots, member, group, start, s0, table, n,
                     np.zeros(n_groups, np.int64), out)
        return out, killed
else:  # pragma: no cover
    def _enumerate_numba(*args):
        raise RuntimeError("numba is not available")


def decode(combo: int, lens: list[int]) -> list[int]:
    """Digits of a combination index (first parameter most significant)."""
    digits = [0] * len(lens)
    for i in range(len(lens) - 1, -1, -1):
        combo, digits[i] = divmod(combo, lens[i])
    return digits

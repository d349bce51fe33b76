"""Cut-plan composition: where payload boundaries go so every required
collision is broken by a verified cut.

Positions are handled in units of 10 bases.  A required collision becomes
the (contiguous) unit interval of its verified cut positions; a plan must
place a boundary inside every such interval, and consecutive boundaries must
differ by a group length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import Infeasible
from ..seqcore import DEFAULT_GROUP, LengthGroup
from .groups import full_coverage_threshold, phase_penalty

UNSET = np.iinfo(np.int32).max
NO_LIMIT = np.iinfo(np.int64).max


@dataclass(frozen=True)
class CutPlan:
    """A composition of [0, seq_len) into payload segments."""

    seq_len: int
    boundaries: tuple[int, ...]
    cut_points: tuple[int, ...]

    @property
    def edges(self) -> list[int]:
        return [0, *self.boundaries, self.seq_len]

    @property
    def lengths(self) -> list[int]:
        e = self.edges
        return [b - a for a, b in zip(e[:-1], e[1:]) if b > a]

    @property
    def segments(self) -> list[tuple[int, int]]:
        e = self.edges
        return [(a, b) for a, b in zip(e[:-1], e[1:]) if b > a]

    def __len__(self) -> int:
        return len(self.lengths)


def candidate_cuts(index, rows=None, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Verified cut interval, in units, of each collision row (-1 where none).

    Candidates are multiples of 10 leaving both pieces shorter than the
    collision length threshold; when the index carries its sequence and
    scanner, each one is also re-scanned.
    """
    if rows is None:
        rows = np.arange(len(index))
    rows = np.asarray(rows, dtype=np.int64)
    if m is None:
        m = index.scanner.rule.min_len if index.scanner is not None else 13
    s = index.start[rows]
    e = index.end[rows]
    first = (np.maximum(s + 1, e - (m - 1)) + 9) // 10
    last = np.minimum(e - 1, s + (m - 1)) // 10
    lo = np.full(rows.size, -1, dtype=np.int64)
    hi = np.full(rows.size, -1, dtype=np.int64)
    for shift in (0, 1):
        u = first + shift
        ok = u <= last
        if index.scanner is not None and index.seq is not None and ok.any():
            sel = np.flatnonzero(ok)
            seg_hi = np.full(sel.size, index.seq_len, dtype=np.int64)
            good = index.scanner.verify_cuts(index.seq, index.primer[rows[sel]], s[sel], e[sel],
                                             u[sel] * 10, None, seg_hi)
            ok[sel] = good
        lo = np.where(ok & (lo < 0), u, lo)
        hi = np.where(ok, u, hi)
    return lo, hi


@numba.njit(cache=True)
def _next_hi(n_units, lo, hi):
    """nxt[u] = smallest hi over intervals with lo > u (NO_LIMIT when none)."""
    nxt = np.full(n_units + 2, NO_LIMIT, dtype=np.int64)
    for i in range(lo.size):
        if lo[i] - 1 >= 0 and lo[i] - 1 <= n_units and hi[i] < nxt[lo[i] - 1]:
            nxt[lo[i] - 1] = hi[i]
    for u in range(n_units - 1, -1, -1):
        if nxt[u + 1] < nxt[u]:
            nxt[u] = nxt[u + 1]
    return nxt


@numba.njit(cache=True)
def _forward(n_units, seeds, steps, nxt):
    """Fewest segments reaching each unit from any seed, skipping no interval.

    Ties keep the earliest predecessor, i.e. the longest last segment.
    """
    cost = np.full(n_units + 1, UNSET, dtype=np.int32)
    pred = np.full(n_units + 1, -1, dtype=np.int32)
    for s in seeds:
        cost[s] = 0
    for u in range(n_units + 1):
        if cost[u] == UNSET:
            continue
        c = cost[u] + 1
        limit = nxt[u]
        for L in steps:
            v = u + L
            if v > n_units or v > limit:
                continue
            if c < cost[v]:
                cost[v] = c
                pred[v] = u
    return cost, pred


def _prepare(lo, hi):
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    order = np.argsort(lo, kind="stable")
    return lo[order], hi[order]


def compose_units(seq_len: int, lo, hi, group: LengthGroup = DEFAULT_GROUP) -> CutPlan:
    """Fewest-segment composition hitting every unit interval [lo, hi]."""
    lo, hi = _prepare(lo, hi)
    if np.any(lo < 0) or np.any(hi < lo):
        raise Infeasible("a required collision has no verified cut")
    n_units = seq_len // 10
    if lo.size and hi.max() * 10 >= seq_len:
        raise Infeasible("a required cut lies at or past the sequence end")
    steps = np.array(sorted({L // 10 for L in group.lengths}, reverse=True), dtype=np.int64)
    nxt = _next_hi(n_units, lo, hi)
    cost, pred = _forward(n_units, np.zeros(1, dtype=np.int64), steps, nxt)
    top = group.max_length
    best, best_b = None, -1
    for b in range(n_units, -1, -1):
        tail = seq_len - 10 * b
        if tail >= top:
            break
        if cost[b] == UNSET or nxt[b] != NO_LIMIT:
            continue
        total = int(cost[b]) + (1 if tail else 0)
        if best is None or total < best:
            best, best_b = total, b
    if best is None:
        raise Infeasible("no composition places a verified cut in every required collision")
    units = []
    u = best_b
    while u > 0:
        units.append(u)
        u = int(pred[u])
    units.reverse()
    bounds = [10 * u for u in units if 10 * u < seq_len]
    required = set()
    if lo.size:
        b = np.asarray(units, dtype=np.int64)
        at = np.searchsorted(b, lo)
        hit = b[np.minimum(at, b.size - 1)]
        required = {10 * int(x) for x in hit}
    return CutPlan(seq_len, tuple(bounds), tuple(sorted(required)))


def compose_cuts(seq_len: int, required, group: LengthGroup = DEFAULT_GROUP, index=None) -> CutPlan:
    """Payload composition of [0, seq_len) breaking every required collision.

    ``required`` is a list of Collision; verified candidates come from
    ``index`` (its sequence and scanner) when given.
    """
    from ..collision.index import CollisionIndex

    required = sorted(required, key=lambda c: (c.start, c.primer_id))
    sub = CollisionIndex([c.primer_id for c in required], [c.start for c in required],
                         [c.end for c in required], [c.mismatches_plus_gaps for c in required],
                         seq_len, max([c.primer_id for c in required], default=0) + 1,
                         seq=None if index is None else index.seq,
                         scanner=None if index is None else index.scanner)
    lo, hi = candidate_cuts(sub)
    return compose_units(seq_len, lo, hi, group)


@numba.njit(cache=True)
def _clusters_feasible(lo, hi, steps, gap, reach):
    """Local feasibility of sorted unit intervals, cluster by cluster.

    Intervals closer than ``gap`` form a cluster.  A cluster starting at
    least ``gap`` units in is entered freely from any of the ``reach`` units
    before it (all reachable from a boundary ``gap`` or more units back);
    an earlier one must be reached from position 0.
    """
    n = lo.size
    i = 0
    while i < n:
        j = i + 1
        far = hi[i]
        while j < n and lo[j] - far < gap:
            if hi[j] > far:
                far = hi[j]
            j += 1
        first = lo[i]
        if first >= gap:
            base = first - reach
        else:
            base = 0
        width = far - base
        llo = lo[i:j] - base
        lhi = hi[i:j] - base
        nxt = np.full(width + 2, NO_LIMIT, dtype=np.int64)
        for t in range(llo.size):
            if llo[t] - 1 >= 0 and lhi[t] < nxt[llo[t] - 1]:
                nxt[llo[t] - 1] = lhi[t]
        for u in range(width - 1, -1, -1):
            if nxt[u + 1] < nxt[u]:
                nxt[u] = nxt[u + 1]
        if first >= gap:
            seeds = np.arange(0, reach, dtype=np.int64)
        else:
            seeds = np.zeros(1, dtype=np.int64)
        cost, _ = _forward(width, seeds, steps, nxt)
        ok = False
        for u in range(width + 1):
            if cost[u] != UNSET and nxt[u] == NO_LIMIT:
                ok = True
                break
        if not ok:
            return False
        i = j
    return True


class Feasibility:
    """Joint-cut feasibility of unit-interval sets under one length group."""

    def __init__(self, group: LengthGroup = DEFAULT_GROUP):
        self.group = group
        self.steps = np.array(sorted({L // 10 for L in group.lengths}, reverse=True), dtype=np.int64)
        t = full_coverage_threshold(group)
        self.reach = None if t is None else t // 10
        # clusters this far apart cannot constrain each other
        self.gap = None if t is None else 2 * self.reach + 3

    def feasible(self, lo, hi, seq_len: int | None = None) -> bool:
        lo, hi = _prepare(lo, hi)
        if np.any(lo < 0):
            return False
        if self.gap is None:
            if seq_len is None:
                raise ValueError("groups without full coverage need the sequence length")
            try:
                compose_units(seq_len, lo, hi, self.group)
            except Infeasible:
                return False
            return True
        return bool(_clusters_feasible(lo, hi, self.steps, self.gap, self.reach))


def collision_penalty(lo: int, hi: int, group: LengthGroup = DEFAULT_GROUP) -> float:
    """Bases lost by the cheapest detour from the max-length grid to a verified cut."""
    if lo < 0:
        return float("inf")
    best = float("inf")
    for u in range(lo, hi + 1):
        p = phase_penalty(group, (10 * u) % group.max_length)
        if p is not None and p < best:
            best = p
    return best

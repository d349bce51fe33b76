"""Primer weights and the conflict graph over collided primers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..seqcore import DEFAULT_GROUP, LengthGroup
from .compose import Feasibility, _clusters_feasible, candidate_cuts, collision_penalty


@dataclass
class ConflictGraph:
    """Collided primers, their capacities and pairwise cut conflicts.

    Unrecoverable primers (some collision admits no verified cut, or their
    own cuts cannot be composed) conflict with every other vertex; that
    adjacency is implicit rather than stored.
    """

    ids: np.ndarray
    weights: np.ndarray
    counts: np.ndarray
    recoverable: np.ndarray
    edges_alive: dict[int, set[int]]
    intervals: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    penalties: dict[int, float] = field(default_factory=dict)
    group: LengthGroup = DEFAULT_GROUP

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self._pos = {int(p): i for i, p in enumerate(self.ids)}
        self._dead = {int(p) for p, ok in zip(self.ids, self.recoverable) if not ok}
        for p in self._pos:
            self.edges_alive.setdefault(p, set())

    @classmethod
    def from_edges(cls, weights: dict[int, float], edges, counts: dict[int, int] | None = None):
        """A plain graph (every vertex recoverable), mostly for tests and experiments."""
        ids = sorted(weights)
        adj = {p: set() for p in ids}
        for a, b in edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            adj[a].add(b)
            adj[b].add(a)
        cnt = [1 if counts is None else counts[p] for p in ids]
        return cls(np.array(ids), np.array([float(weights[p]) for p in ids]), np.array(cnt),
                   np.ones(len(ids), dtype=bool), adj)

    @property
    def vertices(self) -> list[tuple[int, float, int]]:
        return [(int(p), float(w), int(c)) for p, w, c in zip(self.ids, self.weights, self.counts)]

    def __len__(self) -> int:
        return int(self.ids.size)

    def __contains__(self, p) -> bool:
        return int(p) in self._pos

    def weight(self, p: int) -> float:
        return float(self.weights[self._pos[p]])

    def count(self, p: int) -> int:
        return int(self.counts[self._pos[p]])

    def is_recoverable(self, p: int) -> bool:
        return p not in self._dead

    def has_edge(self, a: int, b: int) -> bool:
        if a == b:
            return False
        return a in self._dead or b in self._dead or b in self.edges_alive[a]

    def neighbors(self, p: int) -> set[int]:
        if p in self._dead:
            return set(self._pos) - {p}
        return self.edges_alive[p] | (self._dead - {p})

    def degree(self, p: int) -> int:
        if p in self._dead:
            return len(self._pos) - 1
        return len(self.edges_alive[p]) + len(self._dead)

    def degrees(self) -> np.ndarray:
        return np.array([self.degree(int(p)) for p in self.ids], dtype=np.int64)

    def adjacency(self) -> dict[int, set[int]]:
        return {int(p): self.neighbors(int(p)) for p in self.ids}

    def edge_list(self) -> list[tuple[int, int]]:
        out = []
        for a in self._pos:
            for b in self.neighbors(a):
                if a < b:
                    out.append((a, b))
        return sorted(out)


def primer_capacity(p: int, index, group: LengthGroup = DEFAULT_GROUP, parallel: float = 1_550_000,
                    feas: Feasibility | None = None) -> float:
    """(parallel / 2) * max length minus the bases lost to p's cuts (-inf if uncuttable)."""
    rows = index.rows_for(p)
    if rows.size == 0:
        raise ValueError(f"primer {p} has no collisions")
    base = parallel / 2 * group.max_length
    if index.truncated[p]:
        return float("-inf")
    lo, hi = candidate_cuts(index, rows)
    if np.any(lo < 0):
        return float("-inf")
    feas = feas or Feasibility(group)
    if not feas.feasible(lo, hi, index.seq_len):
        return float("-inf")
    return base - sum(collision_penalty(int(a), int(b), group) for a, b in zip(lo, hi))


@numba.njit(cache=True)
def _candidate_pairs(lo, hi, owner, gap):
    """Owner pairs (a < b) having intervals within ``gap`` units; input sorted by lo."""
    n = lo.size
    cap = 1024
    out = np.empty((cap, 2), dtype=np.int64)
    count = 0
    for i in range(n):
        j = i + 1
        while j < n and lo[j] - hi[i] < gap:
            if owner[j] != owner[i]:
                if count == cap:
                    cap *= 2
                    grown = np.empty((cap, 2), dtype=np.int64)
                    grown[:count] = out[:count]
                    out = grown
                a, b = owner[i], owner[j]
                if a > b:
                    a, b = b, a
                out[count, 0] = a
                out[count, 1] = b
                count += 1
            j += 1
    return out[:count]


@numba.njit(cache=True)
def _pair_conflict(lo_a, hi_a, lo_b, hi_b, steps, gap, reach):
    """True when the union of two self-feasible interval sets cannot be cut.

    Only clusters holding intervals of both primers need checking.
    """
    n = lo_a.size + lo_b.size
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    who = np.empty(n, dtype=np.int8)
    i = j = t = 0
    while i < lo_a.size or j < lo_b.size:
        if j >= lo_b.size or (i < lo_a.size and lo_a[i] <= lo_b[j]):
            lo[t], hi[t], who[t] = lo_a[i], hi_a[i], 0
            i += 1
        else:
            lo[t], hi[t], who[t] = lo_b[j], hi_b[j], 1
            j += 1
        t += 1
    s = 0
    while s < n:
        e = s + 1
        far = hi[s]
        mixed = False
        while e < n and lo[e] - far < gap:
            if who[e] != who[s]:
                mixed = True
            if hi[e] > far:
                far = hi[e]
            e += 1
        if mixed:
            # re-run the cluster check on this stretch alone, keeping its absolute offsets
            if not _clusters_feasible(lo[s:e], hi[s:e], steps, gap, reach):
                return True
        s = e
    return False


def build_conflict_graph(index, group: LengthGroup = DEFAULT_GROUP, parallel: float = 1_550_000) -> ConflictGraph:
    """Vertices are collided primers; an edge joins two primers whose collisions
    cannot all be cut together."""
    feas = Feasibility(group)
    counts_all = index.counts()
    ids = np.flatnonzero(counts_all)
    lo_all, hi_all = candidate_cuts(index)
    intervals, penalties = {}, {}
    weights = np.empty(ids.size, dtype=float)
    ok = np.zeros(ids.size, dtype=bool)
    base = parallel / 2 * group.max_length
    for k, p in enumerate(ids.tolist()):
        rows = index.rows_for(p)
        lo, hi = lo_all[rows], hi_all[rows]
        alive = not index.truncated[p] and not np.any(lo < 0) and feas.feasible(lo, hi, index.seq_len)
        if alive:
            pen = float(sum(collision_penalty(int(a), int(b), group) for a, b in zip(lo, hi)))
            intervals[p] = (lo, hi)
            penalties[p] = pen
            weights[k] = base - pen
            ok[k] = True
        else:
            penalties[p] = float("inf")
            weights[k] = float("-inf")
    adj: dict[int, set[int]] = {int(p): set() for p in ids}
    if intervals:
        if feas.gap is None:
            pairs = _all_pairs(list(intervals))
        else:
            owners = np.concatenate([np.full(v[0].size, p, dtype=np.int64) for p, v in intervals.items()])
            lo = np.concatenate([v[0] for v in intervals.values()])
            hi = np.concatenate([v[1] for v in intervals.values()])
            order = np.argsort(lo, kind="stable")
            raw = _candidate_pairs(lo[order], hi[order], owners[order], feas.gap + 2)
            pairs = np.unique(raw, axis=0) if raw.size else raw
        for a, b in pairs:
            a, b = int(a), int(b)
            la, ha = intervals[a]
            lb, hb = intervals[b]
            if feas.gap is None:
                clash = not feas.feasible(np.concatenate([la, lb]), np.concatenate([ha, hb]), index.seq_len)
            else:
                clash = _pair_conflict(la, ha, lb, hb, feas.steps, feas.gap, feas.reach)
            if clash:
                adj[a].add(b)
                adj[b].add(a)
    return ConflictGraph(ids, weights, counts_all[ids], ok, adj, intervals, penalties, group)


def _all_pairs(ids):
    ids = sorted(ids)
    return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]

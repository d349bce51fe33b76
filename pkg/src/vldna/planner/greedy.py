"""Primer recovery: the ascending-key greedy and an exhaustive small-graph oracle."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from ..errors import Infeasible, TooLarge
from .compose import CutPlan, Feasibility, compose_units
from .graph import ConflictGraph

ORDERS = ("by_collisions", "by_conflicts")
MWIS_LIMIT = 24


@dataclass
class RecoveryPlan:
    recovered: list[int]
    abandoned: list[int]
    cut_points: list[int]
    order: str = "by_collisions"
    penalties: dict[int, float] = field(default_factory=dict)
    plan: CutPlan | None = None

    @property
    def untouched(self) -> list[int]:
        return []

    def weight(self, graph: ConflictGraph) -> float:
        return sum(graph.weight(p) for p in self.recovered)

    def to_text(self) -> str:
        """Plain report: recovered, abandoned, cut points, per-primer penalty."""
        lines = [f"order {self.order}",
                 "recovered " + " ".join(map(str, self.recovered)),
                 "abandoned " + " ".join(map(str, self.abandoned)),
                 "cut_points " + " ".join(map(str, self.cut_points)),
                 "penalty"]
        for p in sorted(self.penalties):
            v = self.penalties[p]
            lines.append(f"{p} {'inf' if v == float('inf') else int(v)}")
        return "\n".join(lines) + "\n"


def _order_key(graph: ConflictGraph, order: str):
    if order in ("by_collisions", "collisions"):
        return {int(p): int(c) for p, c in zip(graph.ids, graph.counts)}
    if order in ("by_conflicts", "conflicts"):
        return {int(p): graph.degree(int(p)) for p in graph.ids}
    raise ValueError(f"unknown order {order!r}")


class _Recovered:
    """Unit intervals of the recovered primers' collisions, kept sorted by lo."""

    def __init__(self, feas: Feasibility, seq_len: int):
        self.feas = feas
        self.seq_len = seq_len
        self.lo: list[int] = []
        self.hi: list[int] = []

    def _stretch(self, lo: np.ndarray, hi: np.ndarray):
        """Recovered intervals chained to the new ones by gaps below the cluster gap."""
        gap = self.feas.gap
        picked = set()
        for a, b in zip(lo.tolist(), hi.tolist()):
            left, right = a - gap, b + gap
            i = bisect.bisect_left(self.lo, left - 2)
            # extend to the left through chained recovered intervals
            while i > 0 and self.hi[i - 1] > left - gap:
                i -= 1
                left = min(left, self.lo[i] - gap)
            j = i
            while j < len(self.lo) and self.lo[j] < right:
                if j not in picked:
                    picked.add(j)
                right = max(right, self.hi[j] + gap)
                j += 1
            for t in range(i, j):
                picked.add(t)
        idx = sorted(picked)
        return (np.array([self.lo[t] for t in idx], dtype=np.int64),
                np.array([self.hi[t] for t in idx], dtype=np.int64))

    def accepts(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        if self.feas.gap is None:
            return self.feas.feasible(np.concatenate([self.lo, lo]).astype(np.int64),
                                      np.concatenate([self.hi, hi]).astype(np.int64), self.seq_len)
        rlo, rhi = self._stretch(lo, hi)
        return self.feas.feasible(np.concatenate([rlo, lo]), np.concatenate([rhi, hi]), self.seq_len)

    def add(self, lo: np.ndarray, hi: np.ndarray) -> None:
        for a, b in zip(lo.tolist(), hi.tolist()):
            i = bisect.bisect_right(self.lo, a)
            self.lo.insert(i, a)
            self.hi.insert(i, b)


def vl_dna(index, graph: ConflictGraph, order: str = "by_collisions") -> RecoveryPlan:
    """Greedy recovery in ascending key order (ties by primer id).

    Each still-pending primer whose cuts compose with those already
    recovered is recovered and its neighbours abandoned; otherwise it is
    abandoned.  With ``index=None`` only the graph is consulted.
    """
    key = _order_key(graph, order)
    pending = set(key)
    recovered: list[int] = []
    abandoned: list[int] = []
    state = None
    if index is not None:
        state = _Recovered(Feasibility(graph.group), index.seq_len)
    for p in sorted(key, key=lambda q: (key[q], q)):
        if p not in pending:
            continue
        pending.discard(p)
        if not graph.is_recoverable(p):
            abandoned.append(p)
            continue
        if state is not None and p in graph.intervals:
            lo, hi = graph.intervals[p]
            if not state.accepts(lo, hi):
                abandoned.append(p)
                continue
            state.add(lo, hi)
        recovered.append(p)
        for q in sorted(graph.edges_alive[p] & pending):
            pending.discard(q)
            abandoned.append(q)
    cut_points: list[int] = []
    plan = None
    if index is not None:
        lo = np.array(state.lo, dtype=np.int64)
        hi = np.array(state.hi, dtype=np.int64)
        try:
            plan = compose_units(index.seq_len, lo, hi, graph.group)
        except Infeasible:
            # unreachable when every acceptance check above passed
            raise
        cut_points = list(plan.cut_points)
    penalties = {p: graph.penalties.get(p, 0.0) for p in recovered}
    return RecoveryPlan(sorted(recovered), sorted(abandoned), cut_points,
                        order=order, penalties=penalties, plan=plan)


def mwis_exact(graph: ConflictGraph) -> tuple[set[int], float]:
    """Maximum-weight independent set by exhaustive branching (test oracle only)."""
    n = len(graph)
    if n > MWIS_LIMIT:
        raise TooLarge(f"{n} vertices exceed the exact solver's limit of {MWIS_LIMIT}")
    ids = [int(p) for p in graph.ids]
    w = [float(x) for x in graph.weights]
    nb = [0] * n
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            if i != j and graph.has_edge(a, b):
                nb[i] |= 1 << j
    best_w, best_mask = 0.0, 0

    def branch(avail: int, mask: int, acc: float):
        nonlocal best_w, best_mask
        if avail == 0:
            if acc > best_w:
                best_w, best_mask = acc, mask
            return
        bound = acc + sum(w[i] for i in range(n) if avail >> i & 1 and w[i] > 0)
        if bound <= best_w:
            return
        v = (avail & -avail).bit_length() - 1
        rest = avail & ~(1 << v)
        if w[v] > 0:
            branch(rest & ~nb[v], mask | 1 << v, acc + w[v])
        branch(rest, mask, acc)

    branch((1 << n) - 1, 0, 0.0)
    return {ids[i] for i in range(n) if best_mask >> i & 1}, best_w

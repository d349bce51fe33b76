"""Length-group arithmetic: reachable cut offsets, coverage, strand counts."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..seqcore import DEFAULT_GROUP, LengthGroup

SAFE_FRAGMENT = 12

# the thirteen groups compared in the length-group table, default first
TABLE1_GROUPS = [
    LengthGroup(g) for g in (
        (150, 160, 190, 200),
        (150, 160, 180, 200),
        (150, 170, 190, 200),
        (150, 170, 180, 200),
        (150, 180, 190, 200),
        (160, 170, 180, 200),
        (160, 170, 190, 200),
        (160, 180, 190, 200),
        (170, 180, 190, 200),
        (160, 170, 180, 190, 200),
        (150, 160, 170, 180, 190, 200),
        (100, 130, 160, 200),
        (100, 140, 170, 200),
    )
]


def reachable_mask(group: LengthGroup, horizon: int) -> np.ndarray:
    """Boolean array over units of 10 bases: ``mask[u]`` iff offset 10*u is a
    sum of one or more group lengths.  Index 0 is False."""
    n = horizon // 10
    mask = np.zeros(n + 1, dtype=bool)
    steps = [L // 10 for L in group.lengths]
    reach = np.zeros(n + 1, dtype=bool)
    reach[0] = True
    for u in range(1, n + 1):
        for s in steps:
            if s <= u and reach[u - s]:
                reach[u] = True
                break
    mask[1:] = reach[1:]
    return mask


def reachable_offsets(group: LengthGroup = DEFAULT_GROUP, horizon: int = 1000) -> set[int]:
    """Every offset <= horizon expressible as a sum of group lengths (reuse allowed)."""
    if horizon < group.max_length:
        raise ValueError("horizon must be at least the group's max length")
    return {10 * int(u) for u in np.flatnonzero(reachable_mask(group, horizon))}


@lru_cache(maxsize=64)
def full_coverage_threshold(group: LengthGroup) -> int | None:
    """Smallest offset T such that every multiple of 10 >= T is reachable, or None."""
    steps = [L // 10 for L in group.lengths]
    if np.gcd.reduce(steps) != 1:
        return None
    # a run of min-length consecutive reachable units means everything later is reachable
    span = max(steps) * 50 + 10
    mask = reachable_mask(group, span * 10)
    run = 0
    for u in range(1, mask.size):
        run = run + 1 if mask[u] else 0
        if run >= min(steps):
            return 10 * (u - run + 1)
    return None


@lru_cache(maxsize=64)
def min_strands_table(group: LengthGroup, horizon: int) -> np.ndarray:
    """``table[u]``: fewest group lengths summing to 10*u (large sentinel if none)."""
    n = horizon // 10
    big = np.iinfo(np.int64).max // 4
    best = np.full(n + 1, big, dtype=np.int64)
    best[0] = 0
    steps = [L // 10 for L in group.lengths]
    for u in range(1, n + 1):
        for s in steps:
            if s <= u and best[u - s] + 1 < best[u]:
                best[u] = best[u - s] + 1
    best.setflags(write=False)
    return best


def covered_bases(group: LengthGroup = DEFAULT_GROUP, horizon: int = 10_000) -> int:
    """Positions b in [0, horizon) with a reachable cut at most 12 bases at or
    before b and another at most 12 bases after it.  Offset 0 (the payload
    start) counts as a cut."""
    if horizon < 450:
        raise ValueError("horizon must be at least 450")
    mask = reachable_mask(group, horizon + SAFE_FRAGMENT + 10)
    cuts = np.flatnonzero(mask) * 10
    cuts = np.concatenate([[0], cuts])
    b = np.arange(horizon)
    # nearest cut x <= b and nearest cut y > b
    i = np.searchsorted(cuts, b, side="right")
    x = cuts[i - 1]
    has_y = i < cuts.size
    y = np.where(has_y, cuts[np.minimum(i, cuts.size - 1)], np.iinfo(np.int64).max)
    ok = (b - x <= SAFE_FRAGMENT) & has_y & (y - b <= SAFE_FRAGMENT)
    return int(ok.sum())


@dataclass(frozen=True)
class GroupAnalysis:
    group: LengthGroup
    horizon: int
    reachable_offsets: frozenset
    covered_bases: int
    threshold: int | None


def analyze_group(group: LengthGroup, horizon: int = 10_000) -> GroupAnalysis:
    return GroupAnalysis(group, horizon, frozenset(reachable_offsets(group, horizon)),
                         covered_bases(group, horizon), full_coverage_threshold(group))


@lru_cache(maxsize=4096)
def phase_penalty(group: LengthGroup, phase: int) -> int | None:
    """Fewest bases lost by detouring from the max-length grid to reach ``phase``.

    A cut at grid phase r (offset r past a max-length boundary) is reached
    from some grid point r + k*max back using the fewest strands n; the loss
    is ``n*max - distance``.  None when no multiple-of-10 route exists.
    """
    top = group.max_length
    if phase % 10:
        return None
    if phase % top == 0:
        return 0
    best = None
    horizon = top * 12
    table = min_strands_table(group, horizon)
    d = phase % top
    while d <= horizon:
        n = table[d // 10]
        if n < len(table):
            loss = int(n) * top - d
            best = loss if best is None else min(best, loss)
        d += top
    return best

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class Collision:
    """A maximal region [start, end) of the sequence that collides with a primer."""

    primer_id: int
    start: int
    end: int
    mismatches_plus_gaps: int = 0

    @property
    def match_len(self) -> int:
        return self.end - self.start


class CollisionIndex:
    """Immutable collision set, sorted by (start, primer_id).

    ``by_primer`` views are CSR slices of a (primer_id, start) ordering;
    ``overlapping(pos)`` answers point queries with a binary search bounded
    by the longest stored collision.
    """

    def __init__(self, primer, start, end, edits, seq_len: int, library_size: int,
                 seq=None, scanner=None, barriers=None, counts=None, truncated=None):
        primer = np.asarray(primer, dtype=np.int32)
        start = np.asarray(start, dtype=np.int64)
        order = np.lexsort((primer, start))
        self.primer = primer[order]
        self.start = start[order]
        self.end = np.asarray(end, dtype=np.int64)[order]
        self.edits = np.asarray(edits, dtype=np.int8)[order]
        for a in (self.primer, self.start, self.end, self.edits):
            a.setflags(write=False)
        self.seq_len = int(seq_len)
        self.library_size = int(library_size)
        self.seq = seq
        self.scanner = scanner
        self.barriers = barriers
        self._max_len = int((self.end - self.start).max()) if self.start.size else 0
        by = np.lexsort((self.start, self.primer))
        self._by_primer = by
        rows = np.bincount(self.primer, minlength=self.library_size) if self.primer.size else \
            np.zeros(self.library_size, dtype=np.int64)
        self._offsets = np.concatenate([[0], np.cumsum(rows)])
        # a pruned scan stores only a prefix of some primers' rows but knows their totals
        self._counts = rows if counts is None else np.asarray(counts, dtype=np.int64)
        self.truncated = np.zeros(self.library_size, dtype=bool) if truncated is None else \
            np.asarray(truncated, dtype=bool)

    def __len__(self) -> int:
        return int(self.start.size)

    def __iter__(self) -> Iterator[Collision]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> Collision:
        return Collision(int(self.primer[i]), int(self.start[i]), int(self.end[i]), int(self.edits[i]))

    def counts(self) -> np.ndarray:
        """Collisions per primer id, length ``library_size``.

        After :meth:`restrict` of a pruned index, truncated primers report a
        lower bound.
        """
        return self._counts

    def pruned_primers(self) -> np.ndarray:
        """Primers whose rows were cut short after an uncuttable region."""
        return np.flatnonzero(self.truncated)

    def collided_primers(self) -> np.ndarray:
        return np.flatnonzero(self.counts())

    def rows_for(self, primer_id: int) -> np.ndarray:
        """Row numbers (into the start-sorted arrays) of one primer's collisions, by start."""
        return self._by_primer[self._offsets[primer_id]:self._offsets[primer_id + 1]]

    def for_primer(self, primer_id: int) -> list[Collision]:
        return [self[i] for i in self.rows_for(primer_id)]

    @property
    def by_primer(self) -> dict[int, list[Collision]]:
        return {int(p): self.for_primer(int(p)) for p in self.collided_primers()}

    def overlapping(self, pos: int) -> list[Collision]:
        hi = int(np.searchsorted(self.start, pos, side="right"))
        lo = int(np.searchsorted(self.start, pos - self._max_len, side="left"))
        return [self[i] for i in range(lo, hi) if self.end[i] > pos]

    def restrict(self, length: int, seq=None) -> "CollisionIndex":
        """Collisions lying entirely inside the prefix [0, length)."""
        keep = self.end <= length
        p = self.primer[keep]
        rows = np.bincount(p, minlength=self.library_size)
        truncated = self.truncated.copy()
        if truncated.any():
            # still truncated only if the stored rows reach past the prefix
            beyond = np.bincount(self.primer[~keep], minlength=self.library_size)
            truncated &= beyond > 0
        counts = rows + truncated
        return CollisionIndex(p, self.start[keep], self.end[keep], self.edits[keep],
                              length, self.library_size, seq=self.seq if seq is None else seq,
                              scanner=self.scanner, barriers=self.barriers, counts=counts,
                              truncated=truncated)

    def as_set(self) -> set[tuple[int, int, int, int]]:
        return set(zip(self.primer.tolist(), self.start.tolist(), self.end.tolist(), self.edits.tolist()))

    def write_csv(self, path) -> None:
        """Dump as ``primer_id,start,end,edits`` sorted by (start, primer_id)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["primer_id", "start", "end", "edits"])
            w.writerows(zip(self.primer.tolist(), self.start.tolist(), self.end.tolist(),
                            self.edits.tolist()))

    @classmethod
    def read_csv(cls, path, seq_len: int, library_size: int) -> "CollisionIndex":
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
        if data.size == 0:
            data = np.zeros((0, 4), dtype=np.int64)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], seq_len, library_size)


@dataclass
class CollisionStats:
    library_size: int
    collided: int
    fraction: float
    mean_per_collided: float
    total: int
    histogram: dict[int, int] = field(default_factory=dict)


def count_statistics(index: CollisionIndex, library_size: int | None = None) -> CollisionStats:
    """Collided-primer count, fraction and the collisions-per-primer histogram.

    The histogram maps a collision count to the number of library primers
    with exactly that many collisions (bucket 0 included).
    """
    n = index.library_size if library_size is None else library_size
    counts = np.zeros(n, dtype=np.int64)
    c = index.counts()
    counts[: min(n, c.size)] = c[:n]
    collided = int((counts > 0).sum())
    total = int(counts.sum())
    values, freq = np.unique(counts, return_counts=True)
    return CollisionStats(
        library_size=n,
        collided=collided,
        fraction=collided / n if n else 0.0,
        mean_per_collided=total / collided if collided else 0.0,
        total=total,
        histogram={int(v): int(f) for v, f in zip(values, freq)},
    )

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import OutOfRange
from ..seqcore import DnaSequence
from . import kernels
from .index import Collision, CollisionIndex


@dataclass(frozen=True)
class CollisionRule:
    """A window of ``min_len`` bases collides when within ``max_edits`` edits of a primer substring."""

    min_len: int = 13
    max_edits: int = 2
    orientation: str = "both"

    def __post_init__(self):
        if self.orientation not in ("fwd", "both"):
            raise ValueError("orientation must be 'fwd' or 'both'")
        if not 1 <= self.min_len <= 31:
            raise ValueError("min_len must be in 1..31")

    @property
    def safe_len(self) -> int:
        """Longest fragment that can never hold a collision."""
        return self.min_len - 1


DEFAULT_RULE = CollisionRule()
VERIFY_FLANK = 32
# libraries with this many oriented primers get a table addressed directly by code
DENSE_MIN_TEXTS = 256
_CACHE: dict[tuple, "Scanner"] = {}


def _cache_dir() -> Path | None:
    root = os.environ.get("VLDNA_CACHE_DIR")
    if root == "":
        return None
    return Path(root) if root else Path.home() / ".cache" / "vldna"


def library_digest(library: Sequence) -> str:
    return hashlib.sha1("\n".join(str(p.seq) for p in library).encode()).hexdigest()


class Scanner:
    """Primer-library neighbourhood index plus the scanning entry points."""

    def __init__(self, library: Sequence, rule: CollisionRule = DEFAULT_RULE, cache: bool = True):
        self.library = list(library)
        self.rule = rule
        m, k = rule.min_len, rule.max_edits
        if k > 3:
            raise ValueError("max_edits above 3 is not supported")
        texts, owners = [], []
        for i, p in enumerate(self.library):
            codes = np.asarray(p.seq.codes, dtype=np.uint8)
            texts.append(codes)
            owners.append(i)
            if rule.orientation == "both":
                texts.append((3 - codes[::-1]).astype(np.uint8))
                owners.append(i)
        width = max((t.size for t in texts), default=0)
        if any(t.size != width for t in texts):
            raise ValueError("all primers must have the same length")
        self.keys = np.zeros(0, dtype=np.int64)
        dense = len(texts) >= DENSE_MIN_TEXTS and m <= 14
        path = None
        if dense and cache and _cache_dir() is not None:
            tag = f"{library_digest(self.library)}-{m}-{k}-{rule.orientation}"
            path = _cache_dir() / f"index-{tag}.npz"
            if path.exists():
                with np.load(path) as z:
                    self.offsets, self.ent, self.shift = z["offsets"], z["ent"], 0
                return
        if dense:
            self.offsets, self.ent = kernels.build_dense(
                np.stack(texts), np.array(owners, dtype=np.int32), m, k, kernels.scratch(m))
            self.shift = 0
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp.npz")
                np.savez(tmp, offsets=self.offsets, ent=self.ent)
                os.replace(tmp, path)
            return
        if texts:
            codes, own, dist = kernels.build_entries(np.stack(texts), np.array(owners, dtype=np.int32), m, k,
                                                    kernels.scratch(m))
        else:
            codes, own, dist = (np.zeros(0, np.int64), np.zeros(0, np.int32), np.zeros(0, np.int8))
        # one entry per (code, primer): keep the smaller distance of the two orientations
        order = np.lexsort((dist, own, codes))
        codes, own, dist = codes[order], own[order], dist[order]
        first = np.ones(codes.size, dtype=bool)
        first[1:] = (codes[1:] != codes[:-1]) | (own[1:] != own[:-1])
        self.keys = codes[first]
        self.ent = (own[first].astype(np.int32) << 2) | dist[first].astype(np.int32)
        bits = 2 * m
        pbits = int(min(bits, max(4, np.ceil(np.log2(max(self.keys.size, 1))))))
        self.shift = bits - pbits
        buckets = self.keys >> self.shift
        self.offsets = np.searchsorted(buckets, np.arange((1 << pbits) + 1)).astype(np.int64)
        if self.keys.size == 0:
            # an empty keys array means "dense" to the kernels; keep one unmatchable key
            self.keys = np.array([-1], dtype=np.int64)
            self.ent = np.zeros(1, dtype=np.int32)
            self.offsets = np.zeros((1 << pbits) + 1, dtype=np.int64)

    @classmethod
    def cached(cls, library: Sequence, rule: CollisionRule = DEFAULT_RULE) -> "Scanner":
        key = (library_digest(library), rule)
        if key not in _CACHE:
            if len(_CACHE) > 8:
                _CACHE.clear()
            _CACHE[key] = cls(library, rule)
        return _CACHE[key]

    @property
    def neighbourhood_size(self) -> int:
        return int(self.ent.size)

    def _jobs(self, nwin: int, chunk: int):
        bounds = list(range(0, nwin, chunk)) + [nwin]
        return list(zip(bounds[:-1], bounds[1:]))

    def _run_jobs(self, codes, barriers, jobs, workers):
        m, n = self.rule.min_len, len(self.library)

        def run(job):
            lo, hi = job
            return kernels.scan_range(codes, lo, hi, m, self.shift, self.offsets, self.keys,
                                      self.ent, n, barriers)

        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(workers) as pool:
                yield from pool.map(run, jobs)
        else:
            for j in jobs:
                yield run(j)

    def _scan_arrays(self, codes: np.ndarray, barriers: np.ndarray, workers: int, chunk: int):
        m = self.rule.min_len
        nwin = codes.size - m + 1
        if nwin <= 0 or not self.library:
            empty = np.zeros(0, np.int64)
            return empty.astype(np.int32), empty, empty, empty.astype(np.int8)
        parts = list(self._run_jobs(codes, barriers, self._jobs(nwin, chunk), workers))
        p = np.concatenate([x[0] for x in parts])
        s = np.concatenate([x[1] for x in parts])
        e = np.concatenate([x[2] for x in parts])
        d = np.concatenate([x[3] for x in parts])
        if len(parts) > 1:
            p, s, e, d = _merge(p, s, e, d)
        return p, s, e, d

    def _scan_pruned(self, codes: np.ndarray, barriers: np.ndarray, workers: int, chunk: int,
                     store: bool = True, lo: int = 0):
        """Like :meth:`_scan_arrays` but forgets a primer's collisions after its
        first region that no cut can break (or all of them, without ``store``).
        Returns exact per-primer counts and the mask of primers whose rows
        were dropped.  Windows start at ``lo`` or later."""
        m, n = self.rule.min_len, len(self.library)
        nwin = codes.size - m + 1
        counts = np.zeros(n, dtype=np.int64)
        death = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        if nwin <= 0 or n == 0:
            empty = np.zeros(0, np.int64)
            return empty.astype(np.int32), empty, empty, empty.astype(np.int8), counts, counts > 0
        kept = []
        jobs = [(a + lo, b + lo) for a, b in self._jobs(nwin - lo, chunk)]
        first = jobs[0][0] if jobs else 0
        for (a, b), (p, s, e, d) in zip(jobs, self._run_jobs(codes, barriers, jobs, workers)):
            # rows that cannot merge with a neighbouring chunk are final
            final = ((s >= a + m - 1) | (a == first)) & ((e <= b) | (b == nwin))
            counts += np.bincount(p[final], minlength=n)
            bad = final & ~kernels.cuttable(s, e, m)
            if bad.any():
                np.minimum.at(death, p[bad], s[bad])
            keep = ~final | ((s <= death[p]) & store)
            kept.append((p[keep], s[keep], e[keep], d[keep], final[keep]))
        p, s, e, d, final = (np.concatenate([x[i] for x in kept]) for i in range(5))
        order = np.lexsort((s, p))
        p, s, e, d, final = p[order], s[order], e[order], d[order], final[order]
        keep, e2, d2 = kernels.merge_sorted(p, s, e, d)
        p, s, e, d, final = p[keep], s[keep], e2[keep], d2[keep], final[keep]
        counts += np.bincount(p[~final], minlength=n)
        bad = ~kernels.cuttable(s, e, m)
        if bad.any():
            np.minimum.at(death, p[bad], s[bad])
        keep = (s <= death[p]) & store
        p, s, e, d = p[keep], s[keep], e[keep], d[keep]
        truncated = counts > np.bincount(p, minlength=n)
        return p, s, e, d, counts, truncated

    def count(self, seq: DnaSequence, cuts=None, workers: int = 1, chunk: int = 1 << 22) -> CollisionIndex:
        """Per-primer collision counts only; the returned index stores no rows."""
        seq = DnaSequence(seq)
        codes = np.ascontiguousarray(seq.codes)
        barriers = np.unique(np.asarray(cuts if cuts is not None else [], dtype=np.int64))
        p, s, e, d, counts, truncated = self._scan_pruned(codes, barriers, workers, chunk, store=False)
        return CollisionIndex(p, s, e, d, len(seq), len(self.library), scanner=self,
                              barriers=barriers, counts=counts, truncated=truncated)

    def rows_hit(self, codes: np.ndarray, width: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """(row, primer) pairs with a collision inside fixed-width payload rows.

        Scans windows of ``codes`` starting in [lo, hi) with a barrier at every
        multiple of ``width``; pairs are unique.  Also returns per-primer
        region counts for the range.
        """
        m, n = self.rule.min_len, len(self.library)
        hi = min(hi, codes.size - m + 1)
        first = (lo // width + 1) * width
        barriers = np.arange(first, hi + m, width, dtype=np.int64)
        if hi <= lo:
            return np.zeros(0, np.int64), np.zeros(n, np.int64)
        p, s, _, _ = kernels.scan_range(codes, lo, hi, m, self.shift, self.offsets, self.keys,
                                        self.ent, n, barriers)
        counts = np.bincount(p, minlength=n)
        keys = np.unique((s // width) * n + p)
        return keys, counts

    def scan(self, seq: DnaSequence, cuts=None, workers: int = 1, chunk: int = 1 << 22,
             prune: bool = False) -> CollisionIndex:
        """Every maximal collision region in ``seq``.

        ``cuts`` are payload boundaries: windows spanning one are ignored, as
        the bases on either side live on different molecules.  With ``prune``
        a primer's regions after its first uncuttable one are dropped (its
        count stays exact); planning only needs that first one.
        """
        seq = DnaSequence(seq)
        codes = np.ascontiguousarray(seq.codes)
        barriers = np.unique(np.asarray(cuts if cuts is not None else [], dtype=np.int64))
        if prune:
            p, s, e, d, counts, truncated = self._scan_pruned(codes, barriers, workers, chunk)
            return CollisionIndex(p, s, e, d, len(seq), len(self.library), seq=seq, scanner=self,
                                  barriers=barriers, counts=counts, truncated=truncated)
        p, s, e, d = self._scan_arrays(codes, barriers, workers, chunk)
        return CollisionIndex(p, s, e, d, len(seq), len(self.library), seq=seq, scanner=self,
                              barriers=barriers)

    def primers_hit_per_row(self, rows: np.ndarray) -> list[np.ndarray]:
        """For a 2-D array of equal-length payloads, the collided primer ids of each row."""
        rows = np.ascontiguousarray(rows, dtype=np.uint8)
        nrow, width = rows.shape
        cuts = np.arange(width, nrow * width, width, dtype=np.int64)
        p, s, _, _ = self._scan_arrays(rows.reshape(-1), cuts, 1, 1 << 22)
        which = s // width
        order = np.lexsort((p, which))
        which, p = which[order], p[order]
        split = np.searchsorted(which, np.arange(nrow + 1))
        return [np.unique(p[split[i]:split[i + 1]]) for i in range(nrow)]

    def verify_cuts(self, seq: DnaSequence, primers, starts, ends, cuts, seg_lo=None, seg_hi=None):
        """Vectorised :meth:`verify_cut` without the range checks."""
        codes = np.ascontiguousarray(DnaSequence(seq).codes)
        cuts = np.asarray(cuts, dtype=np.int64)
        n = cuts.size
        seg_lo = np.zeros(n, np.int64) if seg_lo is None else np.asarray(seg_lo, dtype=np.int64)
        seg_hi = np.full(n, codes.size, np.int64) if seg_hi is None else np.asarray(seg_hi, dtype=np.int64)
        return kernels.verify_batch(codes, np.asarray(primers, dtype=np.int32), np.asarray(starts, np.int64),
                                    np.asarray(ends, np.int64), cuts, self.rule.min_len, VERIFY_FLANK,
                                    seg_lo, seg_hi, self.shift, self.offsets, self.keys, self.ent)

    def verify_cut(self, seq: DnaSequence, c: Collision, cut: int, seg_lo: int = 0,
                   seg_hi: int | None = None) -> bool:
        """Does a payload boundary at ``cut`` destroy collision ``c``?

        Both pieces must be at most ``min_len - 1`` bases, and re-scanning the
        32 bases on each side of the cut (clipped to [seg_lo, seg_hi)) must
        find nothing for the primer.
        """
        if not c.start < cut < c.end:
            raise OutOfRange(f"cut {cut} is not inside collision [{c.start}, {c.end})")
        if cut % 10:
            raise OutOfRange(f"cut {cut} is not a multiple of 10")
        seq = DnaSequence(seq)
        hi = len(seq) if seg_hi is None else seg_hi
        return bool(self.verify_cuts(seq, [c.primer_id], [c.start], [c.end], [cut], [seg_lo], [hi])[0])


def _merge(p, s, e, d):
    order = np.lexsort((s, p))
    p, s, e, d = p[order], s[order], e[order], d[order]
    keep, e2, d2 = kernels.merge_sorted(p, s, e, d)
    return p[keep], s[keep], e2[keep], d2[keep]


def scan(seq: DnaSequence, library: Sequence, rule: CollisionRule = DEFAULT_RULE, cuts=None,
         workers: int = 1) -> CollisionIndex:
    return Scanner.cached(library, rule).scan(seq, cuts=cuts, workers=workers)


def verify_cut(seq: DnaSequence, c: Collision, cut: int, library: Sequence,
               rule: CollisionRule = DEFAULT_RULE) -> bool:
    return Scanner.cached(library, rule).verify_cut(seq, c, cut)

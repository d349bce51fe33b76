"""numba kernels behind the collision scanner.

A sequence window of ``m`` bases collides with an oriented primer ``t`` when
the approximate-substring distance (free start and end inside ``t``)
between the window and ``t`` is at most ``k``.  Rather than aligning every
window, the neighbourhood of each primer -- all m-mers within distance k --
is enumerated once.  An m-mer at distance d from ``t`` is d single-base
edits away from some substring of length m-d..m+d, so applying every edit
sequence of length <= k to every such substring and keeping the fewest
edits per m-mer gives the neighbourhood with exact distances.
``neighbourhood_dfs`` (a pruned walk over m-mer prefixes carrying one DP row
per depth) computes the same thing more slowly and is kept as a check.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _edits(src, lens, nsrc, width, m, remaining, out, olen):
    """Single-edit variants of ``src[:nsrc]`` whose length can still reach
    ``m`` with ``remaining`` further edits, written to ``out``; returns the count."""
    n = 0
    for r in range(nsrc):
        L = lens[r]
        s = src[r]
        if abs(L - m) <= remaining:
            for i in range(L):
                for b in range(4):
                    if b != s[i]:
                        out[n, :L] = s[:L]
                        out[n, i] = b
                        olen[n] = L
                        n += 1
        if abs(L + 1 - m) <= remaining and L + 1 <= width:
            for i in range(L + 1):
                for b in range(4):
                    out[n, :i] = s[:i]
                    out[n, i] = b
                    out[n, i + 1:L + 1] = s[i:L]
                    olen[n] = L + 1
                    n += 1
        if abs(L - 1 - m) <= remaining and L >= 1:
            for i in range(L):
                out[n, :i] = s[:i]
                out[n, i:L - 1] = s[i + 1:L]
                olen[n] = L - 1
                n += 1
    return n


@numba.njit(cache=True, nogil=True, inline="always")
def _put(c, d, best, seen, count):
    if d < best[c]:
        if best[c] == NONE:
            seen[count] = c
            count += 1
        best[c] = d
    return count


@numba.njit(cache=True, nogil=True)
def _final(v, L, m, e, more, pow4, pre, suf, best, seen, count):
    """Record ``v`` at distance ``e`` if it has length m and, with ``more``,
    each of its single-edit variants of length m at distance ``e + 1``."""
    pre[0] = 0
    for i in range(L):
        pre[i + 1] = pre[i] * 4 + v[i]
    suf[L] = 0
    for i in range(L - 1, -1, -1):
        suf[i] = v[i] * pow4[L - 1 - i] + suf[i + 1]
    if L == m:
        count = _put(pre[L], e, best, seen, count)
    if not more:
        return count
    e += 1
    if L == m:
        for i in range(L):
            head = pre[i] * pow4[m - i] + suf[i + 1]
            for b in range(4):
                if b != v[i]:
                    count = _put(head + b * pow4[m - 1 - i], e, best, seen, count)
    elif L == m - 1:
        for i in range(L + 1):
            head = pre[i] * pow4[m - i] + suf[i]
            for b in range(4):
                count = _put(head + b * pow4[m - 1 - i], e, best, seen, count)
    elif L == m + 1:
        for i in range(L):
            count = _put(pre[i] * pow4[m - i] + suf[i + 1], e, best, seen, count)
    return count


NONE = 255
TABLE_MAX_M = 14


@numba.njit(cache=True, nogil=True)
def _neighbourhood(text, m, k, best):
    """Edit enumeration; ``best`` is a 4**m scratch table of NONE, restored on return."""
    n = text.size
    width = m + k
    pow4 = np.empty(width + 2, dtype=np.int64)
    pow4[0] = 1
    for i in range(1, width + 2):
        pow4[i] = pow4[i - 1] * 4
    pre = np.empty(width + 2, dtype=np.int64)
    suf = np.empty(width + 2, dtype=np.int64)
    per = 8 * width + 4
    # level e holds the strings after e edits; the last edit is applied by _final
    caps = [1]
    for e in range(1, max(k, 1)):
        caps.append(caps[-1] * per)
    bufs = [np.empty((c, width), dtype=np.uint8) for c in caps]
    blens = [np.empty(c, dtype=np.int64) for c in caps]
    cnt = np.zeros(len(caps), dtype=np.int64)
    # distinct m-mers within distance k of a text of length n
    bound = (n + 1) * (2 * k + 1)
    for _ in range(k):
        bound *= per
    seen = np.empty(min(bound, 1 << (2 * m)), dtype=np.int64)
    count = 0
    for L in range(max(1, m - k), m + k + 1):
        for i in range(0, n - L + 1):
            bufs[0][0, :L] = text[i:i + L]
            blens[0][0] = L
            cnt[0] = 1
            for e in range(1, k):
                cnt[e] = _edits(bufs[e - 1], blens[e - 1], cnt[e - 1], width, m, k - e, bufs[e], blens[e])
            for e in range(max(k, 1)):
                for r in range(cnt[e]):
                    count = _final(bufs[e][r], blens[e][r], m, e, e == k - 1, pow4, pre, suf,
                                   best, seen, count)
    codes = seen[:count].copy()
    dist = np.empty(count, dtype=np.int8)
    for j in range(count):
        dist[j] = best[codes[j]]
        best[codes[j]] = NONE
    return codes, dist


def scratch(m):
    """Scratch table for :func:`_neighbourhood` (a dummy when m is too large)."""
    return np.full(1 << (2 * m) if m <= TABLE_MAX_M else 1, NONE, dtype=np.uint8)


@numba.njit(cache=True, nogil=True)
def _any_neighbourhood(text, m, k, best):
    if m > TABLE_MAX_M:
        return neighbourhood_dfs(text, m, k)
    return _neighbourhood(text, m, k, best)


def neighbourhood(text, m, k):
    """All m-mer codes within distance ``k`` of a substring of ``text``.

    Returns ``(codes, dist)`` in no particular order; codes are base-4
    big-endian integers.
    """
    return _any_neighbourhood(np.ascontiguousarray(text, dtype=np.uint8), m, k, scratch(m))


@numba.njit(cache=True, nogil=True)
def neighbourhood_dfs(text, m, k):
    """Same result as :func:`neighbourhood`, in DFS order."""
    n = text.size
    rows = np.empty((m + 1, n + 1), dtype=np.int32)
    rows[0, :] = 0
    choice = np.zeros(m + 1, dtype=np.int64)
    prefix = np.zeros(m + 1, dtype=np.int64)
    cap = 1024
    codes = np.empty(cap, dtype=np.int64)
    dist = np.empty(cap, dtype=np.int8)
    count = 0
    depth = 0
    choice[0] = 0
    while depth >= 0:
        c = choice[depth]
        if c == 4:
            depth -= 1
            if depth >= 0:
                choice[depth] += 1
            continue
        d1 = depth + 1
        rows[d1, 0] = d1
        best = d1
        for j in range(1, n + 1):
            v = rows[depth, j - 1] + (0 if text[j - 1] == c else 1)
            w = rows[depth, j] + 1
            if w < v:
                v = w
            w = rows[d1, j - 1] + 1
            if w < v:
                v = w
            rows[d1, j] = v
            if v < best:
                best = v
        if best > k:
            choice[depth] += 1
            continue
        code = prefix[depth] * 4 + c
        if d1 == m:
            if count == cap:
                cap *= 2
                nc = np.empty(cap, dtype=np.int64)
                nd = np.empty(cap, dtype=np.int8)
                nc[:count] = codes[:count]
                nd[:count] = dist[:count]
                codes, dist = nc, nd
            codes[count] = code
            dist[count] = best
            count += 1
            choice[depth] += 1
        else:
            prefix[d1] = code
            choice[d1] = 0
            depth = d1
    return codes[:count], dist[:count]


@numba.njit(cache=True, nogil=True)
def build_entries(texts, owners, m, k, best):
    """Neighbourhoods of all oriented primers as parallel arrays (code, owner, dist)."""
    total = 0
    parts_c = []
    parts_d = []
    for i in range(texts.shape[0]):
        c, d = _any_neighbourhood(texts[i], m, k, best)
        parts_c.append(c)
        parts_d.append(d)
        total += c.size
    codes = np.empty(total, dtype=np.int64)
    own = np.empty(total, dtype=np.int32)
    dist = np.empty(total, dtype=np.int8)
    pos = 0
    for i in range(texts.shape[0]):
        c = parts_c[i]
        codes[pos:pos + c.size] = c
        own[pos:pos + c.size] = owners[i]
        dist[pos:pos + c.size] = parts_d[i]
        pos += c.size
    return codes, own, dist


@numba.njit(cache=True, nogil=True)
def build_dense(texts, owners, m, k, best):
    """Counting-sorted neighbourhood table addressed directly by m-mer code.

    Entries of code c are ``ent[offsets[c]:offsets[c+1]]``, each packed as
    ``owner << 2 | dist`` with one entry per (code, owner).  Texts must be
    grouped by owner so duplicates from the two orientations are adjacent.
    """
    ncodes = 1 << (2 * m)
    parts_c = []
    parts_d = []
    for i in range(texts.shape[0]):
        c, d = _any_neighbourhood(texts[i], m, k, best)
        parts_c.append(c.astype(np.int32))
        parts_d.append(d)
    cnt = np.zeros(ncodes + 1, dtype=np.int32)
    for c in parts_c:
        for x in c:
            cnt[x + 1] += 1
    for i in range(1, ncodes + 1):
        cnt[i] += cnt[i - 1]
    ent = np.empty(cnt[ncodes], dtype=np.int32)
    for t in range(len(parts_c)):
        c = parts_c[t]
        d = parts_d[t]
        o = owners[t] << 2
        for j in range(c.size):
            x = c[j]
            ent[cnt[x]] = o | d[j]
            cnt[x] += 1
    for i in range(ncodes, 0, -1):
        cnt[i] = cnt[i - 1]
    cnt[0] = 0
    # drop the duplicate (code, owner) entries, keeping the smaller distance
    w = 0
    for x in range(ncodes):
        lo = cnt[x]
        hi = cnt[x + 1]
        cnt[x] = w
        for j in range(lo, hi):
            if w > cnt[x] and (ent[w - 1] >> 2) == (ent[j] >> 2):
                if (ent[j] & 3) < (ent[w - 1] & 3):
                    ent[w - 1] = ent[j]
            else:
                ent[w] = ent[j]
                w += 1
    cnt[ncodes] = w
    return cnt, ent[:w].copy()


@numba.njit(cache=True, nogil=True, inline="always")
def entry_range(code, shift, offsets, keys):
    """Slice of the entry table holding ``code``; dense tables have no keys."""
    if keys.size == 0:
        return offsets[code], offsets[code + 1]
    b = code >> shift
    lo = offsets[b]
    hi = offsets[b + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < code:
            lo = mid + 1
        else:
            hi = mid
    hi = lo
    end = offsets[b + 1]
    while hi < end and keys[hi] == code:
        hi += 1
    return lo, hi


@numba.njit(cache=True, nogil=True)
def scan_range(codes, w_lo, w_hi, m, shift, offsets, keys, ent, nprimers, barriers):
    """Scan windows starting in [w_lo, w_hi) and merge hits per primer.

    ``barriers`` is a sorted array of cut positions; windows that contain a
    cut strictly inside are skipped.  Returns (primer, start, end, edits).
    """
    open_start = np.full(nprimers, -1, dtype=np.int64)
    open_end = np.zeros(nprimers, dtype=np.int64)
    open_edits = np.zeros(nprimers, dtype=np.int8)
    cap = 1024
    out_p = np.empty(cap, dtype=np.int32)
    out_s = np.empty(cap, dtype=np.int64)
    out_e = np.empty(cap, dtype=np.int64)
    out_d = np.empty(cap, dtype=np.int8)
    count = 0
    mask = (np.int64(1) << (2 * m)) - 1
    code = np.int64(0)
    bi = np.searchsorted(barriers, w_lo + 1)
    # prime rolling code with the first m-1 bases
    for j in range(w_lo, min(w_lo + m - 1, codes.size)):
        code = ((code << 2) | codes[j]) & mask
    for i in range(w_lo, w_hi):
        code = ((code << 2) | codes[i + m - 1]) & mask
        while bi < barriers.size and barriers[bi] <= i:
            bi += 1
        if bi < barriers.size and barriers[bi] < i + m:
            continue
        lo, hi = entry_range(code, shift, offsets, keys)
        for at in range(lo, hi):
            p = ent[at] >> 2
            e = ent[at] & 3
            if open_start[p] >= 0 and open_end[p] > i:
                open_end[p] = i + m
                if e < open_edits[p]:
                    open_edits[p] = e
                continue
            if open_start[p] >= 0:
                if count == cap:
                    cap *= 2
                    out_p2 = np.empty(cap, dtype=np.int32)
                    out_s2 = np.empty(cap, dtype=np.int64)
                    out_e2 = np.empty(cap, dtype=np.int64)
                    out_d2 = np.empty(cap, dtype=np.int8)
                    out_p2[:count] = out_p[:count]
                    out_s2[:count] = out_s[:count]
                    out_e2[:count] = out_e[:count]
                    out_d2[:count] = out_d[:count]
                    out_p, out_s, out_e, out_d = out_p2, out_s2, out_e2, out_d2
                out_p[count] = p
                out_s[count] = open_start[p]
                out_e[count] = open_end[p]
                out_d[count] = open_edits[p]
                count += 1
            open_start[p] = i
            open_end[p] = i + m
            open_edits[p] = e
    extra = 0
    for p in range(nprimers):
        if open_start[p] >= 0:
            extra += 1
    rp = np.empty(count + extra, dtype=np.int32)
    rs = np.empty(count + extra, dtype=np.int64)
    re = np.empty(count + extra, dtype=np.int64)
    rd = np.empty(count + extra, dtype=np.int8)
    rp[:count] = out_p[:count]
    rs[:count] = out_s[:count]
    re[:count] = out_e[:count]
    rd[:count] = out_d[:count]
    for p in range(nprimers):
        if open_start[p] >= 0:
            rp[count] = p
            rs[count] = open_start[p]
            re[count] = open_end[p]
            rd[count] = open_edits[p]
            count += 1
    return rp, rs, re, rd


@numba.njit(cache=True, nogil=True)
def merge_sorted(p, s, e, d):
    """Merge overlapping regions of arrays already sorted by (primer, start)."""
    n = p.size
    keep = np.zeros(n, dtype=np.bool_)
    ends = e.copy()
    eds = d.copy()
    last = -1
    for i in range(n):
        if last >= 0 and p[i] == p[last] and s[i] < ends[last]:
            if e[i] > ends[last]:
                ends[last] = e[i]
            if d[i] < eds[last]:
                eds[last] = d[i]
        else:
            keep[i] = True
            last = i
    return keep, ends, eds


@numba.njit(cache=True, nogil=True)
def primer_hits_in(codes, lo, hi, m, primer, shift, offsets, keys, ent):
    """True when some m-window inside [lo, hi) collides with ``primer``."""
    mask = (np.int64(1) << (2 * m)) - 1
    if hi - lo < m:
        return False
    code = np.int64(0)
    for j in range(lo, lo + m - 1):
        code = ((code << 2) | codes[j]) & mask
    for i in range(lo, hi - m + 1):
        code = ((code << 2) | codes[i + m - 1]) & mask
        a, b = entry_range(code, shift, offsets, keys)
        for at in range(a, b):
            if ent[at] >> 2 == primer:
                return True
    return False


@numba.njit(cache=True, nogil=True)
def verify_batch(codes, primers, starts, ends, cuts, m, flank, seg_lo, seg_hi,
                 shift, offsets, keys, ent):
    """Vectorised cut verification; see ``Scanner.verify_cut``."""
    n = cuts.size
    out = np.zeros(n, dtype=np.bool_)
    for t in range(n):
        c = cuts[t]
        if c - starts[t] > m - 1 or ends[t] - c > m - 1:
            continue
        lo = max(c - flank, seg_lo[t])
        hi = min(c + flank, seg_hi[t])
        if primer_hits_in(codes, lo, c, m, primers[t], shift, offsets, keys, ent):
            continue
        if primer_hits_in(codes, c, hi, m, primers[t], shift, offsets, keys, ent):
            continue
        out[t] = True
    return out


@numba.njit(cache=True, nogil=True)
def cuttable(starts, ends, m):
    """Whether each region admits a multiple-of-10 cut leaving both parts < m."""
    n = starts.size
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        lo = max(starts[i] + 1, ends[i] - (m - 1))
        hi = min(ends[i] - 1, starts[i] + (m - 1))
        c = (lo + 9) // 10 * 10
        out[i] = c <= hi
    return out

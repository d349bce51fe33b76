"""Row-batched payload randomisation.

Each row is the payload ``codes[starts[r]:stops[r]]``; rows with seed 0 are
left alone.  The result matches calling the codec's ``transform_payload``
row by row with :func:`~vldna.codec.randomize.keystream`.
"""

from __future__ import annotations

import numba
import numpy as np

from .blawat import CODEWORD
from .grass import UNIT
from .randomize import GOLDEN, _M1, _M2


def keystream_rows(seeds: np.ndarray, nbytes: int) -> np.ndarray:
    """``out[r]`` equals ``keystream(seeds[r], nbytes)``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    nwords = -(-nbytes // 8)
    with np.errstate(over="ignore"):
        i = np.arange(1, nwords + 1, dtype=np.uint64)
        z = seeds[:, None] + i[None, :] * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return np.ascontiguousarray(z.astype("<u8")).view(np.uint8).reshape(seeds.size, -1)[:, :nbytes]


def payload_seeds(attempt: int, ordinals: np.ndarray) -> np.ndarray:
    """Vectorised :func:`~vldna.codec.randomize.payload_seed`."""
    ords = np.asarray(ordinals, dtype=np.uint64)
    base = np.uint64((attempt << 40) & 0xFFFFFFFFFFFFFFFF)
    return keystream_rows(ords ^ base, 8).copy().view("<u8").reshape(-1)


@numba.njit(cache=True, nogil=True)
def _rotation_rows(src, out, starts, stops, seeds_used, keys, restore):
    for r in range(starts.size):
        if not seeds_used[r]:
            continue
        a, b = starts[r], stops[r]
        # the digit context is the base before the payload in the original stream
        if a == 0:
            prev_in = 0
        elif restore:
            prev_in = out[a - 1]
        else:
            prev_in = src[a - 1]
        p = prev_in
        q = prev_in
        for i in range(a, b):
            c = src[i]
            t = c if c < p else c - 1
            p = c
            d = (keys[r, i - a] % 3 + 3 - t) % 3
            nb = d if d < q else d + 1
            out[i] = nb
            q = nb


@numba.njit(cache=True, nogil=True)
def _blawat_rows(src, out, starts, stops, seeds_used, keys, back, fwd):
    for r in range(starts.size):
        if not seeds_used[r]:
            continue
        a, b = starts[r], stops[r]
        first = (a + 4) // 5 * 5
        last = b // 5 * 5
        k = 0
        for w in range(first, last, 5):
            key = 0
            for j in range(5):
                key = key * 4 + src[w + j]
            v = back[key] ^ keys[r, k]
            k += 1
            for j in range(5):
                out[w + j] = fwd[v, j]


@numba.njit(cache=True, nogil=True)
def _grass_rows(src, out, starts, stops, seeds_used, keys, back, fwd, full):
    for r in range(starts.size):
        if not seeds_used[r]:
            continue
        a, b = starts[r], stops[r]
        first = (a + 8) // 9 * 9
        last = min(b, full) // 9 * 9
        k = 0
        for w in range(first, last, 9):
            v = 0
            for j in range(3):
                c = w + 3 * j
                v = v * 47 + back[src[c] * 16 + src[c + 1] * 4 + src[c + 2]]
            v ^= keys[r, k] * 256 + keys[r, k + 1]
            k += 2
            for j in range(2, -1, -1):
                d = v % 47
                v //= 47
                c = w + 3 * j
                out[c] = fwd[d, 0]
                out[c + 1] = fwd[d, 1]
                out[c + 2] = fwd[d, 2]


def randomize_rows(codec, codes: np.ndarray, starts, stops, seeds, restore: bool = False) -> np.ndarray:
    """Transformed copy of ``codes``; ``restore`` undoes a previous call.

    Rotation digits are taken relative to the original base before each
    payload, so restoring must run rows in order (the kernels do).
    """
    src = np.ascontiguousarray(codes, dtype=np.uint8)
    out = src.copy()
    starts = np.asarray(starts, dtype=np.int64)
    stops = np.asarray(stops, dtype=np.int64)
    seeds = np.asarray(seeds, dtype=np.uint64)
    used = seeds != 0
    if not used.any():
        return out
    width = int((stops - starts).max())
    name = codec.name
    if name == "rotation":
        keys = keystream_rows(seeds, width)
        _rotation_rows(src, out, starts, stops, used, keys, restore)
    elif name == "blawat":
        back = np.full(1024, 0, dtype=np.int64)
        k = (codec._forward.astype(np.int64) * (4 ** np.arange(CODEWORD - 1, -1, -1))).sum(axis=1)
        back[k] = np.arange(256)
        keys = keystream_rows(seeds, width // CODEWORD + 1).astype(np.int64)
        _blawat_rows(src, out, starts, stops, used, keys, back, codec._forward.astype(np.uint8))
    elif name == "grass":
        back = codec._reverse.astype(np.int64)
        keys = keystream_rows(seeds, 2 * (width // UNIT + 1)).astype(np.int64)
        full = src.size // UNIT * UNIT
        _grass_rows(src, out, starts, stops, used, keys, back, codec._forward.astype(np.uint8), full)
    else:
        raise ValueError(f"no batched transform for codec {name!r}")
    return out

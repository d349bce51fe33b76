"""Seeded keystreams for payload randomisation.

The generator is SplitMix64: word ``i`` of the stream for ``seed`` is
``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)`` with

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all modulo 2**64.  Bytes are taken little-endian from consecutive words.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` 64-bit words of the stream for ``seed``."""
    with np.errstate(over="ignore"):
        i = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + i * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def keystream(seed: int, nbytes: int) -> np.ndarray:
    words = splitmix64(seed, -(-nbytes // 8))
    return words.astype("<u8").view(np.uint8)[:nbytes]


def randomize(data: bytes, seed: int) -> bytes:
    """XOR ``data`` with the keystream of ``seed``; applying it twice is the identity."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    return (raw ^ keystream(seed, raw.size)).tobytes()


def payload_seed(seed: int, ordinal: int) -> int:
    """Stream seed for randomisation attempt ``seed`` on payload ``ordinal``.

    Seed 0 is reserved for "not randomised"; callers never ask for its stream.
    """
    return int(splitmix64((seed << 40) ^ ordinal, 1)[0])

"""Rotation code: bytes -> ternary digits -> bases that never repeat.

Each 12-byte block is read as a big-endian integer and expanded into 61
base-3 digits (3**61 > 2**96), least significant digit first.  A short final
block of r bytes uses the fewest digits t with 3**t >= 256**r.  Digit d is
written as the d-th base of ACGT once the previously written base is
removed; the base before the first one is taken to be A.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from ..errors import InvalidCodeword
from ..seqcore import DnaSequence

BLOCK_BYTES = 12
NOMINAL_DENSITY = math.log2(3)


def digits_for(nbytes: int) -> int:
    t = 0
    while 3 ** t < 256 ** nbytes:
        t += 1
    return t


BLOCK_DIGITS = digits_for(BLOCK_BYTES)
_TAIL_DIGITS = np.array([digits_for(r) for r in range(BLOCK_BYTES)], dtype=np.int64)


@numba.njit(cache=True, nogil=True)
def _bytes_to_trits(raw, nbytes, ndig, out, pos):
    # raw: at most 12 bytes; limbs are 32-bit little-endian words of the value
    limbs = np.zeros(3, dtype=np.uint64)
    for i in range(nbytes):
        carry = np.uint64(raw[i])
        for k in range(3):
            cur = limbs[k] * np.uint64(256) + carry
            limbs[k] = cur & np.uint64(0xFFFFFFFF)
            carry = cur >> np.uint64(32)
    for d in range(ndig):
        rem = np.uint64(0)
        for k in range(2, -1, -1):
            cur = (rem << np.uint64(32)) | limbs[k]
            limbs[k] = cur // np.uint64(3)
            rem = cur % np.uint64(3)
        out[pos + d] = rem


@numba.njit(cache=True, nogil=True)
def _encode_kernel(raw, block, tail_digits, block_digits):
    n = raw.size
    nfull = n // block
    r = n - nfull * block
    total = nfull * block_digits + (tail_digits[r] if r else 0)
    trits = np.empty(total, dtype=np.uint8)
    for b in range(nfull):
        _bytes_to_trits(raw[b * block:(b + 1) * block], block, block_digits, trits, b * block_digits)
    if r:
        _bytes_to_trits(raw[nfull * block:], r, tail_digits[r], trits, nfull * block_digits)
    out = np.empty(total, dtype=np.uint8)
    prev = 0
    for i in range(total):
        d = trits[i]
        b = d if d < prev else d + 1
        out[i] = b
        prev = b
    return out


@numba.njit(cache=True, nogil=True)
def _trits_to_bytes(trits, ndig, nbytes, out, pos):
    limbs = np.zeros(4, dtype=np.uint64)
    for d in range(ndig - 1, -1, -1):
        carry = np.uint64(trits[d])
        for k in range(4):
            cur = limbs[k] * np.uint64(3) + carry
            limbs[k] = cur & np.uint64(0xFFFFFFFF)
            carry = cur >> np.uint64(32)
    # value must be < 256**nbytes
    for i in range(nbytes - 1, -1, -1):
        out[pos + i] = limbs[0] & np.uint64(0xFF)
        for k in range(4):
            lo = limbs[k] >> np.uint64(8)
            if k < 3:
                lo |= (limbs[k + 1] & np.uint64(0xFF)) << np.uint64(24)
            limbs[k] = lo
    for k in range(4):
        if limbs[k] != 0:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _decode_kernel(codes, nfull, r, block, block_digits, tail_digits, prev0):
    total = codes.size
    trits = np.empty(total, dtype=np.uint8)
    prev = prev0
    for i in range(total):
        b = codes[i]
        if b == prev:
            return np.empty(0, dtype=np.uint8), i
        trits[i] = b if b < prev else b - 1
        prev = b
    out = np.empty(nfull * block + r, dtype=np.uint8)
    for b in range(nfull):
        if not _trits_to_bytes(trits[b * block_digits:(b + 1) * block_digits], block_digits, block, out, b * block):
            return np.empty(0, dtype=np.uint8), -2 - b
    if r:
        if not _trits_to_bytes(trits[nfull * block_digits:], tail_digits[r], r, out, nfull * block):
            return np.empty(0, dtype=np.uint8), -2 - nfull
    return out, -1


@numba.njit(cache=True, nogil=True)
def codes_to_trits(codes, prev):
    out = np.empty(codes.size, dtype=np.uint8)
    for i in range(codes.size):
        b = codes[i]
        out[i] = b if b < prev else b - 1
        prev = b
    return out


@numba.njit(cache=True, nogil=True)
def trits_to_codes(trits, prev):
    out = np.empty(trits.size, dtype=np.uint8)
    for i in range(trits.size):
        d = trits[i]
        b = d if d < prev else d + 1
        out[i] = b
        prev = b
    return out


class RotationCodec:
    name = "rotation"
    nominal_density = NOMINAL_DENSITY
    reported_density = 1.58

    def encode(self, data: bytes) -> DnaSequence:
        raw = np.frombuffer(bytes(data), dtype=np.uint8)
        return DnaSequence(_encode_kernel(raw, BLOCK_BYTES, _TAIL_DIGITS, BLOCK_DIGITS))

    def decode(self, seq: DnaSequence) -> bytes:
        codes = np.ascontiguousarray(DnaSequence(seq).codes)
        nfull, rem = divmod(codes.size, BLOCK_DIGITS)
        if rem:
            matches = np.flatnonzero(_TAIL_DIGITS == rem)
            if not matches.size or matches[0] == 0:
                raise InvalidCodeword(f"{codes.size} bases is not a valid rotation length")
            r = int(matches[0])
        else:
            r = 0
        out, status = _decode_kernel(codes, nfull, r, BLOCK_BYTES, BLOCK_DIGITS, _TAIL_DIGITS, 0)
        if status >= 0:
            raise InvalidCodeword(f"base {status} repeats its predecessor")
        if status < -1:
            raise InvalidCodeword(f"block {-2 - status} decodes past its byte range")
        return out.tobytes()

    # payload randomisation works on the digit stream; t -> (k - t) mod 3 is an involution
    def transform_payload(self, codes: np.ndarray, start: int, stop: int, prev: int, seed: int,
                          keystream_fn) -> np.ndarray:
        seg = np.ascontiguousarray(codes[start:stop])
        trits = codes_to_trits(seg, prev)
        key = (keystream_fn(seed, trits.size) % 3).astype(np.uint8)
        mixed = ((key + 3 - trits) % 3).astype(np.uint8)
        return trits_to_codes(mixed, prev)

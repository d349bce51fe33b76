"""Grass-style code: two bytes -> three base-47 digits -> three codons.

A trailing odd byte is written as two digits (six bases).
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidCodeword
from ..seqcore import DnaSequence, encode_text
from .tables import GRASS_FILE, load

UNIT = 9
RADIX = 47


class GrassCodec:
    name = "grass"
    nominal_density = 16 / 9
    reported_density = 1.78

    def __init__(self, codons: list[str] | None = None):
        codons = codons or load(GRASS_FILE)
        if len(codons) != RADIX or len(set(codons)) != RADIX:
            raise ValueError("grass table needs 47 distinct codons")
        self.codons = codons
        self._forward = np.stack([encode_text(c) for c in codons])
        self._reverse = np.full(64, -1, dtype=np.int16)
        keys = self._forward[:, 0] * 16 + self._forward[:, 1] * 4 + self._forward[:, 2]
        self._reverse[keys] = np.arange(RADIX)

    def _units_to_codes(self, values: np.ndarray, ndigits: int) -> np.ndarray:
        values = values.astype(np.int64)
        digits = np.empty((values.size, ndigits), dtype=np.int64)
        for k in range(ndigits - 1, -1, -1):
            values, digits[:, k] = np.divmod(values, RADIX)
        return self._forward[digits].reshape(-1)

    def _codes_to_units(self, codes: np.ndarray, ndigits: int, limit: int) -> np.ndarray:
        c = codes.reshape(-1, 3).astype(np.int64)
        d = self._reverse[c[:, 0] * 16 + c[:, 1] * 4 + c[:, 2]]
        if d.size and d.min() < 0:
            raise InvalidCodeword(f"codon {int(np.argmax(d < 0))} is not in the codon table")
        d = d.reshape(-1, ndigits).astype(np.int64)
        values = np.zeros(d.shape[0], dtype=np.int64)
        for k in range(ndigits):
            values = values * RADIX + d[:, k]
        if values.size and values.max() >= limit:
            raise InvalidCodeword(f"unit {int(np.argmax(values >= limit))} exceeds {limit - 1}")
        return values

    def encode(self, data: bytes) -> DnaSequence:
        raw = np.frombuffer(bytes(data), dtype=np.uint8)
        even = raw.size // 2 * 2
        pairs = raw[:even].reshape(-1, 2).astype(np.int64)
        parts = [self._units_to_codes(pairs[:, 0] * 256 + pairs[:, 1], 3)]
        if raw.size % 2:
            parts.append(self._units_to_codes(raw[-1:], 2))
        return DnaSequence(np.concatenate(parts) if parts else np.zeros(0, np.uint8))

    def decode(self, seq: DnaSequence) -> bytes:
        codes = DnaSequence(seq).codes
        nunits, rem = divmod(codes.size, UNIT)
        if rem not in (0, 6):
            raise InvalidCodeword(f"{codes.size} bases is not a valid grass length")
        values = self._codes_to_units(codes[: nunits * UNIT], 3, 1 << 16)
        out = np.empty(2 * nunits + (rem == 6), dtype=np.uint8)
        out[0:2 * nunits:2] = values >> 8
        out[1:2 * nunits:2] = values & 0xFF
        if rem:
            out[-1] = self._codes_to_units(codes[nunits * UNIT:], 2, 256)[0]
        return out.tobytes()

    def transform_payload(self, codes, start, stop, prev, seed, keystream_fn):
        # only whole 9-base units inside the payload are re-derived; edge bases stay
        seg = np.array(codes[start:stop], dtype=np.uint8)
        first = -(-start // UNIT) * UNIT
        last = min(stop, codes.size // UNIT * UNIT) // UNIT * UNIT
        if last <= first:
            return seg
        values = self._codes_to_units(np.ascontiguousarray(codes[first:last]), 3, 1 << 16)
        key = keystream_fn(seed, 2 * values.size).astype(np.int64)
        values ^= key[0::2] * 256 + key[1::2]
        seg[first - start:last - start] = self._units_to_codes(values, 3)
        return seg

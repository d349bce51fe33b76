"""Blawat-style code: every byte becomes one 5-base codeword."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidCodeword
from ..seqcore import DnaSequence, encode_text
from .tables import BLAWAT_FILE, load

CODEWORD = 5


def _word_key(codes: np.ndarray) -> np.ndarray:
    w = codes.reshape(-1, CODEWORD).astype(np.int32)
    return (((w[:, 0] * 4 + w[:, 1]) * 4 + w[:, 2]) * 4 + w[:, 3]) * 4 + w[:, 4]


class BlawatCodec:
    name = "blawat"
    nominal_density = 1.6
    reported_density = 1.6

    def __init__(self, table: list[str] | None = None):
        table = table or load(BLAWAT_FILE)
        if len(table) != 256 or len(set(table)) != 256:
            raise ValueError("blawat table needs 256 distinct codewords")
        self.table = table
        self._forward = np.stack([encode_text(w) for w in table])
        self._reverse = np.full(4 ** CODEWORD, -1, dtype=np.int16)
        self._reverse[_word_key(self._forward.reshape(-1))] = np.arange(256)

    def encode(self, data: bytes) -> DnaSequence:
        raw = np.frombuffer(bytes(data), dtype=np.uint8)
        return DnaSequence(self._forward[raw].reshape(-1))

    def _decode_codes(self, codes: np.ndarray) -> np.ndarray:
        if codes.size % CODEWORD:
            raise InvalidCodeword(f"{codes.size} bases is not a whole number of codewords")
        values = self._reverse[_word_key(codes)]
        if values.size and values.min() < 0:
            raise InvalidCodeword(f"codeword {int(np.argmax(values < 0))} is not in the codebook")
        return values.astype(np.uint8)

    def decode(self, seq: DnaSequence) -> bytes:
        return self._decode_codes(DnaSequence(seq).codes).tobytes()

    def transform_payload(self, codes, start, stop, prev, seed, keystream_fn):
        seg = np.array(codes[start:stop], dtype=np.uint8)
        first = -(-start // CODEWORD) * CODEWORD
        last = stop // CODEWORD * CODEWORD
        if last <= first:
            return seg
        values = self._decode_codes(np.ascontiguousarray(codes[first:last]))
        values ^= keystream_fn(seed, values.size)
        seg[first - start:last - start] = self._forward[values].reshape(-1)
        return seg

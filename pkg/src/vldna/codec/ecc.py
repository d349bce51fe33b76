"""Reed-Solomon(255,239) outer code over GF(2^8).

Codewords are laid out exactly as :mod:`reedsolo` lays them out (primitive
polynomial 0x11d, generator 2, first consecutive root 0): 239 data bytes
followed by 16 parity bytes.  Bulk encoding and syndrome checks run
vectorised over all blocks; only blocks with a non-zero syndrome are handed
to ``reedsolo`` for correction.

Stream layout: ceil(n / 239) codewords, the last data block zero padded,
then a 4-byte little-endian trailer holding the pad length.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numba
import numpy as np
import reedsolo

from ..errors import VLDNAError


class UncorrectableBlock(VLDNAError):
    pass


@dataclass(frozen=True)
class EccParams:
    codeword_len: int = 255
    data_len: int = 239
    parity_len: int = 16

    def __post_init__(self):
        if self.codeword_len != self.data_len + self.parity_len:
            raise ValueError("codeword_len must equal data_len + parity_len")


RS_255_239 = EccParams()
TRAILER = 4

_PRIM = 0x11D
_log, _exp = reedsolo.init_tables(_PRIM)[:2]
_GF_EXP = np.array(_exp[:512], dtype=np.int32)
_GF_LOG = np.array(_log[:256], dtype=np.int32)


def _mul_table() -> np.ndarray:
    a = np.arange(256)
    la = _GF_LOG[a][:, None] + _GF_LOG[a][None, :]
    table = _GF_EXP[la % 255].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    return table


_MUL = _mul_table()


@numba.njit(cache=True, nogil=True)
def _lfsr_parity(blocks, gen, mul):
    n, k = blocks.shape
    nsym = gen.size - 1
    out = np.zeros((n, nsym), dtype=np.uint8)
    reg = np.zeros(nsym, dtype=np.uint8)
    for r in range(n):
        reg[:] = 0
        for j in range(k):
            fb = blocks[r, j] ^ reg[0]
            for t in range(nsym - 1):
                reg[t] = reg[t + 1] ^ mul[fb, gen[t + 1]]
            reg[nsym - 1] = mul[fb, gen[nsym]]
        out[r, :] = reg
    return out


@numba.njit(cache=True, nogil=True)
def _syndromes_nonzero(words, roots, mul):
    n, m = words.shape
    bad = np.zeros(n, dtype=np.bool_)
    for r in range(n):
        for i in range(roots.size):
            x = roots[i]
            acc = np.uint8(0)
            for j in range(m):
                acc = mul[acc, x] ^ words[r, j]
            if acc != 0:
                bad[r] = True
                break
    return bad


def _generator(nsym: int) -> np.ndarray:
    return np.array(reedsolo.rs_generator_poly(nsym, 0, 2), dtype=np.uint8)


def ecc_encode(data: bytes, params: EccParams = RS_255_239) -> bytes:
    """Append RS parity to every ``data_len`` block; see module docstring for layout."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    k = params.data_len
    nblocks = -(-raw.size // k)
    pad = nblocks * k - raw.size
    blocks = np.zeros((nblocks, k), dtype=np.uint8)
    blocks.reshape(-1)[: raw.size] = raw
    parity = _lfsr_parity(blocks, _generator(params.parity_len), _MUL)
    words = np.concatenate([blocks, parity], axis=1)
    return words.tobytes() + struct.pack("<I", pad)


def ecc_decode(stream: bytes, params: EccParams = RS_255_239) -> bytes:
    """Correct up to ``parity_len // 2`` byte errors per codeword and strip padding."""
    stream = bytes(stream)
    n = params.codeword_len
    if len(stream) < TRAILER or (len(stream) - TRAILER) % n:
        raise UncorrectableBlock(f"stream length {len(stream)} is not whole codewords plus trailer")
    (pad,) = struct.unpack("<I", stream[-TRAILER:])
    words = np.frombuffer(stream[:-TRAILER], dtype=np.uint8).reshape(-1, n).copy()
    if pad >= params.data_len or (pad and not len(words)):
        raise UncorrectableBlock(f"implausible pad length {pad}")
    roots = _GF_EXP[np.arange(params.parity_len)].astype(np.uint8)
    bad = np.flatnonzero(_syndromes_nonzero(words, roots, _MUL))
    if bad.size:
        rsc = reedsolo.RSCodec(params.parity_len, nsize=n)
        for r in bad:
            try:
                fixed = rsc.decode(bytearray(words[r].tobytes()))[0]
            except reedsolo.ReedSolomonError as exc:
                raise UncorrectableBlock(f"codeword {r}: {exc}") from None
            words[r, : params.data_len] = np.frombuffer(bytes(fixed), dtype=np.uint8)
    data = words[:, : params.data_len].tobytes()
    return data[: len(data) - pad] if pad else data


def ecc_length(n: int, params: EccParams = RS_255_239) -> int:
    return -(-n // params.data_len) * params.codeword_len + TRAILER

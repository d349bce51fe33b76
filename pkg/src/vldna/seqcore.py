"""Nucleotide sequences, length groups and strand layout.

Bases are coded A=0, C=1, G=2, T=3 so that the Watson-Crick complement of a
code ``b`` is ``3 - b``.  Sequences are held 2-bit packed (four bases per
byte, first base in the high bits) and unpacked on demand.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IndexOverflow, LengthNotInGroup, MalformedStrand

ALPHABET = "ACGT"
BASES = tuple(ALPHABET)
INDEX_WIDTH = 11
PRIMER_LENGTH = 20
PACKED_MAGIC = b"VLDNASEQ"

_ENCODE = np.full(256, 255, dtype=np.uint8)
for _i, _b in enumerate(ALPHABET):
    _ENCODE[ord(_b)] = _i
    _ENCODE[ord(_b.lower())] = _i
_DECODE = np.frombuffer(ALPHABET.encode(), dtype=np.uint8)


def complement_base(b: str) -> str:
    return ALPHABET[3 - ALPHABET.index(b)]


def encode_text(text: str) -> np.ndarray:
    """ACGT text -> uint8 codes. Raises ValueError on any other character."""
    raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    codes = _ENCODE[raw]
    if codes.size and codes.max() == 255:
        bad = text[int(np.argmax(codes == 255))]
        raise ValueError(f"invalid base {bad!r}")
    return codes


def decode_codes(codes: np.ndarray) -> str:
    return _DECODE[np.asarray(codes, dtype=np.uint8)].tobytes().decode("ascii")


def pack_codes(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint8)
    n = codes.size
    padded = np.zeros((n + 3) // 4 * 4, dtype=np.uint8)
    padded[:n] = codes
    q = padded.reshape(-1, 4)
    return (q[:, 0] << 6) | (q[:, 1] << 4) | (q[:, 2] << 2) | q[:, 3]


def unpack_codes(packed: np.ndarray, length: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.uint8)
    out = np.empty((packed.size, 4), dtype=np.uint8)
    out[:, 0] = packed >> 6
    out[:, 1] = (packed >> 4) & 3
    out[:, 2] = (packed >> 2) & 3
    out[:, 3] = packed & 3
    return out.reshape(-1)[:length]


class DnaSequence:
    """Immutable 2-bit packed DNA sequence."""

    __slots__ = ("_packed", "_length", "_codes")

    def __init__(self, data: str | np.ndarray | "DnaSequence" = ""):
        if isinstance(data, DnaSequence):
            self._packed, self._length, self._codes = data._packed, data._length, data._codes
            return
        if isinstance(data, str):
            codes = encode_text(data)
        else:
            codes = np.asarray(data, dtype=np.uint8)
            if codes.ndim != 1:
                raise ValueError("codes must be one-dimensional")
            if codes.size and codes.max() > 3:
                raise ValueError("base codes must be in 0..3")
        self._length = int(codes.size)
        self._packed = pack_codes(codes)
        self._packed.setflags(write=False)
        self._codes = None

    @classmethod
    def from_packed(cls, packed: np.ndarray, length: int) -> "DnaSequence":
        obj = cls.__new__(cls)
        obj._packed = np.ascontiguousarray(packed, dtype=np.uint8)
        obj._packed.setflags(write=False)
        obj._length = int(length)
        obj._codes = None
        return obj

    @property
    def codes(self) -> np.ndarray:
        """Read-only uint8 view of the unpacked base codes."""
        if self._codes is None:
            codes = unpack_codes(self._packed, self._length)
            codes.setflags(write=False)
            self._codes = codes
        return self._codes

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, key):
        if isinstance(key, slice):
            return DnaSequence(self.codes[key])
        if not -self._length <= key < self._length:
            raise IndexError("sequence index out of range")
        return ALPHABET[int(self.codes[key])]

    def __str__(self) -> str:
        return decode_codes(self.codes)

    def __repr__(self) -> str:
        text = str(self) if self._length <= 40 else str(self[:37]) + "..."
        return f"DnaSequence({text!r}, length={self._length})"

    def __eq__(self, other) -> bool:
        if isinstance(other, str):
            other = DnaSequence(other)
        if not isinstance(other, DnaSequence):
            return NotImplemented
        return self._length == other._length and np.array_equal(self._packed, other._packed)

    def __hash__(self) -> int:
        return hash((self._length, self._packed.tobytes()))

    def __add__(self, other: "DnaSequence") -> "DnaSequence":
        return DnaSequence(np.concatenate([self.codes, DnaSequence(other).codes]))

    def reverse_complement(self) -> "DnaSequence":
        return DnaSequence((3 - self.codes[::-1]).astype(np.uint8))


def complement(seq: DnaSequence | str) -> DnaSequence:
    """Reverse complement of ``seq``."""
    return DnaSequence(seq).reverse_complement()


def concat(parts: Iterable[DnaSequence]) -> DnaSequence:
    arrays = [p.codes for p in parts]
    if not arrays:
        return DnaSequence()
    return DnaSequence(np.concatenate(arrays))


# -- file formats ---------------------------------------------------------

def write_text(path, seqs: Iterable[DnaSequence | str]) -> None:
    with open(path, "w") as fh:
        for s in seqs:
            fh.write(f"{s}\n")


def read_text(path) -> list[DnaSequence]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            try:
                out.append(DnaSequence(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_packed(path, seq: DnaSequence) -> None:
    with open(path, "wb") as fh:
        fh.write(PACKED_MAGIC)
        fh.write(struct.pack("<Q", len(seq)))
        fh.write(seq.packed.tobytes())


def read_packed(path) -> DnaSequence:
    raw = Path(path).read_bytes()
    if raw[:8] != PACKED_MAGIC:
        raise ValueError(f"{path}: bad magic header")
    (n,) = struct.unpack("<Q", raw[8:16])
    body = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if body.size != (n + 3) // 4:
        raise ValueError(f"{path}: truncated packed body")
    return DnaSequence.from_packed(body.copy(), n)


# -- length groups --------------------------------------------------------

@dataclass(frozen=True)
class LengthGroup:
    lengths: tuple[int, ...]

    def __init__(self, lengths: Iterable[int]):
        ls = tuple(sorted(set(int(x) for x in lengths)))
        if not ls:
            raise ValueError("length group must not be empty")
        if any(x <= 0 or x % 10 for x in ls):
            raise ValueError(f"lengths must be positive multiples of 10: {ls}")
        object.__setattr__(self, "lengths", ls)

    @classmethod
    def parse(cls, text: str) -> "LengthGroup":
        return cls(int(x) for x in text.replace(",", "/").split("/") if x.strip())

    @property
    def max_length(self) -> int:
        return self.lengths[-1]

    @property
    def min_length(self) -> int:
        return self.lengths[0]

    @property
    def indicator_width(self) -> int:
        """Bases needed for the length indicator: ceil(log4 |lengths|), at least one."""
        return max(1, math.ceil(math.log(len(self.lengths), 4) - 1e-12))

    def slot(self, length: int) -> int:
        try:
            return self.lengths.index(length)
        except ValueError:
            raise LengthNotInGroup(f"payload length {length} not in group {self}") from None

    def __contains__(self, length) -> bool:
        return length in self.lengths

    def __len__(self) -> int:
        return len(self.lengths)

    def __str__(self) -> str:
        return "/".join(str(x) for x in self.lengths)


DEFAULT_GROUP = LengthGroup((150, 160, 190, 200))


def int_to_bases(value: int, width: int) -> str:
    if value < 0 or value >= 4 ** width:
        raise IndexOverflow(f"{value} does not fit in {width} bases")
    digits = []
    for _ in range(width):
        value, d = divmod(value, 4)
        digits.append(ALPHABET[d])
    return "".join(reversed(digits))


def bases_to_int(text: str) -> int:
    value = 0
    for ch in str(text):
        value = value * 4 + ALPHABET.index(ch)
    return value


# -- strands --------------------------------------------------------------

@dataclass(frozen=True)
class Strand:
    """One synthesised molecule.

    ``primer_rev`` is written in its binding orientation, i.e. the reverse
    complement of the reverse primer closes the strand.
    """

    primer_fwd: object
    length_indicator: str
    internal_index: DnaSequence
    payload: DnaSequence
    primer_rev: object

    def to_sequence(self) -> DnaSequence:
        return concat([
            self.primer_fwd.seq,
            DnaSequence(self.length_indicator),
            self.internal_index,
            self.payload,
            complement(self.primer_rev.seq),
        ])

    def __str__(self) -> str:
        return str(self.to_sequence())

    @classmethod
    def parse(cls, text: str, group: LengthGroup, primers: Mapping[str, object],
              primer_length: int = PRIMER_LENGTH, index_width: int = INDEX_WIDTH) -> "Strand":
        """Split a serialized strand back into fields.

        ``primers`` maps primer sequence text to the library primer.
        """
        k = group.indicator_width
        overhead = 2 * primer_length + k + index_width
        if len(text) <= overhead:
            raise MalformedStrand(f"strand of {len(text)} bases is shorter than its metadata")
        fwd_txt = text[:primer_length]
        rev_txt = str(complement(text[len(text) - primer_length:]))
        try:
            fwd, rev = primers[fwd_txt], primers[rev_txt]
        except KeyError as exc:
            raise MalformedStrand(f"unknown primer {exc.args[0]}") from None
        p = primer_length
        return cls(fwd, text[p:p + k], DnaSequence(text[p + k:p + k + index_width]),
                   DnaSequence(text[p + k + index_width:len(text) - p]), rev)


def _indicator_slot(payload_len: int, group: LengthGroup, remainder: bool) -> int:
    if not remainder:
        return group.slot(payload_len)
    for i, length in enumerate(group.lengths):
        if payload_len < length:
            return i
    raise LengthNotInGroup(f"remainder of {payload_len} bases exceeds max length {group.max_length}")


def assemble_strand(payload: DnaSequence, pair, index: int, group: LengthGroup = DEFAULT_GROUP,
                    remainder: bool = False, index_width: int = INDEX_WIDTH) -> Strand:
    """Wrap ``payload`` with its primer pair, length indicator and internal index.

    A remainder payload (a tube's final strand) carries the slot of the
    shortest group length exceeding it; its true length is implied by the
    strand length.
    """
    payload = DnaSequence(payload)
    if remainder and len(payload) in group:
        remainder = False
    slot = _indicator_slot(len(payload), group, remainder)
    indicator = int_to_bases(slot, group.indicator_width)
    idx = DnaSequence(int_to_bases(index, index_width))
    return Strand(pair.forward, indicator, idx, payload, pair.reverse)


def disassemble_strand(strand: Strand, group: LengthGroup = DEFAULT_GROUP):
    """Inverse of :func:`assemble_strand`.

    Returns ``(payload, pair, index, is_remainder)``.
    """
    from .primerlib import PrimerPair

    if len(strand.length_indicator) != group.indicator_width:
        raise MalformedStrand("length indicator width does not match the group")
    slot = bases_to_int(strand.length_indicator)
    if slot >= len(group.lengths):
        raise MalformedStrand(f"length indicator slot {slot} unused by group {group}")
    n = len(strand.payload)
    expected = group.lengths[slot]
    if n == expected:
        is_remainder = False
    elif n < expected and (slot == 0 or n >= group.lengths[slot - 1]) and n not in group:
        is_remainder = True
    else:
        raise MalformedStrand(f"payload of {n} bases disagrees with indicator slot {slot}")
    pair = PrimerPair(strand.primer_fwd, strand.primer_rev)
    return strand.payload, pair, bases_to_int(str(strand.internal_index)), is_remainder


def homopolymer_runs(codes: Sequence[int] | np.ndarray) -> int:
    """Length of the longest run of identical bases."""
    codes = np.asarray(codes)
    if codes.size == 0:
        return 0
    change = np.flatnonzero(np.diff(codes) != 0)
    bounds = np.concatenate([[-1], change, [codes.size - 1]])
    return int(np.diff(bounds).max())

"""Primer library generation and pairing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ExhaustedSearch
from .seqcore import PRIMER_LENGTH, DnaSequence, read_text, write_text


@dataclass(frozen=True)
class Primer:
    id: int
    seq: DnaSequence

    def __str__(self) -> str:
        return str(self.seq)


@dataclass(frozen=True)
class PrimerPair:
    forward: Primer
    reverse: Primer

    def __post_init__(self):
        if self.forward.id == self.reverse.id:
            raise ValueError("a primer cannot pair with itself")


@dataclass(frozen=True)
class PrimerRules:
    length: int = PRIMER_LENGTH
    gc_min: float = 0.40
    gc_max: float = 0.60
    max_run: int = 3
    clamp: bool = True
    min_hamming: int = 6


DEFAULT_RULES = PrimerRules()


def _runs_ok(codes: np.ndarray, max_run: int) -> np.ndarray:
    same = codes[:, 1:] == codes[:, :-1]
    ok = np.ones(codes.shape[0], dtype=bool)
    # a run longer than max_run means max_run consecutive "same" flags
    for s in range(same.shape[1] - max_run + 1):
        ok &= ~same[:, s:s + max_run].all(axis=1)
    return ok


def rule_mask(codes: np.ndarray, rules: PrimerRules = DEFAULT_RULES) -> np.ndarray:
    """Per-row check of the single-primer design rules (GC window, runs, 3' clamp)."""
    codes = np.atleast_2d(codes)
    gc = ((codes == 1) | (codes == 2)).mean(axis=1)
    ok = (gc >= rules.gc_min - 1e-9) & (gc <= rules.gc_max + 1e-9)
    ok &= _runs_ok(codes, rules.max_run)
    if rules.clamp:
        ok &= (codes[:, -1] == 1) | (codes[:, -1] == 2)
    return ok


def _pack(codes: np.ndarray) -> np.ndarray:
    weights = np.uint64(4) ** np.arange(codes.shape[1] - 1, -1, -1, dtype=np.uint64)
    return (codes.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


_ODD = np.uint64(0x5555555555555555)


def _hamming(a: np.ndarray, b: np.uint64) -> np.ndarray:
    x = a ^ b
    return np.bitwise_count((x | (x >> np.uint64(1))) & _ODD)


def hamming(p: DnaSequence | str, q: DnaSequence | str) -> int:
    a, b = DnaSequence(p).codes, DnaSequence(q).codes
    return int((a != b).sum())


def generate_library(count: int, seed: int = 0, rules: PrimerRules = DEFAULT_RULES,
                     max_attempts: int | None = None) -> list[Primer]:
    """Draw ``count`` primers by rejection sampling from a seeded uniform stream.

    Candidates are drawn in batches of 4096; each must pass :func:`rule_mask`
    and keep Hamming distance >= ``rules.min_hamming`` to every primer already
    accepted.  ``max_attempts`` defaults to ``2000 * count + 100_000`` draws.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    budget = max_attempts if max_attempts is not None else 2000 * count + 100_000
    rng = np.random.default_rng(seed)
    accepted = np.zeros(count, dtype=np.uint64)
    rows: list[np.ndarray] = []
    drawn = 0
    while len(rows) < count:
        if drawn >= budget:
            raise ExhaustedSearch(f"only {len(rows)} of {count} primers after {drawn} candidates")
        batch = rng.integers(0, 4, size=(4096, rules.length), dtype=np.uint8)
        drawn += len(batch)
        batch = batch[rule_mask(batch, rules)]
        packed = _pack(batch)
        for row, key in zip(batch, packed):
            n = len(rows)
            if n and _hamming(accepted[:n], key).min() < rules.min_hamming:
                continue
            accepted[n] = key
            rows.append(row)
            if len(rows) == count:
                break
    return [Primer(i, DnaSequence(r)) for i, r in enumerate(rows)]


def check_library(library: Sequence[Primer], rules: PrimerRules = DEFAULT_RULES) -> list[str]:
    """Return a list of rule violations (empty when the library is valid)."""
    problems = []
    codes = np.stack([p.seq.codes for p in library]) if library else np.zeros((0, rules.length), np.uint8)
    for p, ok in zip(library, rule_mask(codes, rules) if len(library) else []):
        if not ok:
            problems.append(f"primer {p.id} breaks a design rule")
    packed = _pack(codes) if len(library) else np.zeros(0, np.uint64)
    for i in range(len(library)):
        if i + 1 < len(library):
            d = _hamming(packed[i + 1:], packed[i])
            for j in np.flatnonzero(d < rules.min_hamming):
                problems.append(f"primers {library[i].id} and {library[i + 1 + j].id} are too close")
    return problems


def pair_primers(library: Iterable[Primer]) -> list[PrimerPair]:
    """Pair consecutive primers in id order; an odd primer out stays unpaired."""
    ordered = sorted(library, key=lambda p: p.id)
    return [PrimerPair(ordered[i], ordered[i + 1]) for i in range(0, len(ordered) - 1, 2)]


def save_library(path, library: Sequence[Primer]) -> None:
    """One primer per line; line i (0-based) is primer id i."""
    if [p.id for p in library] != list(range(len(library))):
        raise ValueError("library ids must be 0..n-1 in order to be saved")
    write_text(path, (p.seq for p in library))


def load_library(path) -> list[Primer]:
    return [Primer(i, s) for i, s in enumerate(read_text(path))]

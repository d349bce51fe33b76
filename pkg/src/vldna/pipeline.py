"""Tube workflow: ingest, encode, scan, plan, size the input to the tube,
assemble strands, and decode them again.

Baselines (fixed-length payloads, with or without per-payload
randomisation) share the same encode and scan stages but plan no cuts.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .codec import CodecId, ecc_decode, ecc_encode, get_codec
from .codec.batch import payload_seeds, randomize_rows
from .collision import CollisionIndex, Scanner, count_statistics
from .collision.scanner import _merge
from .errors import MalformedStrand, MissingStrand, NonConvergence, VLDNAError
from .planner import build_conflict_graph, vl_dna
from .planner.compose import CutPlan
from .primerlib import Primer, PrimerPair, pair_primers
from .seqcore import (
    DEFAULT_GROUP,
    INDEX_WIDTH,
    PRIMER_LENGTH,
    DnaSequence,
    LengthGroup,
    _indicator_slot,
    bases_to_int,
    complement,
    decode_codes,
    encode_text,
    int_to_bases,
)

log = logging.getLogger(__name__)

DEFAULT_BUFFER = 1 << 25
TUBE_FORMAT = "vldna-tube/1"
STRAND_FILE = "strands.txt"
MANIFEST_FILE = "manifest.json"
SEED_FILE = "seeds.csv"
SCHEMES = ("fixed", "rand5", "rand10", "vldna-collisions", "vldna-conflicts")
# rows per block in the randomised baseline pass
_BLOCK_ROWS = 4096


@dataclass(frozen=True)
class TubeConfig:
    buffer_target: int = DEFAULT_BUFFER
    parallel_factor: int = 1_550_000
    tolerance: float = 0.05
    group: LengthGroup = DEFAULT_GROUP
    codec: CodecId = CodecId.ROTATION
    max_payload: int = 200
    max_iterations: int = 64
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "codec", CodecId(self.codec))
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.parallel_factor < 1:
            raise ValueError("parallel_factor must be at least 1")
        if self.buffer_target < 1 or self.max_payload < 1:
            raise ValueError("buffer_target and max_payload must be positive")
        if self.parallel_factor > 4 ** INDEX_WIDTH:
            raise ValueError(f"parallel_factor exceeds the {INDEX_WIDTH}-base internal index")

    @property
    def density(self) -> float:
        return get_codec(self.codec).reported_density

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group"] = list(self.group.lengths)
        d["codec"] = self.codec.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TubeConfig":
        d = dict(d)
        d["group"] = LengthGroup(d["group"])
        return cls(**d)


@dataclass
class TubeReport:
    usable_primers: int
    recovered_primers: int
    avg_payload_len: float
    strands: int
    capacity_bytes: int
    collisions_cut: int
    scheme: str = "vldna-collisions"
    codec: str = "rotation"
    density: float = 1.58
    parallel_factor: int = 1_550_000
    collided_primers: int = 0
    library_size: int = 0
    input_bytes: int = 0
    storable_payloads: int = 0
    iterations: int = 1
    history: list = field(default_factory=list)

    @property
    def generated_payloads(self) -> int:
        return self.strands

    @property
    def mismatch(self) -> float:
        """|generated - storable| / generated."""
        return abs(self.strands - self.storable_payloads) / self.strands if self.strands else 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TubeReport":
        return cls(**d)


def tube_capacity(payload_len, density, parallel, usable_primers) -> int:
    """floor(payload_len * density * parallel * usable_primers / 2 / 8) bytes."""
    vals = [Fraction(str(v)) if isinstance(v, float) else Fraction(v)
            for v in (payload_len, density, parallel, usable_primers)]
    if any(v < 0 for v in vals):
        raise ValueError("capacity inputs must be non-negative")
    a, b, c, d = vals
    return int(a * b * c * d / 16)


def _read_buffer(data, limit: int) -> bytes:
    if isinstance(data, (bytes, bytearray, memoryview)):
        return bytes(data[:limit])
    chunks, need = [], limit
    while need > 0:
        piece = data.read(need)
        if not piece:
            break
        chunks.append(piece)
        need -= len(piece)
    return b"".join(chunks)


def encode_stream(data: bytes, codec: CodecId | str) -> DnaSequence:
    """RS-protect then codec-encode."""
    return get_codec(codec).encode(ecc_encode(data))


def decode_stream(seq: DnaSequence, codec: CodecId | str) -> bytes:
    return ecc_decode(get_codec(codec).decode(seq))


def _report(scheme, cfg, library_size, collided, recovered, seq_len, strands, cut=0, **extra) -> TubeReport:
    usable = library_size - collided + recovered
    avg = seq_len / strands if strands else 0.0
    density = cfg.density
    return TubeReport(usable_primers=int(usable), recovered_primers=int(recovered), avg_payload_len=avg,
                      strands=int(strands), capacity_bytes=tube_capacity(avg, density, cfg.parallel_factor, usable),
                      collisions_cut=int(cut), scheme=scheme, codec=cfg.codec.value, density=density,
                      parallel_factor=cfg.parallel_factor, collided_primers=int(collided),
                      library_size=int(library_size), **extra)


# -- baselines -------------------------------------------------------------

@dataclass
class BaselineResult:
    """Fixed-row outcome for one attempt budget: collided primers and chosen seeds."""

    attempts: int
    collided: np.ndarray
    seeds: np.ndarray
    counts: np.ndarray | None = None

    @property
    def usable(self) -> np.ndarray:
        return np.flatnonzero(~self.collided)


def fixed_rows(seq_len: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    starts = np.arange(0, seq_len, width, dtype=np.int64)
    return starts, np.minimum(starts + width, seq_len)


def randomized_pass(codes: np.ndarray, scanner: Scanner, codec, width: int,
                    budgets: Sequence[int] = (1,)) -> dict[int, BaselineResult]:
    """Try seeds 0..max(budgets)-1 on every fixed-width payload.

    Attempt 0 is the identity.  Each budget keeps, per payload, the first
    attempt below the budget hitting the fewest primers.  Budget 1 also
    carries the per-primer collision counts of the plain encoding.
    """
    n = len(scanner.library)
    total = max(budgets)
    nrows = -(-codes.size // width)
    collided = {b: np.zeros(n, dtype=bool) for b in budgets}
    chosen = {b: np.zeros(nrows, dtype=np.uint64) for b in budgets}
    counts0 = np.zeros(n, dtype=np.int64)
    for r0 in range(0, nrows, _BLOCK_ROWS):
        r1 = min(nrows, r0 + _BLOCK_ROWS)
        a0, b1 = r0 * width, min(codes.size, r1 * width)
        pre = 1 if a0 else 0
        sub = codes[a0 - pre:b1]
        ords = np.arange(r0, r1, dtype=np.uint64)
        lstart = np.arange(r1 - r0, dtype=np.int64) * width + pre
        lstop = np.minimum(lstart + width, sub.size)
        per_row, keys_by, seeds_by = [], [], []
        for j in range(total):
            if j == 0:
                view, seeds = np.ascontiguousarray(sub[pre:]), np.zeros(r1 - r0, dtype=np.uint64)
            else:
                seeds = payload_seeds(j, ords)
                view = randomize_rows(codec, sub, lstart, lstop, seeds)[pre:]
            keys, cnt = scanner.rows_hit(view, width, 0, view.size)
            if j == 0:
                counts0 += cnt
            per_row.append(np.bincount(keys // n, minlength=r1 - r0))
            keys_by.append(keys)
            seeds_by.append(seeds)
        per_row = np.stack(per_row)
        for b in budgets:
            best = np.argmin(per_row[:b], axis=0)
            for j in range(b):
                rows = np.flatnonzero(best == j)
                if not rows.size:
                    continue
                chosen[b][r0 + rows] = seeds_by[j][rows]
                k = keys_by[j]
                sel = np.isin(k // n, rows)
                collided[b][k[sel] % n] = True
    out = {}
    for b in budgets:
        out[b] = BaselineResult(b, collided[b], chosen[b], counts0 if b == 1 else None)
    return out


def run_baselines(data, cfg: TubeConfig, library: Sequence[Primer], budgets: Sequence[int] = (1, 5, 10),
                  scanner: Scanner | None = None) -> dict[int, tuple[TubeReport, BaselineResult]]:
    """Fixed (budget 1) and randomised baselines from one shared pass."""
    buf = _read_buffer(data, cfg.buffer_target)
    seq = encode_stream(buf, cfg.codec)
    scanner = scanner or Scanner.cached(library)
    codes = np.ascontiguousarray(seq.codes)
    res = randomized_pass(codes, scanner, get_codec(cfg.codec), cfg.max_payload, budgets)
    nrows = -(-len(seq) // cfg.max_payload)
    out = {}
    for b, r in res.items():
        scheme = "fixed" if b == 1 else f"rand{b}"
        rep = _report(scheme, cfg, len(library), int(r.collided.sum()), 0, len(seq), nrows,
                      input_bytes=len(buf), storable_payloads=_storable(len(library) - int(r.collided.sum()), cfg))
        out[b] = (rep, r)
    return out


def _storable(usable: int, cfg: TubeConfig) -> int:
    return usable // 2 * cfg.parallel_factor


def run_baseline_fixed(data, cfg: TubeConfig, library: Sequence[Primer], out_dir=None,
                       scanner: Scanner | None = None) -> TubeReport:
    """Cut the encoding into max_payload pieces and count collided primers."""
    buf = _read_buffer(data, cfg.buffer_target)
    seq = encode_stream(buf, cfg.codec)
    scanner = scanner or Scanner.cached(library)
    starts, stops = fixed_rows(len(seq), cfg.max_payload)
    idx = scanner.count(seq, cuts=starts[1:], workers=cfg.workers)
    stats = count_statistics(idx, len(library))
    rep = _report("fixed", cfg, len(library), stats.collided, 0, len(seq), starts.size,
                  input_bytes=len(buf), storable_payloads=_storable(len(library) - stats.collided, cfg))
    if out_dir is not None:
        usable = np.flatnonzero(idx.counts() == 0)
        write_tube(out_dir, seq.codes, starts, stops, [library[i] for i in usable], cfg, rep, buf)
    return rep


def run_baseline_randomized(data, cfg: TubeConfig, library: Sequence[Primer], attempts: int = 5,
                            out_dir=None, scanner: Scanner | None = None) -> TubeReport:
    """Per payload, keep the seed (of ``attempts``) colliding with the fewest primers."""
    buf = _read_buffer(data, cfg.buffer_target)
    seq = encode_stream(buf, cfg.codec)
    scanner = scanner or Scanner.cached(library)
    codec = get_codec(cfg.codec)
    codes = np.ascontiguousarray(seq.codes)
    r = randomized_pass(codes, scanner, codec, cfg.max_payload, (attempts,))[attempts]
    starts, stops = fixed_rows(len(seq), cfg.max_payload)
    collided = int(r.collided.sum())
    rep = _report(f"rand{attempts}", cfg, len(library), collided, 0, len(seq), starts.size,
                  input_bytes=len(buf), storable_payloads=_storable(len(library) - collided, cfg))
    if out_dir is not None:
        mixed = randomize_rows(codec, codes, starts, stops, r.seeds)
        write_tube(out_dir, mixed, starts, stops, [library[i] for i in r.usable], cfg, rep, buf,
                   seeds=r.seeds)
    return rep


# -- VL-DNA tube -----------------------------------------------------------

def prefix_index(full: CollisionIndex, full_codes: np.ndarray, codes: np.ndarray,
                 scanner: Scanner) -> CollisionIndex:
    """Collision index of ``codes`` derived from the index of a longer encoding.

    Rows lying inside the shared prefix are reused; everything from the
    first differing base on (less one window) is rescanned.  ``full`` may be
    pruned: a primer stays truncated only while its stored rows still reach
    its first uncuttable region inside the shared part.
    """
    m = scanner.rule.min_len
    n = codes.size
    lim = min(n, full_codes.size)
    diff = np.flatnonzero(full_codes[:lim] != codes[:lim])
    same = int(diff[0]) if diff.size else lim
    seq = DnaSequence(codes)
    if same == n == full_codes.size:
        return CollisionIndex(full.primer, full.start, full.end, full.edits, n, full.library_size,
                              seq=seq, scanner=scanner, counts=full.counts(), truncated=full.truncated)
    keep = full.end <= same
    lo = same - m + 1
    straddle = ~keep & (full.start < same)
    if straddle.any():
        lo = min(lo, int(full.start[straddle].min()))
    lo = max(lo, 0)
    tail = scanner.scan(DnaSequence(codes[lo:]))
    p = np.concatenate([full.primer[keep], tail.primer]).astype(np.int32)
    s = np.concatenate([full.start[keep], tail.start + lo])
    e = np.concatenate([full.end[keep], tail.end + lo])
    d = np.concatenate([full.edits[keep], tail.edits])
    p, s, e, d = _merge(p, s, e, d)
    # truncated primers whose dropped rows began inside the shared part stay dead
    nlib = full.library_size
    truncated = full.truncated.copy()
    if truncated.any():
        last_kept = np.full(nlib, -1, dtype=np.int64)
        np.maximum.at(last_kept, full.primer, full.end)
        truncated &= last_kept <= same
    # for truncated primers the stored rows are a lower bound
    rows = np.bincount(p, minlength=nlib)
    return CollisionIndex(p, s, e, d, n, nlib, seq=seq, scanner=scanner, counts=rows, truncated=truncated)


@dataclass
class Attempt:
    input_bytes: int
    seq_len: int
    generated: int
    storable: int
    usable: np.ndarray
    recovered: list
    collided: int
    cut: int
    plan: CutPlan
    codes: np.ndarray

    @property
    def mismatch(self) -> float:
        return abs(self.generated - self.storable) / self.generated if self.generated else 0.0

    def summary(self) -> dict:
        return {"input_bytes": self.input_bytes, "generated": self.generated, "storable": self.storable}


def plan_attempt(buf: bytes, size: int, cfg: TubeConfig, scanner: Scanner, order: str,
                 full: CollisionIndex | None = None, full_codes: np.ndarray | None = None) -> Attempt:
    """Encode ``buf[:size]``, index it, recover primers and compose the cuts."""
    codes = np.ascontiguousarray(encode_stream(buf[:size], cfg.codec).codes)
    if full is None:
        idx = scanner.scan(DnaSequence(codes), workers=cfg.workers, prune=True)
    else:
        idx = prefix_index(full, full_codes, codes, scanner)
    graph = build_conflict_graph(idx, cfg.group, cfg.parallel_factor)
    plan = vl_dna(idx, graph, order)
    counts = idx.counts()
    nlib = len(scanner.library)
    usable = np.union1d(np.flatnonzero(counts == 0), np.asarray(plan.recovered, dtype=np.int64))
    generated = len(plan.plan)
    cut = int(counts[plan.recovered].sum()) if plan.recovered else 0
    return Attempt(size, codes.size, generated, _storable(usable.size, cfg), usable, plan.recovered,
                   int((counts > 0).sum()), cut, plan.plan, codes)


def next_input_size(size: int, generated: int, storable: int) -> int:
    """Midpoint of the last input size and the data size the tube could hold."""
    fits = storable * size / generated if generated else 0
    return int((size + fits) // 2)


def run_vldna_tube(data, cfg: TubeConfig, library: Sequence[Primer], order: str = "by_collisions",
                   out_dir=None, scanner: Scanner | None = None, full_index: CollisionIndex | None = None,
                   ) -> TubeReport:
    """Size the input until generated and storable payload counts agree.

    Each iteration plans a prefix of the buffered input.  The next size is
    the midpoint of the last size and the data size the tube could hold,
    kept inside the bracket of sizes known to fit and to overflow (else the
    bracket midpoint).  When the whole buffer already fits the first pass
    is accepted.  ``full_index`` may supply a pruned scan of the whole
    buffer's encoding.
    """
    buf = _read_buffer(data, cfg.buffer_target)
    scanner = scanner or Scanner.cached(library)
    full_codes = np.ascontiguousarray(encode_stream(buf, cfg.codec).codes)
    if full_index is None:
        full_index = scanner.scan(DnaSequence(full_codes), workers=cfg.workers, prune=True)
    size = max(1, len(buf))
    seen: dict[int, Attempt] = {}
    history = []
    best = None
    fits, overflows = 0, len(buf) + 1
    for it in range(1, cfg.max_iterations + 1):
        att = seen.get(size) or plan_attempt(buf, size, cfg, scanner, order, full_index, full_codes)
        seen[size] = att
        history.append(att.summary())
        log.info("iteration %d: %d bytes, %d generated, %d storable", it, size, att.generated, att.storable)
        if best is None or att.mismatch < best.mismatch:
            best = att
        done = att.mismatch <= cfg.tolerance or (size == len(buf) and att.storable >= att.generated)
        if done:
            rep = _vldna_report(att, cfg, order, len(library), it, history)
            if out_dir is not None:
                starts = np.array([a for a, _ in att.plan.segments], dtype=np.int64)
                stops = np.array([b for _, b in att.plan.segments], dtype=np.int64)
                write_tube(out_dir, att.codes, starts, stops, [library[i] for i in att.usable], cfg, rep,
                           buf[:size])
            return rep
        if att.storable >= att.generated:
            fits = size
        else:
            overflows = size
        nxt = next_input_size(size, att.generated, att.storable)
        if not fits < nxt < overflows:
            nxt = (fits + overflows) // 2
        if nxt in (size, fits, 0) or nxt >= overflows:
            break
        size = nxt
    rep = _vldna_report(best, cfg, order, len(library), len(history), history)
    raise NonConvergence(f"no input size within {cfg.tolerance:.0%} after {len(history)} iterations "
                         f"(best mismatch {best.mismatch:.3f} at {best.input_bytes} bytes)", best=rep)


def _vldna_report(att: Attempt, cfg, order, nlib, iterations, history) -> TubeReport:
    scheme = "vldna-conflicts" if "conflict" in order else "vldna-collisions"
    return _report(scheme, cfg, nlib, att.collided, len(att.recovered), att.seq_len, att.generated,
                   cut=att.cut, input_bytes=att.input_bytes, storable_payloads=att.storable,
                   iterations=iterations, history=list(history))


# -- tube files ------------------------------------------------------------

def assign_pairs(nstrands: int, npairs: int, parallel: int) -> tuple[np.ndarray, np.ndarray]:
    """Sequential fill: (pair rank, internal index) of every payload.

    Payloads past the last pair's share stay on that pair.
    """
    if nstrands and npairs == 0:
        raise VLDNAError("no usable primer pair to carry the payloads")
    k = np.arange(nstrands, dtype=np.int64)
    rank = np.minimum(k // parallel, max(npairs - 1, 0))
    index = k - rank * parallel
    if index.size and index.max() >= 4 ** INDEX_WIDTH:
        raise VLDNAError("payloads overflow the internal index of the last pair")
    return rank, index


def strand_lines(codes: np.ndarray, starts, stops, pairs: Sequence[PrimerPair], cfg: TubeConfig) -> list[str]:
    """One ACGT line per payload, in payload order."""
    group = cfg.group
    text = decode_codes(np.asarray(codes, dtype=np.uint8))
    rank, index = assign_pairs(len(starts), len(pairs), cfg.parallel_factor)
    fwd = [str(p.forward.seq) for p in pairs]
    rev = [str(complement(p.reverse.seq)) for p in pairs]
    slots = {}
    lines = []
    last = len(starts) - 1
    for k, (a, b) in enumerate(zip(np.asarray(starts).tolist(), np.asarray(stops).tolist())):
        length = b - a
        key = (length, k == last)
        if key not in slots:
            slots[key] = int_to_bases(_indicator_slot(length, group, k == last and length not in group),
                                      group.indicator_width)
        r = int(rank[k])
        lines.append(fwd[r] + slots[key] + int_to_bases(int(index[k]), INDEX_WIDTH) + text[a:b] + rev[r])
    return lines


def write_tube(out_dir, codes, starts, stops, usable: Sequence[Primer], cfg: TubeConfig, report: TubeReport,
               data: bytes, seeds: np.ndarray | None = None) -> Path:
    """Write strands, manifest and (for randomised payloads) the seed table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = pair_primers(usable)
    lines = strand_lines(codes, starts, stops, pairs, cfg)
    used = -(-len(lines) // cfg.parallel_factor) if lines else 0
    used = min(used, len(pairs))
    (out / STRAND_FILE).write_text("\n".join(lines) + ("\n" if lines else ""))
    if seeds is not None:
        with open(out / SEED_FILE, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["payload", "seed"])
            w.writerows(enumerate(np.asarray(seeds, dtype=np.uint64).tolist()))
    manifest = {
        "format": TUBE_FORMAT,
        "scheme": report.scheme,
        "codec": cfg.codec.value,
        "config": cfg.to_dict(),
        "strand_file": STRAND_FILE,
        "strands": len(lines),
        "pairs": [{"forward": [p.forward.id, str(p.forward.seq)], "reverse": [p.reverse.id, str(p.reverse.seq)]}
                  for p in pairs[:used]],
        "seed_table": SEED_FILE if seeds is not None else None,
        "input_bytes": len(data),
        "sha256": hashlib.sha256(data).hexdigest(),
        "report": report.to_dict(),
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n")
    return out


@dataclass
class Tube:
    strands: list[str]
    cfg: TubeConfig
    pairs: list[PrimerPair]
    seeds: dict[int, int] | None
    manifest: dict

    @property
    def report(self) -> TubeReport:
        return TubeReport.from_dict(self.manifest["report"])


def read_tube(path) -> Tube:
    root = Path(path)
    manifest = json.loads((root / MANIFEST_FILE).read_text())
    if manifest.get("format") != TUBE_FORMAT:
        raise MalformedStrand(f"unsupported tube format {manifest.get('format')!r}")
    cfg = TubeConfig.from_dict(manifest["config"])
    pairs = [PrimerPair(Primer(d["forward"][0], DnaSequence(d["forward"][1])),
                        Primer(d["reverse"][0], DnaSequence(d["reverse"][1]))) for d in manifest["pairs"]]
    lines = (root / manifest["strand_file"]).read_text().split()
    seeds = None
    if manifest.get("seed_table"):
        seeds = read_seed_table(root / manifest["seed_table"])
    return Tube(lines, cfg, pairs, seeds, manifest)


def read_seed_table(path) -> dict[int, int]:
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        return {int(a): int(b) for a, b in rows}


def _fields(strand, group: LengthGroup, rank_of: dict, rev_of: dict):
    """(pair rank, index, payload text, is_remainder) of a strand or strand line."""
    k = group.indicator_width
    p = PRIMER_LENGTH
    if isinstance(strand, str):
        text = strand.strip()
        if len(text) <= 2 * p + k + INDEX_WIDTH:
            raise MalformedStrand(f"strand of {len(text)} bases is shorter than its metadata")
        fwd, rev = text[:p], str(complement(text[len(text) - p:]))
        ind, idx, payload = text[p:p + k], text[p + k:p + k + INDEX_WIDTH], text[p + k + INDEX_WIDTH:len(text) - p]
    else:
        fwd, rev = str(strand.primer_fwd.seq), str(strand.primer_rev.seq)
        ind, idx, payload = strand.length_indicator, str(strand.internal_index), str(strand.payload)
    if fwd not in rank_of:
        raise MalformedStrand(f"forward primer {fwd} belongs to no pair")
    if rev_of[fwd] != rev:
        raise MalformedStrand(f"reverse primer {rev} does not match forward primer {fwd}")
    if len(ind) != k or set(ind) - set("ACGT") or set(idx) - set("ACGT") or set(payload) - set("ACGT"):
        raise MalformedStrand("strand holds characters outside ACGT")
    slot = bases_to_int(ind)
    if slot >= len(group):
        raise MalformedStrand(f"length indicator slot {slot} unused by group {group}")
    n, expected = len(payload), group.lengths[slot]
    if n == expected:
        rem = False
    elif n < expected and (slot == 0 or n >= group.lengths[slot - 1]) and n not in group:
        rem = True
    else:
        raise MalformedStrand(f"payload of {n} bases disagrees with indicator slot {slot}")
    return rank_of[fwd], bases_to_int(idx), payload, rem


def decode_tube(strands: Iterable, cfg: TubeConfig, pairs: Sequence[PrimerPair] | None = None,
                seeds: dict[int, int] | np.ndarray | None = None) -> bytes:
    """Reassemble payloads by (pair rank, internal index) and decode them.

    ``strands`` may be :class:`Strand` objects or strand lines.  Pair rank is
    the position in ``pairs`` (default: forward primer id order).
    """
    strands = list(strands)
    if pairs is None:
        seen = {}
        for s in strands:
            if isinstance(s, str):
                raise ValueError("strand lines need the tube's primer pairs")
            seen[s.primer_fwd.id] = PrimerPair(s.primer_fwd, s.primer_rev)
        pairs = [seen[i] for i in sorted(seen)]
    rank_of = {str(p.forward.seq): r for r, p in enumerate(pairs)}
    rev_of = {str(p.forward.seq): str(p.reverse.seq) for p in pairs}
    rows = [_fields(s, cfg.group, rank_of, rev_of) for s in strands]
    rows.sort(key=lambda t: (t[0], t[1]))
    parallel = cfg.parallel_factor
    for k, (rank, index, _, rem) in enumerate(rows):
        want_rank = min(k // parallel, len(pairs) - 1)
        want_index = k - want_rank * parallel
        if (rank, index) != (want_rank, want_index):
            raise MissingStrand(f"missing strand {want_index} of pair {want_rank}",
                                pair_rank=want_rank, index=want_index)
        if rem and k != len(rows) - 1:
            raise MalformedStrand(f"short payload at strand {index} of pair {rank} is not the last")
        if k and rows[k - 1][:2] == (rank, index):
            raise MalformedStrand(f"duplicate strand {index} of pair {rank}")
    lengths = np.array([len(t[2]) for t in rows], dtype=np.int64)
    codes = encode_text("".join(t[2] for t in rows))
    if seeds is not None:
        if isinstance(seeds, dict):
            table = np.zeros(lengths.size, dtype=np.uint64)
            for o, v in seeds.items():
                if o < table.size:
                    table[o] = v
        else:
            table = np.asarray(seeds, dtype=np.uint64)
        stops = np.cumsum(lengths)
        codes = randomize_rows(get_codec(cfg.codec), codes, stops - lengths, stops, table, restore=True)
    return decode_stream(DnaSequence(codes), cfg.codec)


def decode_tube_dir(path) -> bytes:
    tube = read_tube(path)
    return decode_tube(tube.strands, tube.cfg, tube.pairs, tube.seeds)


def tube_payloads(tube: Tube) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Concatenated payload codes, payload boundaries and the primer ids in use."""
    rank_of = {str(p.forward.seq): r for r, p in enumerate(tube.pairs)}
    rev_of = {str(p.forward.seq): str(p.reverse.seq) for p in tube.pairs}
    rows = sorted(_fields(s, tube.cfg.group, rank_of, rev_of) for s in tube.strands)
    lengths = np.array([len(t[2]) for t in rows], dtype=np.int64)
    codes = encode_text("".join(t[2] for t in rows))
    used = sorted({t[0] for t in rows})
    ids = [pid for r in used for pid in (tube.pairs[r].forward.id, tube.pairs[r].reverse.id)]
    return codes, np.cumsum(lengths)[:-1], ids


def verify_tube(path, library: Sequence[Primer], workers: int = 1) -> dict[int, int]:
    """Rescan every emitted payload; collision counts of the primers in use (all zero when sound)."""
    tube = read_tube(path)
    codes, cuts, ids = tube_payloads(tube)
    idx = Scanner.cached(library).count(DnaSequence(codes), cuts=cuts, workers=workers)
    counts = idx.counts()
    return {i: int(counts[i]) for i in ids}


def open_input(path) -> BinaryIO:
    return io.BufferedReader(open(path, "rb"))

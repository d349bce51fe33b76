"""Acceptance criteria 1-13 at their stated tolerances.

Each test records one PASS/FAIL line (collected by conftest into the
terminal summary) before asserting.  The large-corpus criteria share one
seeded corpus, the 2,000-primer seed-0 library and per-codec scans.
"""

import time

import numpy as np
import pytest

from vldna import cli
from vldna import pipeline as pl
from vldna.codec import decode, encode, get_codec
from vldna.collision import Scanner
from vldna.errors import NonConvergence
from vldna.planner import TABLE1_GROUPS, build_conflict_graph, covered_bases, mwis_exact, reachable_offsets, vl_dna
from vldna.planner.graph import ConflictGraph
from vldna.primerlib import Primer, generate_library
from vldna.seqcore import DEFAULT_GROUP, DnaSequence, decode_codes

from .oracles import mwis_bruteforce, oracle_scan

MiB = 1 << 20
CODECS = ["rotation", "blawat", "grass"]
CORPUS_SEED = 2024
RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- shared large-corpus state --------------------------------------------

@pytest.fixture(scope="module")
def library():
    return generate_library(2000, seed=0)


@pytest.fixture(scope="module")
def scanner(library):
    return Scanner.cached(library)


@pytest.fixture(scope="module")
def corpus64():
    return np.random.default_rng(CORPUS_SEED).integers(0, 256, 64 * MiB, dtype=np.uint8).tobytes()


@pytest.fixture(scope="module")
def corpus(corpus64):
    return corpus64[:32 * MiB]


@pytest.fixture(scope="module")
def config():
    return {c: pl.TubeConfig(buffer_target=32 * MiB, codec=c) for c in CODECS}


class VLRuns:
    """Lazily computed VL-DNA runs per codec, sharing one pruned scan."""

    def __init__(self, corpus, config, library, scanner, tmp):
        self.corpus, self.config, self.library, self.scanner, self.tmp = corpus, config, library, scanner, tmp
        self.full = {}
        self.runs = {}
        self.seconds = {}

    def index(self, codec):
        if codec not in self.full:
            t = time.perf_counter()
            codes = pl.encode_stream(self.corpus, codec)
            self.full[codec] = self.scanner.scan(codes, prune=True)
            self.seconds[codec] = self.seconds.get(codec, 0.0) + time.perf_counter() - t
        return self.full[codec]

    def run(self, codec, order="by_collisions"):
        """(report, converged, tube_dir or None)."""
        key = (codec, order)
        if key not in self.runs:
            full = self.index(codec)
            out = self.tmp / f"{codec}_{order}"
            t = time.perf_counter()
            try:
                rep = pl.run_vldna_tube(self.corpus, self.config[codec], self.library, order=order,
                                        out_dir=out, scanner=self.scanner, full_index=full)
                self.runs[key] = (rep, True, out)
            except NonConvergence as exc:
                self.runs[key] = (exc.best, False, None)
            self.seconds[codec] = self.seconds.get(codec, 0.0) + time.perf_counter() - t
        return self.runs[key]


@pytest.fixture(scope="module")
def vl(corpus, config, library, scanner, tmp_path_factory):
    return VLRuns(corpus, config, library, scanner, tmp_path_factory.mktemp("tubes"))


@pytest.fixture(scope="module")
def baselines(corpus, config, library, scanner):
    """codec -> {1: fixed, 5: rand5, 10: rand10} reports."""
    cache = {}

    def get(codec):
        if codec not in cache:
            res = pl.run_baselines(corpus, config[codec], library, (1, 5, 10), scanner=scanner)
            cache[codec] = {b: rep for b, (rep, _) in res.items()}
        return cache[codec]
    return get


# -- 1-6: exact property suites -------------------------------------------

def test_criterion_01_codec_round_trips():
    t = time.perf_counter()
    rng = np.random.default_rng(1)
    failures = []
    densities = {}
    for codec in CODECS:
        for _ in range(10_000):
            data = rng.integers(0, 256, int(rng.integers(0, 400)), dtype=np.uint8).tobytes()
            if decode(encode(data, codec), codec) != data:
                failures.append(codec)
        big = rng.integers(0, 256, 10 ** 5, dtype=np.uint8).tobytes()
        densities[codec] = 8 * len(big) / len(encode(big, codec))
    target = {c: get_codec(c).reported_density for c in CODECS}
    dens_ok = all(abs(densities[c] - target[c]) / target[c] < 0.01 for c in CODECS)
    secs = time.perf_counter() - t
    detail = (f"{3 * 10_000 - len(failures)}/30000 round trips, densities "
              + ", ".join(f"{c} {densities[c]:.4f} vs {target[c]}" for c in CODECS) + f", {secs:.1f}s")
    record(1, not failures and dens_ok and secs < 60, detail)


def test_criterion_02_rotation_adjacency():
    t = time.perf_counter()
    n_bytes = int(np.ceil(10 ** 7 * np.log2(3) / 8)) + 64
    data = np.random.default_rng(2).integers(0, 256, n_bytes, dtype=np.uint8).tobytes()
    codes = pl.encode_stream(data, "rotation").codes
    repeats = int(np.count_nonzero(codes[1:] == codes[:-1]))
    secs = time.perf_counter() - t
    record(2, codes.size >= 10 ** 7 and repeats == 0 and secs < 60,
           f"{codes.size} bases, {repeats} adjacent repeats, {secs:.1f}s")


def _instance(rng):
    n = int(rng.integers(1, 33))
    lib = [Primer(i, DnaSequence(decode_codes(rng.integers(0, 4, 20).astype(np.uint8)))) for i in range(n)]
    codes = rng.integers(0, 4, int(rng.integers(13, 10_001))).astype(np.uint8)
    for _ in range(int(rng.integers(0, 6))):
        if codes.size < 30:
            break
        p = lib[int(rng.integers(n))].seq.codes
        if rng.random() < 0.5:
            p = (3 - p[::-1]).astype(np.uint8)
        k = int(rng.integers(13, 21))
        off = int(rng.integers(0, 21 - k))
        piece = p[off:off + k].copy()
        for _ in range(int(rng.integers(0, 4))):
            j = int(rng.integers(k))
            piece[j] = (piece[j] + int(rng.integers(1, 4))) % 4
        at = int(rng.integers(0, codes.size - k))
        codes[at:at + k] = piece
    return lib, codes


def test_criterion_03_scanner_oracle():
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    bad = regions = 0
    for _ in range(1000):
        lib, codes = _instance(rng)
        got = Scanner(lib).scan(DnaSequence(codes)).as_set()
        want = oracle_scan(codes, [p.seq.codes for p in lib])
        regions += len(want)
        bad += got != want
    secs = time.perf_counter() - t
    record(3, bad == 0 and secs < 600, f"{bad} mismatching instances of 1000 ({regions} regions), {secs:.0f}s")


def test_criterion_04_reachability():
    t = time.perf_counter()
    horizon = 10 ** 5
    lengths = DEFAULT_GROUP.lengths
    reach = np.zeros(horizon + 1, bool)
    reach[0] = True
    for x in range(10, horizon + 1, 10):
        reach[x] = any(x >= l and reach[x - l] for l in lengths)
    brute = {x for x in range(10, horizon + 1, 10) if reach[x]}
    ours = reachable_offsets(DEFAULT_GROUP, horizon)
    derived = {150, 160, 190, 200, 300, 310, 320, 340, 350, 360, 380, 390, 400}
    below = {x for x in ours if x < 450}
    every = all(x in ours for x in range(450, horizon + 1, 10))
    secs = time.perf_counter() - t
    ok = ours == brute and every and 440 not in ours and below == derived and len(derived) == 13 and secs < 1
    record(4, ok, f"{len(ours)} reachable offsets, all of 450..1e5 {every}, 440 reachable {440 in ours}, "
                  f"{secs:.2f}s")


def test_criterion_05_covered_bases_ranking():
    t = time.perf_counter()
    ref = covered_bases(DEFAULT_GROUP, 10_000)
    others = [g for g in TABLE1_GROUPS if len(g) == 4 and g != DEFAULT_GROUP]
    worse = [str(g) for g in others if covered_bases(g, 10_000) > ref]
    secs = time.perf_counter() - t
    record(5, len(others) >= 8 and not worse and secs < 1,
           f"{DEFAULT_GROUP} covers {ref}, beaten by {worse or 'none'} of {len(others)} groups, {secs:.2f}s")


def test_criterion_06_heuristic_vs_oracle():
    t = time.perf_counter()
    rng = np.random.default_rng(6)
    ratios = []
    bad = 0
    for _ in range(500):
        n = int(rng.integers(1, 17))
        weights = {i: float(rng.uniform(1, 100)) for i in range(n)}
        p = rng.uniform(0.05, 0.7)
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < p]
        counts = {i: int(rng.integers(1, 10)) for i in range(n)}
        g = ConflictGraph.from_edges(weights, edges, counts)
        rec = vl_dna(None, g, "by_collisions").recovered
        w = sum(weights[v] for v in rec)
        _, best = mwis_exact(g)
        brute, _ = mwis_bruteforce([weights[i] for i in range(n)], edges)
        independent = all(not g.has_edge(a, b) for a in rec for b in rec if a != b)
        bad += not independent or w > best + 1e-9 or abs(best - brute) > 1e-9
        ratios.append(w / best)
    secs = time.perf_counter() - t
    record(6, bad == 0 and secs < 60,
           f"{bad} violations in 500 graphs, mean weight ratio {np.mean(ratios):.4f}, {secs:.1f}s")


# -- 7-11: desk-scale corpus ----------------------------------------------

def test_criterion_07_end_to_end_soundness(vl, corpus, library):
    t = time.perf_counter()
    notes, ok = [], True
    for codec in CODECS:
        rep, converged, out = vl.run(codec)
        if not converged:
            ok = False
            notes.append(f"{codec}: no tube (best mismatch {rep.mismatch:.3f} at {rep.input_bytes} bytes, "
                         f"{rep.usable_primers} usable)")
            continue
        hits = pl.verify_tube(out, library)
        dirty = sum(1 for v in hits.values() if v)
        exact = pl.decode_tube_dir(out) == corpus[:rep.input_bytes]
        ok &= dirty == 0 and exact
        notes.append(f"{codec}: {rep.input_bytes} bytes, {len(hits)} primers used, {dirty} collided, "
                     f"decode exact {exact}")
    secs = time.perf_counter() - t + sum(vl.seconds.values())
    record(7, ok and secs < 1800, "; ".join(notes) + f"; {secs:.0f}s")


def test_criterion_08_dominance_and_ordering(vl, baselines):
    notes, ok = [], True
    fixed = {}
    for codec in CODECS:
        b = baselines(codec)
        v, converged, _ = vl.run(codec)
        fixed[codec] = b[1].usable_primers
        # a non-converged best attempt covers a shorter prefix, not the same corpus
        dom = converged and v.usable_primers > b[1].usable_primers
        mono = b[10].usable_primers >= b[5].usable_primers >= b[1].usable_primers
        ok &= dom and mono
        notes.append(f"{codec}: vldna {v.usable_primers}{'' if converged else ' (not converged)'} fixed {b[1].usable_primers} "
                     f"rand5 {b[5].usable_primers} rand10 {b[10].usable_primers}")
    order = fixed["rotation"] > fixed["grass"] > fixed["blawat"]
    record(8, ok and order, "; ".join(notes) + f"; fixed ordering R>G>B {order}")


def test_criterion_09_order_difference(vl):
    notes, ok = [], True
    for codec in CODECS:
        ra, ca, _ = vl.run(codec, "by_collisions")
        rb, cb, _ = vl.run(codec, "by_conflicts")
        a, b = ra.recovered_primers, rb.recovered_primers
        rel = abs(a - b) / a if a else float("inf")
        ok &= ca and cb and rel < 0.10
        conv = "" if ca and cb else " (not converged)"
        notes.append(f"{codec}: {a} vs {b} recovered{conv} (rel {rel:.3f})")
    record(9, ok, "; ".join(notes))


def test_criterion_10_rank_correlation(vl, corpus, library):
    idx = vl.index("rotation")
    collided = int((idx.counts() > 0).sum())
    try:
        _, r = cli.collision_conflict_correlation(corpus, "rotation", library, index=idx)
    except ValueError as exc:
        record(10, False, f"no coefficient over {collided} collided primers: {exc}")
    record(10, r > 0.8, f"Pearson over ranks {r:.4f} on {collided} collided primers")


def test_criterion_11_linear_time(corpus64, scanner):
    full_codes = np.ascontiguousarray(pl.encode_stream(corpus64, "rotation").codes)
    full = scanner.scan(DnaSequence(full_codes), prune=True)
    xs, ys, sizes = [], [], []
    for mb in (8, 16, 32, 64):
        if mb == 64:
            idx = full
        else:
            codes = np.ascontiguousarray(pl.encode_stream(corpus64[:mb * MiB], "rotation").codes)
            idx = pl.prefix_index(full, full_codes, codes, scanner)
        graph = build_conflict_graph(idx, DEFAULT_GROUP, 1_550_000)
        times = []
        for _ in range(5):
            t = time.perf_counter()
            plan = vl_dna(idx, graph, "by_collisions")
            times.append(time.perf_counter() - t)
        sizes.append(idx.seq_len)
        xs.append(int(idx.counts()[plan.recovered].sum()) if plan.recovered else 0)
        ys.append(float(np.median(times)))
    r2 = _r_squared(xs, ys)
    # sequence length is reported for context only; the criterion regresses on collisions cut
    record(11, r2 > 0.95, "cut/seconds " + ", ".join(f"{x}/{y:.4f}" for x, y in zip(xs, ys))
           + f"; R^2 {r2:.4f} (vs bases {_r_squared(sizes, ys):.4f})")


def _r_squared(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if np.ptp(xs) == 0:
        return 0.0
    pred = np.polyval(np.polyfit(xs, ys, 1), xs)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    return 1 - float(np.sum((ys - pred) ** 2)) / ss_tot if ss_tot else 0.0


# -- 12-13 ------------------------------------------------------------------

def test_criterion_12_capacity_formula():
    got = pl.tube_capacity(200, 1.6, 1_550_000, 56)
    record(12, got == 1_736_000_000, f"tube_capacity(200, 1.6, 1.55e6, 56) = {got}")


def test_criterion_13_binary_search_convergence():
    from .test_pipeline import corpus as make_corpus, doublet_library

    lib = doublet_library(16)
    buf = make_corpus(120_000, 7)
    gen0 = -(-len(pl.encode_stream(buf, "rotation")) // 200)
    parallel = round(gen0 / 1.2 / 8)
    cfg = pl.TubeConfig(buffer_target=len(buf), parallel_factor=parallel, codec="rotation")
    rep = pl.run_vldna_tube(buf, cfg, lib)
    h = rep.history
    over = h[0]["generated"] / h[0]["storable"]
    fits = h[0]["storable"] * h[0]["input_bytes"] / h[0]["generated"]
    midpoint = len(h) > 1 and h[1]["input_bytes"] == int((h[0]["input_bytes"] + fits) // 2)
    ok = abs(over - 1.2) < 0.01 and midpoint and rep.mismatch <= 0.05 and rep.iterations <= 64
    record(13, ok, f"first pass overshoot {over:.3f}, midpoint update {midpoint}, "
                   f"final mismatch {rep.mismatch:.4f} after {rep.iterations} iterations")

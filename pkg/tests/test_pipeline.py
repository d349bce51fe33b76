import json
import random

import numpy as np
import pytest

from vldna import pipeline as pl
from vldna.collision import Scanner, count_statistics
from vldna.errors import MalformedStrand, MissingStrand, NonConvergence
from vldna.primerlib import Primer, generate_library
from vldna.seqcore import DnaSequence


def doublet_library(n, seed=0):
    """Primers built from doubled bases; rotation-coded data cannot collide with them."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        d = [int(rng.integers(4))]
        while len(d) < 10:
            x = int(rng.integers(4))
            if x != d[-1]:
                d.append(x)
        out.append(Primer(i, DnaSequence(np.repeat(np.array(d, np.uint8), 2))))
    return out


def corpus(n, seed=0):
    return np.random.default_rng(seed).integers(0, 256, n, dtype=np.uint8).tobytes()


@pytest.fixture(scope="module")
def library():
    return generate_library(64, seed=1)


@pytest.fixture(scope="module")
def data():
    return corpus(200_000)


def test_capacity_formula():
    assert pl.tube_capacity(200, 1.6, 1_550_000, 56) == 1_736_000_000
    assert pl.tube_capacity(200, 1.6, 1_550_000, 0) == 0
    big = pl.tube_capacity(199.5, 1.6, 1_550_000, 9_702)
    assert 1e11 <= big < 1e12  # same order as 257.35 GB
    with pytest.raises(ValueError):
        pl.tube_capacity(-1, 1.6, 1, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        pl.TubeConfig(tolerance=0)
    with pytest.raises(ValueError):
        pl.TubeConfig(parallel_factor=0)
    cfg = pl.TubeConfig(codec="grass")
    assert pl.TubeConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_fixed_baseline_without_collisions():
    lib = doublet_library(10)
    cfg = pl.TubeConfig(buffer_target=5000, codec="rotation")
    rep = pl.run_baseline_fixed(corpus(5000), cfg, lib)
    assert rep.usable_primers == 10 and rep.collided_primers == 0
    assert rep.capacity_bytes == pl.tube_capacity(rep.avg_payload_len, 1.58, cfg.parallel_factor, 10)


@pytest.mark.parametrize("codec", ["rotation", "blawat", "grass"])
def test_fixed_baseline_matches_count_statistics(codec, library, data):
    cfg = pl.TubeConfig(buffer_target=60_000, codec=codec)
    rep = pl.run_baseline_fixed(data, cfg, library)
    seq = pl.encode_stream(data[:60_000], codec)
    starts, _ = pl.fixed_rows(len(seq), 200)
    stats = count_statistics(Scanner(library).scan(seq, cuts=starts[1:]), len(library))
    assert rep.collided_primers == stats.collided
    assert rep.usable_primers == len(library) - stats.collided
    assert rep.strands == starts.size and rep.recovered_primers == 0


def test_randomized_pass_budgets(library, data):
    cfg = pl.TubeConfig(buffer_target=60_000, codec="blawat")
    res = pl.run_baselines(data, cfg, library, budgets=(1, 5, 10))
    fixed = pl.run_baseline_fixed(data, cfg, library)
    assert res[1][0].usable_primers == fixed.usable_primers
    assert not res[1][1].seeds.any()
    assert res[10][0].usable_primers >= res[5][0].usable_primers >= res[1][0].usable_primers
    # per payload the chosen variant never hits more primers than the plain one
    assert res[5][1].seeds.any()


@pytest.mark.parametrize("codec", ["rotation", "blawat", "grass"])
def test_randomized_tube_round_trip(tmp_path, codec):
    lib = doublet_library(8)
    buf = corpus(30_000, 3)
    cfg = pl.TubeConfig(buffer_target=len(buf), codec=codec, parallel_factor=400)
    try:
        rep = pl.run_baseline_randomized(buf, cfg, lib, attempts=5, out_dir=tmp_path)
    except pl.VLDNAError:
        pytest.skip("no usable primer pair for this codec")
    assert (tmp_path / "seeds.csv").read_text().startswith("payload,seed\n")
    assert pl.decode_tube_dir(tmp_path) == buf
    assert rep.scheme == "rand5"


def test_single_attempt_is_fixed(library, data):
    cfg = pl.TubeConfig(buffer_target=40_000, codec="grass")
    assert pl.run_baseline_randomized(data, cfg, library, attempts=1).usable_primers == \
        pl.run_baseline_fixed(data, cfg, library).usable_primers


@pytest.fixture(scope="module")
def vl_tube(tmp_path_factory, library, data):
    out = tmp_path_factory.mktemp("tube")
    cfg = pl.TubeConfig(buffer_target=len(data), parallel_factor=500, codec="rotation")
    rep = pl.run_vldna_tube(data, cfg, library, out_dir=out)
    return out, cfg, rep


def test_vldna_round_trip_and_soundness(vl_tube, library, data):
    out, cfg, rep = vl_tube
    assert rep.recovered_primers > 0
    assert rep.mismatch <= cfg.tolerance or rep.storable_payloads >= rep.strands
    assert pl.decode_tube_dir(out) == data[:rep.input_bytes]
    assert set(pl.verify_tube(out, library).values()) == {0}
    fixed = pl.run_baseline_fixed(data[:rep.input_bytes], cfg, library)
    assert rep.usable_primers >= fixed.usable_primers
    assert rep.capacity_bytes >= fixed.capacity_bytes
    assert rep.avg_payload_len >= 0.95 * cfg.max_payload


def test_manifest_contents(vl_tube):
    out, cfg, rep = vl_tube
    m = json.loads((out / "manifest.json").read_text())
    assert m["format"] == "vldna-tube/1" and m["codec"] == "rotation" and m["seed_table"] is None
    assert m["strands"] == rep.strands == len((out / "strands.txt").read_text().split())
    assert pl.TubeReport.from_dict(m["report"]) == rep
    assert len(m["pairs"]) == -(-rep.strands // cfg.parallel_factor)


def test_decode_is_order_independent(vl_tube, data):
    out, cfg, rep = vl_tube
    tube = pl.read_tube(out)
    lines = list(tube.strands)
    random.Random(5).shuffle(lines)
    assert pl.decode_tube(lines, cfg, tube.pairs) == data[:rep.input_bytes]


def test_decode_reports_missing_strand(vl_tube):
    out, cfg, _ = vl_tube
    tube = pl.read_tube(out)
    lines = tube.strands[:42] + tube.strands[43:]
    with pytest.raises(MissingStrand) as err:
        pl.decode_tube(lines, cfg, tube.pairs)
    assert err.value.index == 42 and err.value.pair_rank == 0


def test_decode_rejects_malformed(vl_tube):
    out, cfg, _ = vl_tube
    tube = pl.read_tube(out)
    lines = list(tube.strands)
    lines[3] = lines[3][:60] + lines[3][61:]
    with pytest.raises(MalformedStrand):
        pl.decode_tube(lines, cfg, tube.pairs)
    with pytest.raises(MalformedStrand):
        pl.decode_tube(["ACGT" * 70], cfg, tube.pairs)


def _overshoot_setup(over=1.2):
    lib = doublet_library(16)
    buf = corpus(120_000, 7)
    gen0 = -(-len(pl.encode_stream(buf, "rotation")) // 200)
    parallel = round(gen0 / over / 8)
    return lib, buf, pl.TubeConfig(buffer_target=len(buf), parallel_factor=parallel, codec="rotation")


def test_binary_search_midpoint_update():
    lib, buf, cfg = _overshoot_setup()
    rep = pl.run_vldna_tube(buf, cfg, lib)
    h = rep.history
    first = h[0]
    assert first["generated"] > first["storable"] * 1.19
    fits = first["storable"] * first["input_bytes"] / first["generated"]
    assert h[1]["input_bytes"] == int((first["input_bytes"] + fits) // 2)
    assert rep.mismatch <= 0.05 and rep.iterations == len(h) <= 64
    gaps = [abs(x["generated"] - x["storable"]) for x in h]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_non_convergence_reports_best():
    lib, buf, cfg = _overshoot_setup()
    cfg = pl.TubeConfig(**{**cfg.__dict__, "max_iterations": 1})
    with pytest.raises(NonConvergence) as err:
        pl.run_vldna_tube(buf, cfg, lib)
    assert err.value.best.iterations == 1 and err.value.best.mismatch > 0.05


def test_tiny_input_accepted_in_one_pass():
    lib = doublet_library(12)
    cfg = pl.TubeConfig(buffer_target=10_000)
    rep = pl.run_vldna_tube(corpus(3000), cfg, lib)
    assert rep.iterations == 1 and rep.storable_payloads > rep.strands


def test_prefix_index_matches_direct_scan(library, data):
    sc = Scanner(library)
    full_codes = np.ascontiguousarray(pl.encode_stream(data[:50_000], "rotation").codes)
    full = sc.scan(DnaSequence(full_codes), prune=True)
    for size in (7_001, 31_337, 49_999):
        codes = np.ascontiguousarray(pl.encode_stream(data[:size], "rotation").codes)
        got = pl.prefix_index(full, full_codes, codes, sc)
        want = sc.scan(DnaSequence(codes))
        counts = want.counts()
        for p in range(len(library)):
            if got.truncated[p]:
                assert counts[p] >= got.counts()[p] > 0
            else:
                assert got.counts()[p] == counts[p]
                rows = {(c.start, c.end) for c in got.for_primer(p)}
                assert rows == {(c.start, c.end) for c in want.for_primer(p)}


def test_assign_pairs_sequential_fill():
    rank, index = pl.assign_pairs(7, 3, 3)
    assert rank.tolist() == [0, 0, 0, 1, 1, 1, 2]
    assert index.tolist() == [0, 1, 2, 0, 1, 2, 0]
    rank, index = pl.assign_pairs(5, 1, 3)
    assert rank.tolist() == [0] * 5 and index.tolist() == [0, 1, 2, 3, 4]

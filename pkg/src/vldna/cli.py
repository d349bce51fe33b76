"""Command-line driver: tube simulation plus the scaled experiment reports.

Every report is a CSV with a pinned header (see the ``*_COLUMNS``
constants); bump ``CSV_VERSION`` whenever one of them changes.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import pipeline as pl
from .codec import CodecId
from .collision import CollisionRule, Scanner, count_statistics
from .errors import NonConvergence, VLDNAError
from .planner import TABLE1_GROUPS, analyze_group, build_conflict_graph, vl_dna
from .primerlib import generate_library, load_library, save_library
from .seqcore import DEFAULT_GROUP, DnaSequence, LengthGroup, read_packed, read_text, write_packed, write_text

log = logging.getLogger("vldna")

CSV_VERSION = 1
SCHEMES_COLUMNS = ["codec", "scheme", "usable_primers", "recovered_primers", "collided_primers",
                   "avg_payload_len", "strands", "capacity_bytes", "collisions_cut", "density",
                   "parallel_factor", "input_bytes", "converged"]
GROUPS_COLUMNS = ["group", "lengths", "indicator_bases", "covered_bases", "full_coverage_from",
                  "usable_primers", "recovered_primers", "avg_payload_len", "capacity_bytes", "converged"]
HISTOGRAM_COLUMNS = ["collisions", "primers"]
CORRELATION_COLUMNS = ["primer_id", "collisions", "conflicts", "collision_rank", "conflict_rank"]
REPORT_COLUMNS = ["scheme", "codec", "usable_primers", "recovered_primers", "collided_primers",
                  "avg_payload_len", "strands", "storable_payloads", "capacity_bytes", "collisions_cut",
                  "input_bytes", "iterations"]


# -- shared inputs ---------------------------------------------------------

def load_corpus(args) -> bytes:
    """Bytes from ``--in`` or a seeded synthetic corpus of ``--size`` bytes."""
    path = getattr(args, "input", None)
    if path:
        with open(path, "rb") as fh:
            return pl._read_buffer(fh, args.buffer)
    size = min(args.size, args.buffer)
    return np.random.default_rng(args.seed).integers(0, 256, size, dtype=np.uint8).tobytes()


def load_primers(args):
    if args.primers:
        return load_library(args.primers)
    return generate_library(args.library_size, seed=args.primer_seed)


def read_sequence(path) -> DnaSequence:
    raw = Path(path).read_bytes()
    if raw[:8] == b"VLDNASEQ":
        return read_packed(path)
    seqs = read_text(path)
    if len(seqs) != 1:
        raise VLDNAError(f"{path}: expected exactly one sequence line, found {len(seqs)}")
    return seqs[0]


def make_config(args, codec=None, group=None) -> pl.TubeConfig:
    return pl.TubeConfig(buffer_target=args.buffer, parallel_factor=args.parallel, tolerance=args.tolerance,
                         group=group or args.group, codec=codec or args.codec, workers=args.jobs)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k)) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return v


# -- experiment cells ------------------------------------------------------

@dataclass
class ExperimentSpec:
    corpus: dict
    codecs: list
    schemes: list
    groups: list = field(default_factory=lambda: [DEFAULT_GROUP])
    output_dir: str = "."
    config: dict = field(default_factory=dict)
    primers: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.codecs or not self.schemes:
            raise ValueError("an experiment needs at least one codec and one scheme")
        unknown = set(self.schemes) - set(pl.SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")


def _vldna_row(data, cfg, lib, order, scanner, full):
    try:
        rep = pl.run_vldna_tube(data, cfg, lib, order=order, scanner=scanner, full_index=full)
        return rep, True
    except NonConvergence as exc:
        log.warning("%s/%s: %s", cfg.codec.value, order, exc)
        return exc.best, False


def scheme_cell(data: bytes, codec: str, schemes, lib, base_cfg: dict) -> list[dict]:
    """All requested schemes for one codec, sharing scans between them."""
    cfg = pl.TubeConfig.from_dict({**base_cfg, "codec": codec})
    scanner = Scanner.cached(lib)
    rows = []
    budgets = sorted({1} | {int(s[4:]) for s in schemes if s.startswith("rand")})
    baselines = {}
    if any(s == "fixed" or s.startswith("rand") for s in schemes):
        baselines = pl.run_baselines(data, cfg, lib, budgets, scanner=scanner)
    full = None
    for s in schemes:
        if s == "fixed" or s.startswith("rand"):
            rep, ok = baselines[1 if s == "fixed" else int(s[4:])][0], True
        else:
            if full is None:
                codes = pl.encode_stream(data[:cfg.buffer_target], codec)
                full = scanner.scan(codes, workers=cfg.workers, prune=True)
            rep, ok = _vldna_row(data, cfg, lib, s.replace("vldna-", "by_"), scanner, full)
        row = rep.to_dict()
        row.update(codec=codec, scheme=s, converged=int(ok))
        rows.append(row)
    return rows


def _fan_out(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def compare_schemes(spec: ExperimentSpec, data: bytes, lib, jobs: int = 1) -> list[dict]:
    tasks = [(data, c, spec.schemes, lib, spec.config) for c in spec.codecs]
    out = []
    for rows in _fan_out(scheme_cell, tasks, jobs):
        out.extend(rows)
    return out


def group_cell(data: bytes, group: LengthGroup, lib, base_cfg: dict, horizon: int) -> dict:
    cfg = pl.TubeConfig.from_dict({**base_cfg, "group": list(group.lengths)})
    info = analyze_group(group, horizon)
    rep, ok = _vldna_row(data, cfg, lib, "by_collisions", Scanner.cached(lib), None)
    row = {"group": str(group), "lengths": len(group), "indicator_bases": group.indicator_width,
           "covered_bases": info.covered_bases,
           "full_coverage_from": "" if info.threshold is None else info.threshold, "converged": int(ok)}
    row.update({k: getattr(rep, k) for k in ("usable_primers", "recovered_primers", "avg_payload_len",
                                             "capacity_bytes")})
    return row


def compare_groups(spec: ExperimentSpec, data: bytes, lib, jobs: int = 1, horizon: int = 10_000) -> list[dict]:
    for g in spec.groups:
        if g.max_length != 200:
            raise ValueError(f"group {g} does not top out at 200 bases")
    tasks = [(data, g, lib, spec.config, horizon) for g in spec.groups]
    return _fan_out(group_cell, tasks, jobs)


def collision_histogram(data: bytes, codec: str, lib) -> tuple[list[dict], dict]:
    """Primers per collision count over the whole encoding, plus summary statistics."""
    seq = pl.encode_stream(data, codec)
    idx = Scanner.cached(lib).count(seq)
    st = count_statistics(idx, len(lib))
    rows = [{"collisions": k, "primers": v} for k, v in sorted(st.histogram.items())]
    summary = {"codec": codec, "library_size": st.library_size, "collided": st.collided,
               "collided_fraction": st.fraction, "total_collisions": st.total,
               "mean_per_collided": st.mean_per_collided}
    return rows, summary


def rank_correlation(collisions, conflicts) -> float:
    """Pearson coefficient between the (average-tie) ranks of two sequences."""
    a = stats.rankdata(collisions)
    b = stats.rankdata(conflicts)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise ValueError("a constant ranking has no correlation")
    return float(stats.pearsonr(a, b)[0])


def conflict_ranks(index, group: LengthGroup, parallel: float) -> list[dict]:
    graph = build_conflict_graph(index, group, parallel)
    ids = graph.ids
    coll = graph.counts.astype(np.int64)
    conf = graph.degrees()
    cr, fr = stats.rankdata(coll), stats.rankdata(conf)
    return [{"primer_id": int(p), "collisions": int(c), "conflicts": int(d), "collision_rank": float(x),
             "conflict_rank": float(y)} for p, c, d, x, y in zip(ids, coll, conf, cr, fr)]


def collision_conflict_correlation(data: bytes, codec: str, lib, group=DEFAULT_GROUP,
                                   parallel: float = 1_550_000, index=None) -> tuple[list[dict], float]:
    if index is None:
        index = Scanner.cached(lib).scan(pl.encode_stream(data, codec), prune=True)
    rows = conflict_ranks(index, group, parallel)
    if len(rows) < 2:
        raise ValueError("correlation needs at least two collided primers")
    r = rank_correlation([x["collisions"] for x in rows], [x["conflicts"] for x in rows])
    return rows, r


# -- subcommands -----------------------------------------------------------

def cmd_gen_primers(args):
    lib = generate_library(args.count, seed=args.seed)
    save_library(args.out, lib)
    print(f"{len(lib)} primers -> {args.out}")


def cmd_encode(args):
    data = load_corpus(args)
    seq = pl.encode_stream(data, args.codec)
    if args.packed:
        write_packed(args.out, seq)
    else:
        write_text(args.out, [seq])
    print(f"{len(data)} bytes -> {len(seq)} bases ({args.codec})")


def cmd_scan(args):
    seq = read_sequence(args.input)
    lib = load_primers(args)
    cuts = np.arange(args.payload, len(seq), args.payload) if args.payload else None
    scanner = Scanner.cached(lib, CollisionRule(orientation=args.orientation))
    idx = scanner.scan(seq, cuts=cuts, workers=args.jobs, prune=args.prune)
    idx.write_csv(args.out)
    st = count_statistics(idx, len(lib))
    print(json.dumps({"collisions": len(idx), "collided": st.collided, "fraction": st.fraction}))


def cmd_plan(args):
    seq = read_sequence(args.input)
    lib = load_primers(args)
    idx = Scanner.cached(lib).scan(seq, workers=args.jobs, prune=True)
    graph = build_conflict_graph(idx, args.group, args.parallel)
    plan = vl_dna(idx, graph, args.order)
    text = plan.to_text()
    if plan.plan is not None:
        text += "lengths " + " ".join(map(str, plan.plan.lengths)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    data = load_corpus(args)
    lib = load_primers(args)
    cfg = make_config(args)
    if args.scheme == "fixed":
        rep = pl.run_baseline_fixed(data, cfg, lib, out_dir=args.out)
    elif args.scheme.startswith("rand"):
        rep = pl.run_baseline_randomized(data, cfg, lib, int(args.scheme[4:]), out_dir=args.out)
    else:
        order = args.order or args.scheme.replace("vldna-", "by_")
        rep = pl.run_vldna_tube(data, cfg, lib, order=order, out_dir=args.out)
    print(json.dumps({k: v for k, v in rep.to_dict().items() if k != "history"}))


def cmd_decode(args):
    data = pl.decode_tube_dir(args.tube)
    Path(args.out).write_bytes(data)
    print(f"{len(data)} bytes -> {args.out}")


def cmd_report(args):
    rep = pl.read_tube(args.tube).report
    row = rep.to_dict()
    if args.format == "json":
        print(json.dumps(row, indent=2))
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=REPORT_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerow({k: _fmt(row[k]) for k in REPORT_COLUMNS})


def _spec(args, schemes=None, groups=None) -> ExperimentSpec:
    return ExperimentSpec(corpus={"path": args.input, "size": args.size, "seed": args.seed},
                          codecs=args.codecs, schemes=schemes or ["fixed"], groups=groups or [args.group],
                          output_dir=args.out, config=make_config(args).to_dict(),
                          primers={"path": args.primers, "count": args.library_size, "seed": args.primer_seed})


def cmd_compare_schemes(args):
    spec = _spec(args, schemes=args.schemes)
    rows = compare_schemes(spec, load_corpus(args), load_primers(args), args.jobs)
    write_csv(Path(args.out) / "schemes.csv", SCHEMES_COLUMNS, rows)
    print(f"{len(rows)} rows -> {Path(args.out) / 'schemes.csv'}")


def cmd_compare_groups(args):
    groups = [LengthGroup.parse(g) for g in args.groups] if args.groups else list(TABLE1_GROUPS)
    spec = _spec(args, groups=groups)
    rows = compare_groups(spec, load_corpus(args), load_primers(args), args.jobs, args.horizon)
    write_csv(Path(args.out) / "groups.csv", GROUPS_COLUMNS, rows)
    print(f"{len(rows)} rows -> {Path(args.out) / 'groups.csv'}")


def cmd_histogram(args):
    rows, summary = collision_histogram(load_corpus(args), args.codec, load_primers(args))
    write_csv(Path(args.out) / f"histogram_{args.codec}.csv", HISTOGRAM_COLUMNS, rows)
    print(json.dumps(summary))


def cmd_correlation(args):
    rows, r = collision_conflict_correlation(load_corpus(args), args.codec, load_primers(args),
                                             args.group, args.parallel)
    write_csv(Path(args.out) / f"correlation_{args.codec}.csv", CORRELATION_COLUMNS, rows)
    print(json.dumps({"codec": args.codec, "primers": len(rows), "pearson": r}))


# -- argument parsing ------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    def d(v):
        return argparse.SUPPRESS if suppress else v

    p.add_argument("--seed", type=int, default=d(0), help="corpus (or primer) seed")
    p.add_argument("--primers", default=d(None), help="primer library file, one primer per line")
    p.add_argument("--group", type=LengthGroup.parse, default=d(DEFAULT_GROUP), help="e.g. 150/160/190/200")
    p.add_argument("--parallel", type=int, default=d(1_550_000), help="strands per primer pair")
    p.add_argument("--jobs", type=int, default=d(1), help="worker processes/threads")
    p.add_argument("--library-size", type=int, default=d(2000), help="generated library size without --primers")
    p.add_argument("--primer-seed", type=int, default=d(0))
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _corpus_flags(p):
    p.add_argument("--in", dest="input", help="input data file (default: synthetic corpus)")
    p.add_argument("--size", type=int, default=1 << 20, help="synthetic corpus size in bytes")
    p.add_argument("--buffer", type=int, default=pl.DEFAULT_BUFFER, help="tube buffer target in bytes")
    p.add_argument("--tolerance", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vldna", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    codecs = [c.value for c in CodecId]

    p = add("gen-primers", cmd_gen_primers, "generate a primer library")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("encode", cmd_encode, "RS-protect and encode data to one sequence")
    _corpus_flags(p)
    p.add_argument("--codec", choices=codecs, default="rotation")
    p.add_argument("--packed", action="store_true", help="write the 2-bit packed format")
    p.add_argument("--out", required=True)

    p = add("scan", cmd_scan, "list primer-payload collisions as CSV")
    p.add_argument("--in", dest="input", required=True, help="sequence file (text or packed)")
    p.add_argument("--payload", type=int, default=0, help="fixed payload width; 0 scans the whole sequence")
    p.add_argument("--prune", action="store_true", help="drop rows after each primer's first uncuttable one")
    p.add_argument("--orientation", choices=["fwd", "both"], default="both",
                   help="also match the primers' reverse complements")
    p.add_argument("--out", required=True)

    p = add("plan", cmd_plan, "recover primers and print the cut plan")
    p.add_argument("--in", dest="input", required=True, help="sequence file (text or packed)")
    p.add_argument("--order", default="by_collisions", choices=["by_collisions", "by_conflicts"])
    p.add_argument("--out")

    p = add("simulate", cmd_simulate, "build one tube")
    _corpus_flags(p)
    p.add_argument("--codec", choices=codecs, default="rotation")
    p.add_argument("--scheme", choices=pl.SCHEMES, default="vldna-collisions")
    p.add_argument("--order", choices=["by_collisions", "by_conflicts"])
    p.add_argument("--out", required=True, help="tube directory")

    p = add("decode", cmd_decode, "decode a tube directory")
    p.add_argument("--tube", required=True)
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, "print a tube's report")
    p.add_argument("--tube", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = add("compare-schemes", cmd_compare_schemes, "usable primers and capacity per codec and scheme")
    _corpus_flags(p)
    p.add_argument("--codecs", nargs="+", choices=codecs, default=codecs)
    p.add_argument("--schemes", nargs="+", choices=pl.SCHEMES, default=list(pl.SCHEMES))
    p.add_argument("--codec", default="rotation", help=argparse.SUPPRESS)
    p.add_argument("--out", required=True, help="output directory")

    p = add("compare-groups", cmd_compare_groups, "length-group comparison")
    _corpus_flags(p)
    p.add_argument("--groups", nargs="+", help="groups such as 150/160/190/200 (default: the 13 standard ones)")
    p.add_argument("--codec", choices=codecs, default="rotation")
    p.add_argument("--codecs", nargs="+", default=["rotation"], help=argparse.SUPPRESS)
    p.add_argument("--horizon", type=int, default=10_000, help="bases considered for covered_bases")
    p.add_argument("--out", required=True, help="output directory")

    p = add("histogram", cmd_histogram, "primers per collision count")
    _corpus_flags(p)
    p.add_argument("--codec", choices=codecs, default="blawat")
    p.add_argument("--out", required=True, help="output directory")

    p = add("correlation", cmd_correlation, "collision rank vs conflict rank")
    _corpus_flags(p)
    p.add_argument("--codec", choices=codecs, default="rotation")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "codecs", None) is None:
        args.codecs = [getattr(args, "codec", "rotation")]
    for name in ("input", "size", "buffer", "tolerance", "codec"):
        if not hasattr(args, name):
            setattr(args, name, {"size": 1 << 20, "buffer": pl.DEFAULT_BUFFER, "tolerance": 0.05,
                                 "codec": "rotation"}.get(name))
    try:
        args.func(args)
    except (VLDNAError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

import csv
import json

import pytest

from vldna import cli
from vldna.primerlib import generate_library, save_library


@pytest.fixture(scope="module")
def lib_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("lib") / "lib.txt"
    save_library(p, generate_library(32, seed=1))
    return str(p)


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_golden_headers():
    assert cli.CSV_VERSION == 1
    assert cli.SCHEMES_COLUMNS[:3] == ["codec", "scheme", "usable_primers"]
    assert cli.HISTOGRAM_COLUMNS == ["collisions", "primers"]
    assert cli.GROUPS_COLUMNS[0] == "group" and "covered_bases" in cli.GROUPS_COLUMNS


def test_simulate_decode_report(tmp_path, lib_path, capsys):
    tube = tmp_path / "tube"
    data = tmp_path / "in.bin"
    data.write_bytes(bytes(range(256)) * 100)
    args = ["--primers", lib_path, "--parallel", "400"]
    assert cli.main(["simulate", "--in", str(data), "--buffer", "30000", "--out", str(tube), *args]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["scheme"] == "vldna-collisions" and rep["input_bytes"] == 25600
    assert cli.main(["decode", "--tube", str(tube), "--out", str(tmp_path / "out.bin")]) == 0
    assert (tmp_path / "out.bin").read_bytes() == data.read_bytes()
    capsys.readouterr()
    assert cli.main(["report", "--tube", str(tube)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",") == cli.REPORT_COLUMNS and lines[1].startswith("vldna-collisions,rotation,")


def test_compare_schemes_csv(tmp_path, lib_path):
    rc = cli.main(["compare-schemes", "--size", "20000", "--buffer", "20000", "--primers", lib_path,
                   "--parallel", "200", "--codecs", "rotation", "--schemes", "fixed", "rand5",
                   "vldna-collisions", "--out", str(tmp_path)])
    assert rc == 0
    path = tmp_path / "schemes.csv"
    assert _header(path) == cli.SCHEMES_COLUMNS
    rows = list(csv.DictReader(open(path)))
    assert [r["scheme"] for r in rows] == ["fixed", "rand5", "vldna-collisions"]
    usable = [int(r["usable_primers"]) for r in rows]
    assert usable[2] >= usable[0] and usable[1] >= usable[0]


def test_compare_groups_csv(tmp_path, lib_path):
    rc = cli.main(["compare-groups", "--size", "20000", "--buffer", "20000", "--primers", lib_path,
                   "--parallel", "200", "--groups", "150/160/190/200", "--out", str(tmp_path)])
    assert rc == 0
    rows = list(csv.DictReader(open(tmp_path / "groups.csv")))
    assert _header(tmp_path / "groups.csv") == cli.GROUPS_COLUMNS
    assert rows[0]["group"] == "150/160/190/200" and rows[0]["indicator_bases"] == "1"


def test_histogram_sums_to_library(tmp_path, lib_path, capsys):
    assert cli.main(["histogram", "--size", "20000", "--primers", lib_path, "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    rows = list(csv.DictReader(open(tmp_path / "histogram_blawat.csv")))
    assert sum(int(r["primers"]) for r in rows) == summary["library_size"] == 32
    uncollided = sum(int(r["primers"]) for r in rows if r["collisions"] == "0")
    assert summary["collided"] == 32 - uncollided


def test_rank_correlation():
    assert cli.rank_correlation([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert cli.rank_correlation([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        cli.rank_correlation([1, 1, 1], [1, 2, 3])


def test_errors_are_json_on_stderr(tmp_path, capsys):
    assert cli.main(["decode", "--tube", str(tmp_path / "missing"), "--out", str(tmp_path / "x")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        cli.ExperimentSpec(corpus={}, codecs=[], schemes=["fixed"])
    with pytest.raises(ValueError):
        cli.ExperimentSpec(corpus={}, codecs=["rotation"], schemes=["rand7"])


def test_global_flags_on_either_side():
    p = cli.build_parser()
    a = p.parse_args(["--parallel", "5", "simulate", "--out", "x"])
    assert a.parallel == 5 and a.jobs == 1 and str(a.group) == "150/160/190/200"
    a = p.parse_args(["simulate", "--out", "x", "--parallel", "7", "--group", "150/200"])
    assert a.parallel == 7 and str(a.group) == "150/200"


def test_default_groups_and_determinism(tmp_path, lib_path):
    args = ["compare-groups", "--size", "8000", "--buffer", "8000", "--primers", lib_path, "--parallel", "100"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "groups.csv").read_bytes()
    assert a == (tmp_path / "b" / "groups.csv").read_bytes()
    rows = list(csv.DictReader(open(tmp_path / "a" / "groups.csv")))
    assert len(rows) == 13
    ref = next(r for r in rows if r["group"] == "150/160/190/200")
    four = [r for r in rows if r["lengths"] == "4"]
    assert all(int(ref["covered_bases"]) >= int(r["covered_bases"]) for r in four)


def test_compare_groups_rejects_short_max(tmp_path, lib_path, capsys):
    rc = cli.main(["compare-groups", "--size", "2000", "--primers", lib_path, "--groups", "150/160",
                   "--out", str(tmp_path)])
    assert rc == 1 and "200" in json.loads(capsys.readouterr().err)["message"]

import csv
import io
import json
import subprocess
import sys

import pytest

from relquant import cli
from relquant.compactor import CapacityExhausted
from relquant.eval import SketchFactory, gen_stream, measure_error


def run(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_sorted(capsys):
    code, out, _ = run(["gen", "--gen", "sorted", "--n", "3"], capsys)
    assert code == 0 and out == "0\n1\n2\n"


def test_gen_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert cli.main(["gen", "--gen", "uniform", "--n", "500", "--seed", "4", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_tree_instance_line_count(tmp_path):
    path = tmp_path / "tree.txt"
    assert cli.main(["gen", "--gen", "tree_instance", "--n", "100000", "--out", str(path)]) == 0
    assert len(path.read_text().splitlines()) == 100_000


def test_run_on_empty_input(capsys, monkeypatch):
    code, out, _ = run(["run", "--grid", "keys:1,5,9"], capsys, "", monkeypatch)
    doc = json.loads(out)
    assert code == 0
    assert [q["estimate"] for q in doc["queries"]] == [0, 0, 0]


def test_run_reports_are_byte_identical(tmp_path):
    src = tmp_path / "in.txt"
    cli.main(["gen", "--gen", "uniform", "--n", "20000", "--seed", "2", "--out", str(src)])
    outs = []
    for j in range(2):
        out, trace = tmp_path / f"r{j}.json", tmp_path / f"t{j}.csv"
        assert cli.main(["run", "--in", str(src), "--eps", "1/16", "--seed", "5",
                         "--out", str(out), "--trace", str(trace)]) == 0
        outs.append((out.read_bytes(), trace.read_bytes()))
    assert outs[0] == outs[1]


def test_trace_columns(tmp_path):
    trace = tmp_path / "t.csv"
    assert cli.main(["run", "--gen", "uniform", "--n", "5000", "--eps", "1/8",
                     "--trace", str(trace), "--out", str(tmp_path / "r.json")]) == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["step", "level", "s_hat", "phi_level", "phi_child", "accumulator"]
    assert len(rows) > 1


def test_run_csv_and_rational_keys(capsys, monkeypatch):
    code, out, _ = run(["run", "--eps", "1/4", "--grid", "keys:1/2,3/2", "--format", "csv"],
                       capsys, "1/3\n2/3\n4/3\n", monkeypatch)
    assert code == 0
    assert out.splitlines() == ["key,estimate,true_rank", "1/2,1,1", "3/2,3,3"]


def test_rank_grid(capsys, monkeypatch):
    code, out, _ = run(["run", "--eps", "1/4", "--grid", "ranks:0,2"], capsys,
                       "10\n30\n20\n", monkeypatch)
    doc = json.loads(out)
    assert [(q["key"], q["estimate"]) for q in doc["queries"]] == [("10", 0), ("30", 2)]


def test_snapshot_and_resume(tmp_path, capsys):
    first, rest = tmp_path / "a.txt", tmp_path / "b.txt"
    first.write_text("".join(f"{x}\n" for x in range(0, 3000, 2)))
    rest.write_text("".join(f"{x}\n" for x in range(1, 3000, 2)))
    snap = tmp_path / "snap.json"
    assert cli.main(["run", "--in", str(first), "--eps", "1/8", "--snapshot", str(snap),
                     "--out", str(tmp_path / "x.json")]) == 0
    assert cli.main(["run", "--in", str(rest), "--resume", str(snap), "--grid", "keys:1500",
                     "--out", str(tmp_path / "y.json")]) == 0
    doc = json.loads((tmp_path / "y.json").read_text())
    assert abs(doc["queries"][0]["estimate"] - 1500) <= 1500 / 8


def test_config_errors_exit_2(capsys, monkeypatch):
    assert run(["run", "--eps", "1/3"], capsys, "", monkeypatch)[0] == 2
    assert run(["run", "--mode", "highprob"], capsys, "", monkeypatch)[0] == 2
    assert run(["run", "--mode", "highprob", "--delta", "0.9"], capsys, "", monkeypatch)[0] == 2
    assert run(["run", "--grid", "quantiles:3"], capsys, "1\n", monkeypatch)[0] == 2
    assert run(["run"], capsys, "1\n1/2\n", monkeypatch)[0] == 2
    assert run(["gen", "--gen", "zipf", "--n", "3"], capsys)[0] == 2


def test_io_errors_exit_4(tmp_path, capsys):
    assert run(["run", "--in", str(tmp_path / "missing.txt")], capsys)[0] == 4
    assert run(["gen", "--n", "3", "--out", str(tmp_path / "no" / "dir.txt")], capsys)[0] == 4


def test_capacity_exhaustion_exit_3(capsys, monkeypatch):
    def boom(self, xs):
        raise CapacityExhausted("forced")

    monkeypatch.setattr("relquant.sketch.RelativeSketch.extend", boom)
    code, _, err = run(["run", "--gen", "sorted", "--n", "10"], capsys)
    assert code == 3 and "capacity" in err


def test_bench_single_cell_matches_measure_error(tmp_path, capsys):
    out = tmp_path / "bench"
    assert cli.main(["bench", "--gen", "uniform", "--eps", "1/8", "--n", "3000", "--seeds", "3",
                     "--grid", "ranks:10,100,2000", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads((out / "bench.json").read_text())
    stream = gen_stream("uniform", 3000, 0)
    direct = measure_error(SketchFactory("1/8"), stream, [10, 100, 2000], range(3), eps=1 / 8)
    assert doc["runs"][0]["report"] == json.loads(json.dumps(direct.to_json()))
    assert (out / "error_vs_rank.png").stat().st_size > 0
    assert (out / "space.png").stat().st_size > 0


def test_bench_csv_has_space_verdicts(tmp_path, capsys):
    out = tmp_path / "bench"
    assert cli.main(["bench", "--gen", "uniform,sorted", "--eps", "1/8", "--n", "2000",
                     "--seeds", "2", "--out", str(out), "--no-plots"]) == 0
    rows = list(csv.DictReader((out / "space.csv").open()))
    assert [r["gen"] for r in rows] == ["uniform", "sorted"]
    assert all(r["pass"] == "pass" for r in rows)
    assert not (out / "space.png").exists()


def test_bench_outputs_are_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        cli.main(["bench", "--gen", "tree_instance", "--eps", "1/8", "--n", "3000",
                  "--seeds", "2", "--out", str(tmp_path / name)])
    for f in ("errors.csv", "space.csv", "error_vs_rank.png", "space.png"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_adversary_json(capsys):
    code, out, _ = run(["adversary", "--depth", "4", "--trials", "30", "--algo", "smallest:1"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert len(doc["stream"]) == 15
    assert {"query", "nodes", "mean_space", "mean_sq_error", "objective"} <= set(doc)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "relquant", "gen", "--gen", "sorted", "--n", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "0\n1\n"

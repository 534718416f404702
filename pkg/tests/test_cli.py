import io
import subprocess
import sys

import numpy as np
import pytest

from sfcpart.cli import main, sweep
from sfcpart.grid import GridSpec, read_grid_file
from sfcpart.metrics import quality_report
from sfcpart.partition import partition_grid, read_partition


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("dims 9 33 13\nextents 0 1200 0 2200 0 170\n")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_partition_writes_file(capsys, grid_file, tmp_path):
    out_path = tmp_path / "p.txt"
    code, out, _ = run(capsys, "partition", "--grid", grid_file, "--method", "hilbert", "--np", 4, "--out", out_path)
    assert code == 0
    assert out.startswith("N_g=3861 N_p=4 method=hilbert elapsed=")
    lines = out_path.read_text().splitlines()
    assert lines[:2] == ["nparts 4", "method hilbert"] and len(lines) == 2 + 3861
    g = read_grid_file(grid_file)
    assert read_partition(out_path) == partition_grid(g, "hilbert", 4)


def test_partition_histogram(capsys, grid_file, tmp_path):
    out_path = tmp_path / "p.txt"
    assert run(capsys, "partition", "--grid", grid_file, "--np", 256, "--out", out_path)[0] == 0
    counts = read_partition(out_path).counts()
    assert set(counts.tolist()) == {3861 // 256, 3861 // 256 + 1}


@pytest.mark.parametrize("np_arg", ["0", "-3", "x", "1,2"])
def test_partition_bad_np(capsys, grid_file, tmp_path, np_arg):
    code, _, err = run(capsys, "partition", "--grid", grid_file, "--np", np_arg, "--out", tmp_path / "p.txt")
    assert code == 1
    assert "error" in err


def test_np_larger_than_grid(capsys, grid_file, tmp_path):
    assert run(capsys, "partition", "--grid", grid_file, "--np", 4000, "--out", tmp_path / "p.txt")[0] == 1


def test_bad_grid_file(capsys, tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("dims 2 2 2\nextents 0 1 0 1 0 1\nfoo\n")
    code, _, err = run(capsys, "partition", "--grid", path, "--np", 2, "--out", tmp_path / "p.txt")
    assert code == 2
    assert "g.txt:3" in err


def test_missing_grid_file(capsys, tmp_path):
    code, _, _ = run(capsys, "metrics", "--grid", tmp_path / "none.txt", "--partition", tmp_path / "p.txt")
    assert code == 2


def test_level_too_small(capsys, grid_file, tmp_path):
    code, _, err = run(capsys, "partition", "--grid", grid_file, "--np", 2, "--level", 2, "--out", tmp_path / "p.txt")
    assert code == 1 and "minimum level" in err


def test_metrics_single_rank(capsys, grid_file, tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("nparts 1\nmethod external\n" + "0\n" * 3861)
    code, out, _ = run(capsys, "metrics", "--grid", grid_file, "--partition", p)
    assert code == 0
    assert "r_max      0.0000 %" in out and "r_avg      0.0000 %" in out and "c_max      0" in out


def test_metrics_equals_library(capsys, grid_file, tmp_path):
    p = tmp_path / "p.txt"
    run(capsys, "partition", "--grid", grid_file, "--np", 16, "--out", p)
    code, out, _ = run(capsys, "metrics", "--grid", grid_file, "--partition", p, "--format", "csv")
    g = read_grid_file(grid_file)
    assert code == 0
    assert out == quality_report(partition_grid(g, "hilbert", 16), g).to_csv()


def test_metrics_size_mismatch(capsys, grid_file, tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("nparts 1\nmethod external\n0\n0\n")
    code, _, err = run(capsys, "metrics", "--grid", grid_file, "--partition", p)
    assert code == 2 and "3861" in err


def test_weights_override(capsys, grid_file, tmp_path):
    w = np.ones(3861)
    w[:100] = 50.0
    wpath = tmp_path / "w.txt"
    np.savetxt(wpath, w)
    p = tmp_path / "p.txt"
    assert run(capsys, "partition", "--grid", grid_file, "--np", 4, "--weights", wpath, "--out", p)[0] == 0
    g = read_grid_file(grid_file)
    expected = partition_grid(GridSpec(*g.dims, 0, 1200, 0, 2200, 0, 170, cell_weights=w), "hilbert", 4)
    assert read_partition(p) == expected


def test_sweep_text_and_csv(capsys, grid_file):
    code, out, _ = run(capsys, "sweep", "--grid", grid_file, "--np", "4,8", "--method", "hilbert,morton")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split()[:3] == ["method", "N_p", "r_max"]
    assert len(lines) == 2 + 4
    code, out, _ = run(capsys, "sweep", "--grid", grid_file, "--np", "8", "--format", "csv")
    rows = out.strip().splitlines()
    assert rows[0] == "method,np,r_max,r_avg,c_max,edge_cut,imbalance,seconds"
    method, n, r_max, r_avg, c_max, cut, imb, _ = rows[1].split(",")
    g = read_grid_file(grid_file)
    rep = quality_report(partition_grid(g, "hilbert", 8), g)
    assert (method, int(n), float(r_max), float(r_avg), int(c_max), float(cut), float(imb)) == (
        "hilbert", 8, rep.r_max, rep.r_avg, rep.c_max, rep.edge_cut, rep.imbalance
    )


def test_sweep_matches_single_runs():
    g = GridSpec(12, 10, 7, 0, 3, 0, 2, 0, 1)
    rows = sweep(g, ["hilbert", "morton"], [1, 5, 33])
    for r in rows:
        rep = quality_report(partition_grid(g, r["method"], r["np"]), g)
        assert (r["r_max"], r["r_avg"], r["c_max"], r["edge_cut"]) == (rep.r_max, rep.r_avg, rep.c_max, rep.edge_cut)


def test_encode(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("0.1 0.1 0.1\n\n0.9 0.1 0.1\n"))
    code, out, _ = run(capsys, "encode", "--level", 1)
    assert code == 0
    assert out.splitlines() == ["0 0x0 0", "1 0x1 0.125"]


def test_encode_level30_stable(capsys, monkeypatch):
    text = "0.3 0.6 0.2\n0.123456789 0.987654321 0.5\n"
    outs = []
    for _ in range(2):
        monkeypatch.setattr(sys, "stdin", io.StringIO(text))
        code, out, _ = run(capsys, "encode")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    dec, hexa, unit = outs[0].splitlines()[0].split()
    assert int(dec) == int(hexa, 16) and len(hexa) == 2 + 23
    assert float(unit) == pytest.approx(int(dec) / 2**90, rel=1e-15)


@pytest.mark.parametrize("line", ["0.0 0.5 0.5", "0.5 0.5", "a b c", "0.5 0.5 1"])
def test_encode_bad_line(capsys, monkeypatch, line):
    monkeypatch.setattr(sys, "stdin", io.StringIO("0.5 0.5 0.5\n" + line + "\n"))
    code, _, err = run(capsys, "encode")
    assert code == 2 and "line 2" in err


def test_threads_env(capsys, monkeypatch, grid_file, tmp_path):
    monkeypatch.setenv("SFCPART_THREADS", "3")
    assert run(capsys, "partition", "--grid", grid_file, "--np", 3, "--out", tmp_path / "a.txt")[0] == 0
    monkeypatch.setenv("SFCPART_THREADS", "zero")
    assert run(capsys, "partition", "--grid", grid_file, "--np", 3, "--out", tmp_path / "b.txt")[0] == 1


def test_console_entry_point(tmp_path, grid_file):
    res = subprocess.run(
        [sys.executable, "-m", "sfcpart.cli", "sweep", "--grid", str(grid_file), "--np", "2"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and "hilbert" in res.stdout
    res = subprocess.run([sys.executable, "-m", "sfcpart.cli", "bogus"], capture_output=True, text=True)
    assert res.returncode == 1

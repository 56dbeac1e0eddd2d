import json
import subprocess
import sys

import numpy as np
import pytest

from dfgof.cli import load_csv, main, parse_args, starting_values
from dfgof.families import make_family
from dfgof.rng import replicate_stream


@pytest.fixture
def normal_csv(tmp_path):
    fam, th = make_family("normal", [2.0, 0.5])
    x = fam.sample(th, replicate_stream(42, 0), 400)
    path = tmp_path / "x.csv"
    path.write_text("value\n" + "".join(f"{float(v)!r}\n" for v in x))
    return path


class TestParse:
    def test_test_defaults(self):
        cfg = parse_args(["test", "--data", "x.csv"])
        assert cfg.command == "test" and cfg.statistic == "ks" and cfg.reps == 5000
        assert cfg.grid == {"scheme": "equiprobable", "cells": 20}

    def test_edges_and_lists(self):
        cfg = parse_args(["test", "--data", "x.csv", "--family", "normal", "--params", "0,1",
                          "--estimate", "loc", "--edges=-9,0,1"])
        assert cfg.params == [0.0, 1.0] and cfg.estimate == ["loc"]
        assert cfg.grid == {"scheme": "edges", "edges": [-9.0, 0.0, 1.0]}
        assert parse_args(["test", "--data", "x", "--estimate", "none"]).estimate == []

    def test_table(self):
        cfg = parse_args(["table", "--cells", "8", "--K", "2", "--seed", "3"])
        assert cfg.grid["cells"] == 8 and cfg.target_K == 2 and cfg.seed == 3

    @pytest.mark.parametrize("argv", [
        ["test"],
        ["test", "--data", "x", "--cells", "1"],
        ["test", "--data", "x", "--reps", "999"],
        ["test", "--data", "x", "--cells", "4", "--edges", "0,1"],
        ["table", "--cells", "4", "--K", "4", "--seed", "1"],
        ["simulate", "--process", "levy"],
        ["frobnicate"],
    ])
    def test_usage_errors_exit_2(self, argv, capsys):
        assert main(argv) == 2


class TestCsv:
    def test_header_and_single_column(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("x\n1.5\n\n2.5\n")
        np.testing.assert_array_equal(load_csv(p), [1.5, 2.5])

    def test_two_columns(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("1,2\n3,4\n")
        assert load_csv(p).shape == (2, 2)

    def test_garbage(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("1\nabc\n")
        with pytest.raises(ValueError):
            load_csv(p)

    def test_ragged(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1\n2,3\n")
        with pytest.raises(ValueError):
            load_csv(p)

    def test_starting_values(self):
        x = np.array([1.0, 2.0, 3.0])
        assert starting_values("exponential", x) == [0.5]
        assert starting_values("normal", x)[0] == 2.0
        lo, hi = starting_values("uniform", x)
        assert lo <= 1.0 and hi >= 3.0


class TestCommands:
    def test_report(self, normal_csv, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["test", "--data", str(normal_csv), "--family", "normal", "--reps", "1000",
                     "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["n"] == 400 and rep["cells"] == 20 and 0 < rep["p_value"] <= 1

    def test_report_byte_identical(self, normal_csv, tmp_path):
        args = ["test", "--data", str(normal_csv), "--family", "normal", "--reps", "1000", "--seed", "9"]
        main(args + ["--out", str(tmp_path / "a.json")])
        main(args + ["--out", str(tmp_path / "b.json")])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_table_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["table", "--cells", "6", "--K", "1", "--reps", "1000", "--seed", "2",
                         "--out", str(tmp_path / name)]) == 0
        text = (tmp_path / "a").read_text()
        assert text == (tmp_path / "b").read_text()
        assert text.startswith("# statistic: ks\n# reps: 1000\n")

    def test_missing_file(self, tmp_path, capsys):
        assert main(["test", "--data", str(tmp_path / "none.csv")]) == 2
        assert "dfgof:" in capsys.readouterr().err

    def test_statistical_error_is_json(self, tmp_path, capsys):
        p = tmp_path / "x.csv"
        p.write_text("".join(f"{v}\n" for v in np.linspace(0.1, 1.0, 50)))
        # every observation lands in the first cell, so the rate runs off to infinity
        code = main(["test", "--data", str(p), "--family", "exponential", "--params", "1",
                     "--edges", "0,5", "--reps", "1000"])
        assert code == 3
        err = json.loads(capsys.readouterr().out)
        assert set(err) == {"error", "message"}

    @pytest.mark.parametrize("process", ["bm", "bridge", "projected", "rotated", "kt1"])
    def test_simulate(self, process, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["simulate", "--process", process, "--params", "2", "--cells", "8", "--n", "300",
                     "--replicates", "3", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "cell_index,time,path_value,replicate"
        rows = np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]])
        assert rows.shape == (24, 4)
        assert rows[7, 1] == pytest.approx(1.0)
        if process in ("bridge", "projected"):
            assert abs(rows[7, 2]) < 1e-12

    def test_verify_quick(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--quick", "--out", str(out)]) == 0
        summary = json.loads(out.read_text())
        assert summary["passed"] and summary["quick"]
        assert {c["module"] for c in summary["checks"]} == {
            "discretization", "operators", "scores", "processes", "kt1", "multidim", "gof", "cli"}

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "dfgof", "--help"], capture_output=True, text=True)
        assert res.returncode == 0 and "verify" in res.stdout

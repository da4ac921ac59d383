import json
import subprocess
import sys

import numpy as np
import pytest

from bpgof.cli import format_counts, main, parse_args, parse_counts, read_counts


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def null_csv(tmp_path):
    path = tmp_path / "null.csv"
    assert main(["sample", "--theta", "1,1,0.5", "--n", "500", "--seed", "4", "--out", str(path)]) == 0
    return path


class TestCSV:
    def test_roundtrip(self, null_csv):
        s = read_counts(null_csv)
        assert s.n == 500 and s.d == 2
        assert format_counts(s.data) == null_csv.read_text()

    def test_header_and_lf(self, null_csv):
        text = null_csv.read_bytes()
        assert text.startswith(b"x1,x2\n")
        assert b"\r" not in text

    @pytest.mark.parametrize("text,msg", [("", "empty"), ("x1,x2\n", "no observations"),
                                          ("x1,x2\n1,2\n3\n", ":3:"), ("x1,x2\n1,2\n1,b\n", ":3:"),
                                          ("a,b\n1,2\n", "header"), ("x1\n1\n", "dimension"),
                                          ("x1,x2,x3,x4\n1,2,3,4\n", "dimension"), ("x1,x2\n1,-2\n", "negative")])
    def test_parse_errors(self, text, msg):
        with pytest.raises(ValueError, match=msg):
            parse_counts(text)

    def test_trivariate(self):
        assert parse_counts("x1,x2,x3\n1,2,3\n0,0,1\n").d == 3


class TestSampleCommand:
    def test_seed_determinism(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sample", "--family", "BLS(3d/7,2d/7,2d/7)", "--n", "30", "--seed", "1", "--out", str(a)])
        main(["sample", "--family", "BLS(3d/7,2d/7,2d/7)", "--n", "30", "--seed", "1", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_trivariate_header(self, capsys):
        code, out, _ = run(["sample", "--theta", "1,1,1,0.25", "--n", "5"], capsys)
        assert code == 0
        assert out.splitlines()[0] == "x1,x2,x3"
        assert len(out.splitlines()) == 6

    def test_needs_exactly_one_source(self, capsys):
        assert run(["sample", "--n", "5"], capsys)[0] == 2
        assert run(["sample", "--n", "5", "--theta", "1,1,0.2", "--family", "BB(1;0.4,0.3,0.1)"], capsys)[0] == 2

    def test_invalid_theta(self, capsys):
        assert run(["sample", "--n", "5", "--theta", "1,1,2"], capsys)[0] == 2

    def test_unwritable(self, tmp_path, capsys):
        assert run(["sample", "--n", "5", "--theta", "1,1,0.2", "--out", str(tmp_path / "no" / "x.csv")],
                   capsys)[0] == 2


class TestTestCommand:
    def test_json_report(self, null_csv, capsys):
        code, out, _ = run(["test", "--input", str(null_csv), "--boot", "100", "--seed", "1"], capsys)
        assert code == 0
        d = json.loads(out)
        assert {"statistic", "a", "value", "p_boot", "theta_hat", "estimator", "B", "seed", "n", "flags"} <= set(d)
        assert d["statistic"] == "T" and d["B"] == 100 and d["n"] == 500
        assert d["p_boot"] > 0.05

    def test_alternative_rejected(self, tmp_path, capsys):
        path = tmp_path / "alt.csv"
        main(["sample", "--family", "BPP(0.40;(0.2,0.2,0.1);(1.0,0.9,0.1))", "--n", "500", "--seed", "4",
              "--out", str(path)])
        code, out, _ = run(["test", "--input", str(path), "--boot", "200", "--reject-exit", "0.05"], capsys)
        assert code == 1
        assert json.loads(out)["p_boot"] <= 0.05

    def test_multiple_statistics_and_moment_fields(self, null_csv, capsys):
        code, out, _ = run(["test", "--input", str(null_csv), "--stat", "T,W,IB", "--boot", "30",
                            "--a1", "1"], capsys)
        rows = json.loads(out)
        assert [r["statistic"] for r in rows] == ["T", "W", "IB"]
        assert rows[0]["a"] == [1.0, 0.0]
        assert rows[1]["a"] is None
        assert "p_asym" in rows[2] and rows[2]["df"] == 997

    def test_byte_identical_without_timing(self, null_csv, capsys):
        outs = []
        for _ in range(2):
            _, out, _ = run(["test", "--input", str(null_csv), "--boot", "50", "--seed", "7", "--workers", "2"],
                            capsys)
            d = json.loads(out)
            d.pop("wall_time")
            outs.append(json.dumps(d))
        assert outs[0] == outs[1]

    def test_csv_format(self, null_csv, capsys):
        code, out, _ = run(["test", "--input", str(null_csv), "--boot", "20", "--format", "csv"], capsys)
        lines = out.splitlines()
        assert lines[0].startswith("statistic,a,value,p_boot")
        assert len(lines) == 2

    def test_empty_file_exit_2(self, tmp_path, capsys):
        p = tmp_path / "empty.csv"
        p.write_text("")
        code, _, err = run(["test", "--input", str(p)], capsys)
        assert code == 2
        assert "empty" in err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        assert run(["test", "--input", str(tmp_path / "none.csv")], capsys)[0] == 2

    def test_wrong_dimension_statistic(self, null_csv, capsys):
        assert run(["test", "--input", str(null_csv), "--stat", "T3"], capsys)[0] == 2

    def test_undefined_moment_statistic_exit_3(self, tmp_path, capsys):
        p = tmp_path / "flat.csv"
        p.write_text("x1,x2\n" + "1,1\n" * 10 + "2,1\n")
        code, out, _ = run(["test", "--input", str(p), "--stat", "IB", "--boot", "10"], capsys)
        assert code == 3


class TestConfigAndEnv:
    def test_config_overrides_flags(self, tmp_path, null_csv, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# run settings\nboot = 25\nstat = W\nseed=3\n")
        code, out, _ = run(["--config", str(cfg), "test", "--input", str(null_csv), "--boot", "500"], capsys)
        d = json.loads(out)
        assert (d["B"], d["statistic"], d["seed"]) == (25, "W", 3)

    def test_bad_config_line(self, tmp_path, null_csv, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("boot 25\n")
        assert run(["--config", str(cfg), "test", "--input", str(null_csv)], capsys)[0] == 2

    def test_env_workers(self, monkeypatch, null_csv):
        monkeypatch.setenv("BPGOF_WORKERS", "3")
        assert parse_args(["test", "--input", str(null_csv)]).workers == 3
        assert parse_args(["test", "--input", str(null_csv), "--workers", "1"]).workers == 1


class TestSimulationCommands:
    def test_simulate_size_json(self, capsys):
        code, out, _ = run(["simulate-size", "--theta", "1,1,0.25", "--n", "20", "--reps", "3", "--boot", "20",
                            "--stat", "T,crockett"], capsys)
        rows = json.loads(out)
        assert code == 0
        assert [r["statistic"] for r in rows] == ["T(0,0)", "crockett"]
        assert {"f05", "f10", "ks_p", "ks_stat", "reps", "failures"} <= set(rows[0])
        assert "pvalues" not in rows[0]

    def test_simulate_size_shards_merge(self, capsys):
        base = ["simulate-size", "--n", "20", "--boot", "20", "--stat", "W", "--keep-pvalues"]
        full = json.loads(run(base + ["--reps", "4"], capsys)[1])
        a = json.loads(run(base + ["--reps", "2"], capsys)[1])
        b = json.loads(run(base + ["--reps", "2", "--rep-offset", "2"], capsys)[1])
        assert a[0]["pvalues"] + b[0]["pvalues"] == full[0]["pvalues"]

    def test_simulate_power_csv(self, capsys):
        code, out, _ = run(["simulate-power", "--family", "BB(2;0.61,0.01,0.01)", "--n", "30", "--reps", "2",
                            "--boot", "20", "--stat", "W,IB", "--format", "csv"], capsys)
        assert code == 0
        assert out.splitlines()[0].startswith("family,n,statistic,reps,failures,f05,f10")
        assert len(out.splitlines()) == 3

    def test_bench(self, capsys):
        code, out, _ = run(["bench", "--n", "20", "--reps", "1", "--boot", "5", "--stat", "T,W"], capsys)
        rows = json.loads(out)
        assert code == 0
        assert [r["statistic"] for r in rows] == ["T(0,0)", "W"]

    def test_bad_family(self, capsys):
        assert run(["simulate-power", "--family", "XYZ(1)", "--reps", "1"], capsys)[0] == 2


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bpgof.cli", "sample", "--theta", "1,1,0.25", "--n", "3"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.splitlines()[0] == "x1,x2"

import csv
import io
import json

import pytest

from curvmax.cli import EXIT_CONFIG, EXIT_NUMERIC, dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def summary(capsys, tmp_path, *argv):
    code, out, err = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 0, err
    return json.loads(out)


def test_regions_equal(capsys, tmp_path):
    s = summary(capsys, tmp_path, "regions", "--family", "delta1", "--d", "3", "--compare", "delta0")
    assert s["verdict"] == "equal"
    rows = list(csv.DictReader(io.StringIO((tmp_path / "regions.csv").read_text())))
    assert rows and {"region", "inv_p", "inv_q"} <= set(rows[0])


def test_regions_strict_with_witness(capsys, tmp_path):
    s = summary(capsys, tmp_path, "regions", "--family", "delta1", "--d", "5", "--compare", "delta0",
                "--point", "1/2,1/2")
    assert s["verdict"] == "A<B" and s["witness_b_not_a"]
    assert s["membership"]["(1/2, 1/2)"] in (True, False)


def test_fourier_zero_row(capsys, tmp_path):
    s = summary(capsys, tmp_path, "fourier-decay", "--family", "homogeneous", "--d", "2", "--lmax", "8")
    rows = list(csv.DictReader(io.StringIO((tmp_path / "fourier_decay.csv").read_text())))
    assert float(rows[0]["lambda"]) == 0.0
    assert s["slope"] == pytest.approx(-0.5, abs=0.05)


def test_scaling_s1(capsys, tmp_path):
    s = summary(capsys, tmp_path, "scaling", "--tag", "S1", "--d", "2", "--kmax", "4", "--points", "3",
                "--nodes", "128")
    fit = s["results"][0] if "results" in s else s
    text = json.dumps(fit)
    assert "lhs_slope" in text
    rows = list(csv.DictReader(io.StringIO((tmp_path / "scaling.csv").read_text())))
    assert [r["k"] for r in rows] == ["2", "3", "4"]
    assert list(rows[0]) == ["tag", "d", "k", "p", "q", "lhs_norm", "rhs_norm"]


def test_deterministic_bytes(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["maximal-norm", "--data", "random", "--resolution", "16", "--eval-resolution", "8",
            "--times", "5", "--nodes", "64", "--seed", "7"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert (a / "maximal_norm.csv").read_bytes() == (b / "maximal_norm.csv").read_bytes()
    assert b"\r\n" in (a / "maximal_norm.csv").read_bytes()


def test_json_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "regions", "--family", "delta2", "--d", "3", "--compare", "delta0",
                       "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert dumps(doc) == out.rstrip("\n")
    assert json.loads((tmp_path / "regions.json").read_text()) == doc


def test_config_and_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"region": "delta1", "d": 5, "compare": "delta0"}))
    s = summary(capsys, tmp_path, "regions", "--config", str(cfg))
    assert s["verdict"] == "A<B"
    s = summary(capsys, tmp_path, "regions", "--config", str(cfg), "--d", "3")
    assert s["verdict"] == "equal"


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    assert run(capsys, "regions", "--config", str(bad))[0] == EXIT_CONFIG
    bad.write_text("{not json")
    assert run(capsys, "regions", "--config", str(bad))[0] == EXIT_CONFIG
    assert run(capsys, "regions", "--family", "delta1", "--d", "1", "--out", str(tmp_path))[0] == EXIT_CONFIG
    assert run(capsys, "sparse", "--C", "1.5", "--out", str(tmp_path))[0] == EXIT_CONFIG
    assert run(capsys, "scaling", "--tag", "S1", "--kmin", "2", "--kmax", "3",
               "--out", str(tmp_path))[0] == EXIT_CONFIG


def test_numeric_failure_exit(capsys, tmp_path, monkeypatch):
    import curvmax.cli as cli_mod
    from curvmax.sparse import SparsenessError

    def boom(*a, **k):
        raise SparsenessError("certificate failed")

    monkeypatch.setattr(cli_mod, "verify_sparse_domination", boom)
    code, _, err = run(capsys, "sparse", "--out", str(tmp_path))
    assert code == EXIT_NUMERIC and "certificate failed" in err


def test_sparse_and_weights_summaries(capsys, tmp_path):
    s = summary(capsys, tmp_path, "sparse", "--depth", "4", "--resolution", "16", "--per-block", "16")
    assert s["ratio"] > 0
    assert json.loads((tmp_path / "sparse_selection.json").read_text())
    w = summary(capsys, tmp_path, "weights", "--resolution", "16", "--per-block", "16", "--nodes", "96")
    assert w["weighted_ratio"] <= w["bound"] * w["unweighted_ratio"]

import csv
import json

import numpy as np
import pytest

import shrinktvp.cli as cli
from shrinktvp.cli import main
from shrinktvp.tables import read_matrix, read_table

FAST = "[sampler]\nn_burnin = 20\nn_draws = 40\n"


def _cfg(tmp_path, body="", name="c.toml"):
    p = tmp_path / name
    p.write_text("seed = 7\n" + FAST + body)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def series(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    cfg = d / "c.toml"
    cfg.write_text("seed = 3\n[simulate]\nT = 60\nn_series = 2\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(d)]) == 0
    return d


def test_simulate_files(series):
    assert (series / "series_001.csv").exists() and (series / "series_002.csv").exists()
    t = read_table(series / "series_001.csv")
    assert t.columns == ("y", "x1", "x2", "x3") and t.values.shape == (60, 4)
    truth = _rows(series / "truth.csv")
    assert [r["parameter"] for r in truth] == ["x1", "x2", "x3"]
    paths = read_table(series / "truth_001.csv")
    assert paths.values.shape == (61, 3)
    meta = json.loads((series / "run.json").read_text())
    assert meta["seed"] == 3 and meta["files"] == ["series_001.csv", "series_002.csv"]


def test_fit_outputs_and_roundtrip(series, tmp_path):
    out = tmp_path / "fit"
    assert main(["fit", "--config", _cfg(tmp_path), "--data", str(series / "series_001.csv"),
                 "--out", str(out)]) == 0
    draws = read_matrix(out / "draws_params.csv")
    assert draws.values.shape[0] == 40
    assert draws.columns[:3] == ("beta_x1", "beta_x2", "beta_x3")
    summary = _rows(out / "summary.csv")
    names = [r["parameter"] for r in summary]
    assert "abs_sqrt_theta_x1" in names and "sqrt_theta_x1" not in names
    # the summary is recomputable from the stored draws
    col = draws.column("beta_x2")
    row = summary[names.index("beta_x2")]
    assert float(row["mean"]) == pytest.approx(col.mean(), rel=1e-3, abs=1e-4)
    assert float(row["q50"]) == pytest.approx(np.quantile(col, 0.5), rel=1e-3, abs=1e-4)
    meta = json.loads((out / "run.json").read_text())
    assert meta["command"] == "fit" and len(meta["data_sha256"]) == 64
    assert meta["input_columns"] == ["y", "x1", "x2", "x3"]
    assert _rows(out / "paths.csv")[0]["parameter"] == "beta_x1"


def test_fit_is_deterministic_and_seed_override(series, tmp_path):
    cfg = _cfg(tmp_path)
    data = str(series / "series_002.csv")
    for name, extra in (("a", []), ("b", []), ("c", ["--seed", "8"])):
        assert main(["fit", "--config", cfg, "--data", data, "--out", str(tmp_path / name)] + extra) == 0
    a = (tmp_path / "a" / "draws_params.csv").read_bytes()
    assert a == (tmp_path / "b" / "draws_params.csv").read_bytes()
    assert a != (tmp_path / "c" / "draws_params.csv").read_bytes()


def test_fit_binary_and_sv(series, tmp_path):
    cfg = _cfg(tmp_path, "[model]\nsv = true\n[output]\nformat = \"bin\"\n")
    out = tmp_path / "o"
    assert main(["fit", "--config", cfg, "--data", str(series / "series_001.csv"), "--out", str(out)]) == 0
    h = read_matrix(out / "draws_h.bin")
    assert h.values.shape == (40, 61)
    assert "mu" in read_matrix(out / "draws_params.bin").columns
    assert len(_rows(out / "h_quantiles.csv")) == 61


def test_forecast_both_methods(series, tmp_path):
    cfg = _cfg(tmp_path, "[forecast]\nmethods = [\"kalman\", \"naive\"]\n")
    out = tmp_path / "f"
    assert main(["forecast", "--config", cfg, "--data", str(series / "series_001.csv"),
                 "--out", str(out), "--t0", "58"]) == 0
    rows = _rows(out / "lpds.csv")
    assert [r["t"] for r in rows] == ["59", "60"]
    assert set(rows[0]) == {"t", "lpds_kalman", "cum_kalman", "lpds_naive", "cum_naive"}
    assert float(rows[1]["cum_kalman"]) == pytest.approx(
        float(rows[0]["lpds_kalman"]) + float(rows[1]["lpds_kalman"]))


@pytest.fixture(scope="module")
def mv(tmp_path_factory):
    d = tmp_path_factory.mktemp("mv")
    cfg = d / "c.toml"
    cfg.write_text("seed = 2\n[model]\nmultivariate = true\n[simulate]\nd = 3\nT = 40\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(d)]) == 0
    return d


def test_multivariate_fit_and_forecast(mv, tmp_path):
    cfg = _cfg(tmp_path, "[model]\nmultivariate = true\n")
    data = str(mv / "series_001.csv")
    out = tmp_path / "fit"
    assert main(["fit", "--config", cfg, "--data", data, "--out", str(out), "--threads", "2"]) == 0
    cols = read_matrix(out / "draws_params.csv").columns
    assert "y1:mu" in cols and "y3:beta_y2" in cols and "y2:sqrt_theta_y1" in cols
    assert "y3:abs_sqrt_theta_y1" in [r["parameter"] for r in _rows(out / "summary.csv")]
    fc = tmp_path / "fc"
    assert main(["forecast", "--config", cfg, "--data", data, "--out", str(fc), "--t0", "39"]) == 0
    rows = _rows(fc / "lpds.csv")
    assert list(rows[0]) == ["t", "lpds_y1", "lpds_y2", "lpds_y3", "lpds_total", "cum_total"]
    parts = sum(float(rows[0][f"lpds_y{i}"]) for i in (1, 2, 3))
    assert float(rows[0]["lpds_total"]) == pytest.approx(parts, rel=1e-3)


def test_simstudy_keeps_partial_results(monkeypatch, tmp_path):
    orig = cli.run_chain
    calls = {"n": 0}

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise FloatingPointError("boom")
        return orig(*a, **k)

    monkeypatch.setattr(cli, "run_chain", flaky)
    cfg = _cfg(tmp_path, "[simulate]\nT = 40\nn_series = 2\n")
    out = tmp_path / "s"
    assert main(["simstudy", "--config", cfg, "--out", str(out)]) == 0
    errs = _rows(out / "errors.csv")
    assert len(errs) == 1 and errs[0]["prior"] == "BayesianLasso" and "boom" in errs[0]["error"]
    metrics = _rows(out / "metrics.csv")
    n = {(r["prior"], r["parameter"]): r["n_series"] for r in metrics}
    assert n[("DoubleGamma", "beta_x1")] == "2" and n[("BayesianLasso", "beta_x1")] == "1"
    assert json.loads((out / "run.json").read_text())["n_failed"] == 1


def test_error_messages(series, tmp_path, capsys):
    data = str(series / "series_001.csv")
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = 1\n[model]\nbogus = 1\n")
    assert main(["fit", "--config", str(bad), "--data", data, "--out", str(tmp_path / "x")]) == 2
    assert "model.bogus" in capsys.readouterr().err

    noseed = tmp_path / "noseed.toml"
    noseed.write_text(FAST)
    assert main(["fit", "--config", str(noseed), "--data", data, "--out", str(tmp_path / "x")]) == 2
    assert "seed" in capsys.readouterr().err

    csvbad = tmp_path / "bad.csv"
    csvbad.write_text("y,x\n1,2\n3,oops\n")
    assert main(["fit", "--config", _cfg(tmp_path), "--data", str(csvbad), "--out", str(tmp_path / "x")]) == 2
    assert "line 3" in capsys.readouterr().err

    assert main(["forecast", "--config", _cfg(tmp_path), "--data", data, "--out", str(tmp_path / "x"),
                 "--t0", "60"]) == 2
    assert "t0" in capsys.readouterr().err

    assert main(["fit", "--config", _cfg(tmp_path), "--out", str(tmp_path / "x")]) == 2
    assert "--data" in capsys.readouterr().err

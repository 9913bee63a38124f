import csv
import io
import json
import math

import numpy as np
import pytest

from leeyang import cli
from leeyang.errors import NonConvergence
from leeyang.model import ModelSpec
from leeyang.rootfinder import zeros_of


@pytest.fixture(autouse=True)
def _serial(monkeypatch):
    monkeypatch.setenv("LEEYANG_WORKERS", "1")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def test_zeros_json_schema_and_theorem1_zero(capsys):
    code, out, _ = run(capsys, "zeros", "-N", "7", "-k", "4", "--beta-gamma", "0.05")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    (zset,) = doc["zero_sets"]
    assert len(zset["zeros"]) == 7
    assert min(math.hypot(z["re"] + 1, z["im"]) for z in zset["zeros"]) < 1e-10
    assert set(zset["zeros"][0]) == {"re", "im", "norm", "log_norm", "residual", "multiplicity"}


def test_zeros_even_k_norm_product_is_one(capsys):
    argv = ["zeros", "-N", "10", "-k", "4"]
    for bg in ("-0.05", "-0.01", "0.01", "0.05"):
        argv += ["--beta-gamma", bg]
    code, out, _ = run(capsys, *argv)
    sets = json.loads(out)["zero_sets"]
    assert code == 0 and len(sets) == 4
    for s in sets:
        assert abs(s["log_norm_product"]) < 1e-10
        assert s["conjugate_pairing_error"] < 1e-8


def test_zeros_norm_curves_pin_to_one(capsys):
    code, out, _ = run(capsys, "zeros", "-N", "3", "-k", "4", "--norms", "--beta-gamma-range",
                       "-1", "1", "--beta-gamma-points", "201", "--format", "csv")
    rows = rows_of(out)
    assert code == 0 and rows[0] == ["beta_gamma", "zero", "norm"]
    data = np.array(rows[1:], dtype=float)
    assert len(data) == 3 * 201
    assert sorted(set(data[:, 1])) == [1.0, 2.0, 3.0]
    below = data[data[:, 0] < -0.005]
    np.testing.assert_allclose(below[:, 2], 1.0, atol=1e-6)
    assert np.abs(data[data[:, 0] > 0.5][:, 2] - 1).max() > 1e-2


def test_zeros_csv_header(capsys):
    code, out, _ = run(capsys, "zeros", "-N", "4", "-k", "3", "--format", "csv")
    rows = rows_of(out)
    assert rows[0] == ["beta_gamma", "index", "re", "im", "norm", "residual", "multiplicity"]
    assert len(rows) == 5


def test_detect_four_spins(capsys):
    code, out, _ = run(capsys, "detect", "-N", "4", "-k", "4", "--beta-gamma", "1.0")
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["model"] == {"N": 4, "k": 4, "beta_gamma": 1.0}
    assert len(doc["hits"]) == 4
    for h in doc["hits"]:
        assert abs(h["lambda_t"] - math.pi / 2) < 1e-6
        assert h["vanishing"] and h["matched_index"] is not None


def test_detect_five_spins_hits_at_zero_norms(capsys):
    code, out, _ = run(capsys, "detect", "-N", "5", "-k", "4", "--beta-gamma", "0.5")
    zs = zeros_of(ModelSpec(5, 4, 0.5))
    for h in json.loads(out)["hits"]:
        assert h["beta_h"] == pytest.approx(-zs.log_norms[h["matched_index"]], abs=1e-6)


def test_detect_heatmap_file(capsys, tmp_path):
    path = tmp_path / "hm.csv"
    code, _, _ = run(capsys, "detect", "-N", "4", "--beta-gamma", "1.0", "--beta-h-points", "5",
                     "--lambda-t-points", "11", "--heatmap", str(path))
    rows = rows_of(path.read_text())
    assert code == 0 and rows[0] == ["beta_h", "lambda_t", "amplitude"]
    assert len(rows) == 1 + 5 * 11


def test_detect_requires_one_beta_gamma(capsys):
    code, _, err = run(capsys, "detect", "--beta-gamma", "1", "--beta-gamma", "2")
    assert code == cli.EXIT_CONFIG and "exactly one" in err


def test_scan_shallow_dips_only(capsys):
    code, out, _ = run(capsys, "scan", "-N", "4", "-k", "2", "--beta-gamma", "0.1")
    (trace,) = json.loads(out)["traces"]
    assert code == 0
    assert trace["hits"] == []
    assert 1e-3 < trace["min_amplitude"] < 1


def test_scan_csv_header(capsys):
    code, out, _ = run(capsys, "scan", "-N", "4", "-k", "2", "--beta-gamma", "-1", "--format", "csv",
                       "--lambda-t-points", "21")
    rows = rows_of(out)
    assert rows[0] == ["beta_gamma", "lambda_t", "amplitude"] and len(rows) == 22


def test_qfim_mixed_sweep_scaling(capsys):
    code, out, _ = run(capsys, "qfim", "-N", "5", "-k", "4", "--beta-gamma", "-8", "--beta-h", "0.3",
                       "--method", "approx-mixed", "--format", "csv", "--sweep-points", "13")
    rows = rows_of(out)
    assert code == 0 and rows[0] == cli.QFIM_HEADER
    for r in rows[1:]:
        t = float(r[0])
        assert float(r[5]) == (t * 5) ** 2
        assert float(r[7]) == 0.0


def test_qfim_at_zeros_on_circle(capsys):
    code, out, _ = run(capsys, "qfim", "-N", "6", "-k", "2", "--beta-gamma", "-0.5", "--at-zeros",
                       "--format", "csv")
    rows = rows_of(out)
    assert code == 0 and rows[0] == cli.AT_ZERO_HEADER
    assert len(rows) == 7
    for r in rows[1:]:
        assert float(r[9]) == 0.0  # f_bb
        assert float(r[10]) == 0.0  # f_lb


def test_qfim_at_zeros_off_circle_has_zero_off_diagonal(capsys):
    code, out, _ = run(capsys, "qfim", "-N", "4", "-k", "4", "--beta-gamma", "1.0", "--at-zeros")
    rows = json.loads(out)["rows"]
    assert len(rows) == 4
    assert all(r["f_lb"] == 0.0 for r in rows)
    assert all(r["f_bb"] > 0 for r in rows)


def test_critical_json(capsys):
    code, out, _ = run(capsys, "critical", "-N", "6", "-k", "4")
    doc = json.loads(out)
    assert code == 0
    lo, hi = doc["bracket"]
    assert lo <= doc["beta_gamma_critical"] <= hi


def test_critical_bad_bracket_is_config_error(capsys):
    code, _, _ = run(capsys, "critical", "-N", "4", "-k", "2", "--bracket", "-1", "-0.1")
    assert code == cli.EXIT_CONFIG


def test_verify_single_theorem(capsys):
    code, out, _ = run(capsys, "verify", "--theorem", "1")
    doc = json.loads(out)
    assert code == 0 and doc["all_pass"]
    assert list(doc["suites"]) == ["theorem1"]


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "theorem1_suite", lambda: [{"pass": False}])
    code, out, _ = run(capsys, "verify", "--theorem", "1")
    assert code == cli.EXIT_VERIFY
    assert json.loads(out)["all_pass"] is False


def test_nonconvergence_exit_code(capsys, monkeypatch):
    def boom(*a, **kw):
        raise NonConvergence("stalled")
    monkeypatch.setattr(cli, "zeros_of", boom)
    code, _, err = run(capsys, "zeros", "-N", "4")
    assert code == cli.EXIT_NONCONVERGENCE
    assert json.loads(err)["error"] == "NonConvergence"


@pytest.mark.parametrize("argv", [["zeros", "--spins", "0"], ["zeros", "--tol", "1e-2"],
                                  ["detect", "--threshold", "2"], ["zeros", "--format", "xml"],
                                  ["critical", "-k", "3"], ["report"], ["bogus"]])
def test_bad_configuration_exit_code(capsys, argv):
    # argparse rejects some of these by exiting, validation rejects the rest by returning
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == cli.EXIT_CONFIG


def test_bad_worker_count(capsys, monkeypatch):
    monkeypatch.setenv("LEEYANG_WORKERS", "zero")
    code, _, _ = run(capsys, "zeros")
    assert code == cli.EXIT_CONFIG


def test_json_cleaning():
    doc = json.loads(cli.dump_json({"a": math.nan, "b": math.inf, "c": 1 + 2j, "d": np.float64(0.1)}))
    assert doc == {"schema_version": cli.SCHEMA_VERSION, "a": None, "b": "inf",
                   "c": {"re": 1.0, "im": 2.0}, "d": 0.1}


def test_csv_round_trips_doubles():
    x = 0.1 + 0.2
    assert float(rows_of(cli.dump_csv(["x"], [(x,)]))[1][0]) == x


@pytest.mark.parametrize("argv", [["detect", "-N", "4", "-k", "4", "--beta-gamma", "1.0"],
                                  ["zeros", "-N", "9", "-k", "3", "--beta-gamma", "0.2",
                                   "--beta-gamma", "-0.4"]])
def test_deterministic_output(capsys, monkeypatch, argv):
    _, first, _ = run(capsys, *argv)
    monkeypatch.setenv("LEEYANG_WORKERS", "3")
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_report_writes_index(tmp_path, monkeypatch):
    # shrink the heavy grids through the config; file set is fixed
    code = cli.main(["report", "--out", str(tmp_path), "--beta-h-points", "41",
                     "--lambda-t-points", "201"])
    assert code == 0
    index = json.loads((tmp_path / "index.json").read_text())
    assert "detect_N4_k4_hits.json" in index["files"]
    assert all((tmp_path / f).exists() for f in index["files"])

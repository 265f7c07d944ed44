import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from spin1optics import cli, reference
from spin1optics.tomography import linear_inversion


def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    err = capsys.readouterr().err if capsys else ""
    return code, err


@pytest.fixture
def table_file(tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps(reference.load()["tomography_table"]))
    return path


def test_simulate_fringe_four_rows(tmp_path):
    out = tmp_path / "p.csv"
    code, _ = run(["simulate-fringe", "--R", 0, "--V", 1, "--theta", 1.5707963, "--phi-start", 0, "--phi-end", np.pi, "--steps", 4, "--out", out])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["phi", "p20", "p11", "p02"]
    assert len(rows) == 5
    for r in rows[1:]:
        assert abs(sum(float(x) for x in r[1:]) - 1) < 1e-9
    manifest = json.loads((tmp_path / "p.csv.manifest.json").read_text())
    assert manifest["command"] == "simulate-fringe"
    assert manifest["kernel_backend"] in ("numba", "numpy")
    assert len(manifest["output"]["sha256"]) == 64


def test_synth_and_fit_pipeline_is_deterministic(tmp_path):
    probs = tmp_path / "p.csv"
    assert run(["simulate-fringe", "--R", 0.024, "--V", 0.98, "--steps", 40, "--out", probs])[0] == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["synth-counts", "--in", probs, "--seed", 17, "--out", a])[0] == 0
    assert run(["synth-counts", "--in", probs, "--seed", 17, "--out", b])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    fit = tmp_path / "fit.json"
    assert run(["fit-fringe", "--in", a, "--out", fit])[0] == 0
    res = json.loads(fit.read_text())
    assert abs(res["V"] - 0.98) < 0.02 and abs(res["R"] - 0.024) < 0.02
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["seed"] == 17
    assert manifest["inputs"][0]["sha256"]


def test_synth_counts_requires_seed(tmp_path, capsys):
    code, err = run(["synth-counts", "--out", tmp_path / "x.csv"], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "validation"
    assert not (tmp_path / "x.csv").exists()


def test_tomo_reconstruct_linear(tmp_path, table_file):
    out = tmp_path / "rho.json"
    assert run(["tomo-reconstruct", "--in", table_file, "--method", "linear", "--out", out])[0] == 0
    res = json.loads(out.read_text())
    rho = np.array(res["rho_raw"]["re"]) + 1j * np.array(res["rho_raw"]["im"])
    assert np.allclose(rho, linear_inversion(reference.tomography_table()).entries, atol=1e-12)
    assert res["rho_ml"] is None


def test_tomo_reconstruct_both(tmp_path, table_file):
    out = tmp_path / "rho.json"
    assert run(["tomo-reconstruct", "--in", table_file, "--out", out])[0] == 0
    res = json.loads(out.read_text())
    assert res["converged"] is True
    assert min(res["eigenvalues_ml"]) >= -1e-10


def test_tomo_verify(tmp_path, table_file):
    out = tmp_path / "v.json"
    assert run(["tomo-verify", "--in", table_file, "--lz", 0.054, "--out", out])[0] == 0
    rep = json.loads(out.read_text())
    assert max(rep["residual_L1"], rep["residual_L2"], rep["residual_Lz"]) <= 0.05


def test_malformed_json_exit_1_no_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "o.json"
    code, err = run(["tomo-reconstruct", "--in", bad, "--out", out], capsys)
    assert code == 1
    assert out.exists() is False
    line = err.strip().splitlines()
    assert len(line) == 1 and json.loads(line[0])["error"] == "validation"


def test_unknown_command_exit_1(capsys):
    code, err = run(["frobnicate"], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "validation"


def test_missing_file_exit_3(tmp_path, capsys):
    code, err = run(["fit-fringe", "--in", tmp_path / "nope.csv", "--out", tmp_path / "o.json"], capsys)
    assert code == 3
    assert json.loads(err)["error"] == "io"


def test_fit_rejects_probability_csv(tmp_path, capsys):
    probs = tmp_path / "p.csv"
    run(["simulate-fringe", "--steps", 20, "--out", probs])
    code, _ = run(["fit-fringe", "--in", probs, "--out", tmp_path / "f.json"], capsys)
    assert code == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "p.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "spin1optics", "simulate-fringe", "--steps", "8", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(out.read_text().splitlines()) == 9


def test_replicate_paper_report(tmp_path, capsys):
    out, txt = tmp_path / "rep.json", tmp_path / "rep.txt"
    code, err = run(["replicate-paper", "--out", out, "--tolerance-report", txt], capsys)
    report = json.loads(out.read_text())
    assert [c["number"] for c in report["criteria"]] == list(range(1, 12))
    failed = [c["number"] for c in report["criteria"] if not c["passed"]]
    if failed:
        assert code == 2
        msg = json.loads(err)["message"]
        assert all(str(n) in msg for n in failed)
    else:
        assert code == 0
    eig = next(c for c in report["criteria"] if c["number"] == 2)
    assert eig["details"]["published"] == [1.017, 0.016, -0.033]
    lines = txt.read_text().splitlines()
    assert len(lines) == 12 and lines[-1].endswith("criteria passed")

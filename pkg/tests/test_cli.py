import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from killing_momentum.cli import main
from killing_momentum.spectra import energy, normalization_constant

CHEAP = ["--grid", "16x16x16", "--n-max", "1"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_examples(capsys):
    code, out, _ = run(["spectrum", "--n-max", "2", "--format", "csv"], capsys)
    assert code == 0
    table = rows(out)
    assert {"n": "2", "k": "0", "branch": "+", "energy": "4", "momentum": "-2", "spacing": "2"} in table
    code, out, _ = run(["spectrum", "--n-max", "0", "--format", "csv"], capsys)
    assert len(rows(out)) == 1 and rows(out)[0]["energy"] == "0"


def test_spectrum_spacing_and_json(capsys):
    code, out, _ = run(["spectrum", "--n-max", "3", "--radius", "2", "--hbar", "0.5", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert {r["spacing"] for r in doc["rows"]} == {0.5}


def test_spectrum_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(["spectrum", "--n-max", "4", "--radius", "1.3", "--format", "csv", "--out", str(path)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_unwritable_output_path(capsys):
    code, _, err = run(["spectrum", "--out", "/nonexistent-dir/x.csv"], capsys)
    assert code == 2 and "cannot write" in err


def test_sample_matches_closed_form(capsys):
    code, out, _ = run(["sample", "--n", "1", "--k", "0", "--format", "csv"] + CHEAP, capsys)
    assert code == 0
    data = np.array([[float(r[c]) for c in ("chi", "theta", "phi", "re", "im", "abs2", "weight")] for r in rows(out)])
    chi, theta, phi = data[:, :3].T
    expected = normalization_constant(1) * np.sin(chi) * np.sin(theta) * np.exp(-1j * phi)
    np.testing.assert_allclose(data[:, 3] + 1j * data[:, 4], expected, atol=1e-14)
    assert np.sum(data[:, 5] * data[:, 6]) == pytest.approx(1.0, abs=1e-12)


def test_sample_ground_state_is_constant(capsys):
    code, out, _ = run(["sample", "--n", "0", "--k", "0", "--format", "csv"] + CHEAP, capsys)
    values = {r["re"] for r in rows(out)}
    assert code == 0 and len(values) == 1


def test_sample_rejects_bad_indices(capsys):
    assert run(["sample", "--n", "1", "--k", "2"] + CHEAP, capsys)[0] == 2
    assert run(["sample", "--n", "3", "--k", "0"] + CHEAP, capsys)[0] == 2


def test_sample_json(capsys):
    code, out, _ = run(["sample", "--n", "1", "--k", "1", "--branch", "-"] + CHEAP, capsys)
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["state"]["momentum"] == -1.0
    assert len(doc["rows"]) == 16**3


def test_evolve_period_norm_and_empty_times(tmp_path, capsys):
    coeffs = tmp_path / "c.csv"
    coeffs.write_text("# n,k,branch,re,im\n1,0,+,0.6,0.8\n")
    T = 2 * np.pi / energy(1)
    code, out, _ = run(["evolve", "--coeffs", str(coeffs), "--times", f"0,{T!r}", "--format", "csv"], capsys)
    table = rows(out)
    assert code == 0
    assert abs(complex(float(table[1]["re"]), float(table[1]["im"])) - (0.6 + 0.8j)) < 1e-12
    code, out, _ = run(["evolve", "--coeffs", str(coeffs), "--format", "csv"], capsys)
    assert out == "t,n,k,branch,re,im,norm\n"


def test_evolve_norm_column_constant(tmp_path, capsys):
    coeffs = tmp_path / "c.csv"
    coeffs.write_text("n,k,branch,re,im\n1,0,+,0.6,0\n2,1,-,0,0.48\n4,4,+,0.64,0\n")
    times = ",".join(repr(float(t)) for t in np.linspace(0, 50, 100))
    code, out, _ = run(["evolve", "--coeffs", str(coeffs), "--times", times, "--format", "csv"], capsys)
    norms = np.array([float(r["norm"]) for r in rows(out)])
    assert code == 0 and len(norms) == 300
    assert np.ptp(norms) < 1e-14


@pytest.mark.parametrize(
    "content,lineno",
    [("1,0,+,1,0\n1,0,x,1,0\n", 2), ("1,0,+,1\n", 1), ("# c\n\n1,zero,+,1,0\n", 3), ("9,0,+,1,0\n", 1), ("1,0,+,1,0\n1,0,+,2,0\n", 2)],
)
def test_evolve_reports_malformed_line(tmp_path, capsys, content, lineno):
    coeffs = tmp_path / "c.csv"
    coeffs.write_text(content)
    code, _, err = run(["evolve", "--coeffs", str(coeffs), "--times", "1"], capsys)
    assert code == 2 and f":{lineno}:" in err


def test_evolve_bad_inputs(tmp_path, capsys):
    assert run(["evolve", "--coeffs", str(tmp_path / "missing.csv")], capsys)[0] == 2
    coeffs = tmp_path / "c.csv"
    coeffs.write_text("1,0,+,1,0\n")
    assert run(["evolve", "--coeffs", str(coeffs), "--times", "1,a"], capsys)[0] == 2


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# constants\nradius = 2\nhbar=0.5\nn-max = 1\nformat = csv\n")
    code, out, _ = run(["spectrum", "--config", str(cfg)], capsys)
    assert code == 0 and {r["spacing"] for r in rows(out)} == {"0.5"}
    code, out, _ = run(["spectrum", "--config", str(cfg), "--hbar", "1"], capsys)
    assert {r["spacing"] for r in rows(out)} == {"1"}


@pytest.mark.parametrize("text", ["colour = red\n", "radius = big\n", "radius 2\n", "grid = 8x8\n", "radius = -1\n"])
def test_bad_config_files(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(["spectrum", "--config", str(cfg)], capsys)
    assert code == 2 and err.startswith("error:")


def test_missing_config_file(capsys):
    assert run(["spectrum", "--config", "/no/such/file"], capsys)[0] == 2


@pytest.mark.parametrize("argv", [["bogus"], ["spectrum", "--grid", "8x8"], ["spectrum", "--format", "xml"], []])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_verify_rejects_bandwidth_violation(capsys):
    code, _, err = run(["verify", "--grid", "32x32x8"], capsys)
    assert code == 2 and "bandwidth rule" in err


def test_verify_fault_injection_fails(capsys):
    code, out, err = run(["verify", "--perturb-x3", "1.01", "--format", "json"] + CHEAP, capsys)
    doc = json.loads(out)
    failed = {c["name"] for c in doc["checks"] if not c["passed"]}
    assert code == 1 and doc["status"] == "fail"
    assert {"orthonormality", "structure_constants", "momentum_spectrum"} <= failed
    assert "verification failed" in err


@pytest.mark.parametrize("manifold", ["circle", "euclidean-plane"])
def test_verify_other_manifolds(manifold, capsys):
    code, out, _ = run(["verify", "--manifold", manifold, "--radius", "1.5", "--format", "csv"], capsys)
    table = rows(out)
    assert code == 0 and table and all(r["status"] == "pass" for r in table)


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "killing_momentum.cli", "spectrum", "--n-max", "1", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("n,k,branch")

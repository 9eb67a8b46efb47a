import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from duffing_flow.cli import csv_header, load_scenario, main
from duffing_flow.errors import ConfigParseError

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

BASE = """
[scenario]
schema_version = 1
[model]
eigenvalues = 1, 4, 9, 16
lambda = 2
"""


def write(tmp_path, body, name="s.ini"):
    p = tmp_path / name
    p.write_text(BASE + body)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, json.loads(out) if out else None


def test_shipped_scenarios_load():
    for name in ("canon_equilibrium.ini", "canon_random.ini", "canon_forced.ini"):
        sc = load_scenario(str(SCENARIOS / name))
        assert sc.params.n_modes == 4
    assert len(load_scenario(str(SCENARIOS / "canon_random.ini")).initials) == 4


def test_malformed_scenario(capsys, tmp_path):
    code, msg = run(capsys, "simulate", "--scenario", str(SCENARIOS / "malformed.ini"), "--out", str(tmp_path))
    assert code == 2 and msg["error"] == "ConfigParseError"
    code, msg = run(capsys, "simulate", "--scenario", str(tmp_path / "missing.ini"), "--out", str(tmp_path))
    assert code == 2 and msg["error"] == "ConfigParseError"


@pytest.mark.parametrize("body", [
    "[forcing]\nkind = periodic\nomega = 1\nterms = 1:9:0.1:0\n",
    "[forcing]\nkind = wobble\n",
    "[initial]\nkind = explicit\nu = 1, 2\n",
    "[integration]\nmethod = euler\n",
    "[initial]\nkind = equilibrium\nname = middle\n",
])
def test_parse_errors(tmp_path, body):
    with pytest.raises(ConfigParseError):
        sc = load_scenario(write(tmp_path, body))
        sc.forcing, sc.initials  # noqa: B018 - force lazy sections


def test_model_error_code(capsys, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(BASE.replace("lambda = 2", "lambda = 5"))
    code, msg = run(capsys, "simulate", "--scenario", str(path), "--out", str(tmp_path))
    assert code == 2 and msg["error"] == "LambdaOutOfGap"


SIM = """
[forcing]
kind = periodic
omega = 1
terms = 1:1:0.05:0
[initial]
kind = explicit
u = 0.5, 0.1, 0, 0
v = 0, 0, 0, 0
[integration]
t0 = 0
t1 = 2
dt = 0.01
"""


def test_simulate_csv_and_determinism(capsys, tmp_path):
    path = write(tmp_path, SIM)
    code, summary = run(capsys, "simulate", "--scenario", path, "--out", str(tmp_path / "a"))
    assert code == 0 and summary["files"] == ["trajectory.csv"]
    run(capsys, "simulate", "--scenario", path, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    rows = list(csv.reader(a.decode().splitlines()))
    assert rows[0] == csv_header(4)
    assert rows[0][:3] == ["t", "u_1", "u_2"] and rows[0][-1] == "f_norm"
    assert len(rows) == 202
    first = np.array(rows[1], dtype=float)
    assert first[0] == 0 and first[1] == 0.5


def test_seed_override_changes_random_data(capsys, tmp_path):
    body = "[initial]\nkind = random\nseed = 1\nbound = 1\n[integration]\nt1 = 0.1\ndt = 0.01\n"
    path = write(tmp_path, body)
    run(capsys, "simulate", "--scenario", path, "--out", str(tmp_path / "a"), "--quiet")
    run(capsys, "simulate", "--scenario", path, "--out", str(tmp_path / "b"), "--seed", "1", "--quiet")
    run(capsys, "simulate", "--scenario", path, "--out", str(tmp_path / "c"), "--seed", "2", "--quiet")
    read = lambda d: (tmp_path / d / "trajectory.csv").read_bytes()  # noqa: E731
    assert read("a") == read("b") != read("c")


def test_classify_and_energies(capsys, tmp_path):
    body = "[initial]\nkind = equilibrium\nname = minus\n[integration]\nt1 = 10\ndt = 0.01\n"
    path = write(tmp_path, body)
    code, summary = run(capsys, "classify", "--scenario", path, "--out", str(tmp_path))
    assert code == 0 and summary["sigma"] == [-1.0] and summary["certified"] == [True]
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["sigma"] == -1.0
    code, summary = run(capsys, "energies", "--scenario", path, "--out", str(tmp_path))
    cert = json.loads((tmp_path / "certification.json").read_text())
    assert code == 0 and cert["certified"] and cert["identity_residual"] == 0


def test_special(capsys, tmp_path):
    body = SIM + "[special]\nsigma = plus\nsamples = 32\n"
    code, summary = run(capsys, "special", "--scenario", write(tmp_path, body), "--out", str(tmp_path))
    head = json.loads((tmp_path / "special.json").read_text())
    assert code == 0 and head["residual"] < 1e-10 and head["closure"] < 1e-10
    assert len((tmp_path / "special.csv").read_text().splitlines()) == 34


def test_basin(capsys, tmp_path):
    body = "[basin]\na_u = 0.7, 0, 0, 0\nb_u = -0.3, 0, 0, 0\nhorizon = 60\nwidth_tol = 1e-2\n"
    code, summary = run(capsys, "basin", "--scenario", write(tmp_path, body), "--out", str(tmp_path))
    res = json.loads((tmp_path / "basin.json").read_text())
    assert code == 0 and res["width"] <= 1e-2 and abs(res["boundary"]["u"][0]) < 2e-2


def test_lemma_check(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DUFFING_FLOW_THREADS", "2")
    body = "[lemma]\nhorizon = 100\n"
    code, summary = run(capsys, "lemma-check", "--scenario", write(tmp_path, body), "--out", str(tmp_path))
    res = json.loads((tmp_path / "lemma.json").read_text())
    assert code == 0 and summary["passed"] and len(res["cases"]) == 10


def test_module_entry_point(tmp_path):
    path = write(tmp_path, SIM)
    proc = subprocess.run([sys.executable, "-m", "duffing_flow", "simulate", "--scenario", path,
                           "--out", str(tmp_path), "--quiet"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
    assert (tmp_path / "trajectory.csv").exists()

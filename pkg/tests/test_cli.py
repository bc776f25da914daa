import gzip
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from coadgroupoid import lie_core
from coadgroupoid.cli import EXIT_DIVERGED, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

DATA = Path(__file__).parent / "data"
DIVERGING = {
    "schema": 1,
    "algebra": "abelian(1)",
    "algebroid": "trivial",
    "base_dim": 1,
    "hamiltonian": {"polynomial": [[0.5, [0, 2, 0]], [-1, [4, 0, 0]]]},
    "integrator": {"dt": 0.01, "t_end": 5},
    "z0": {"x": [1], "y": [1, 0]},
}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_algebra_list_and_info(capsys):
    assert main(["algebra", "list"]) == EXIT_OK
    listed = capsys.readouterr().out.split()
    assert "so3" in listed and "e3" in listed
    code, info = run_json(capsys, ["algebra", "info", "so3"])
    assert code == EXIT_OK and info["rank"] == 3 and info["jacobi_defect"] <= 1e-15
    code, info = run_json(capsys, ["algebra", "info", "e3"])
    assert info["rank"] == 6


def test_algebra_unknown(capsys):
    assert main(["algebra", "info", "nope"]) == EXIT_USAGE
    assert "nope" in capsys.readouterr().err


def test_orbit_dim(capsys):
    assert main(["orbit", "dim", "--algebra", "so3", "--xi", "0,0,1"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "2"
    assert main(["orbit", "dim", "--algebra", "so3", "--xi", "0,0,0"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0"


def test_orbit_sample_verify(tmp_path, capsys):
    out = tmp_path / "orbit.csv"
    args = ["orbit", "sample", "--algebra", "e3", "--xi", "0.3,-0.5,0.2,1,0.4,-0.7", "--n", "100", "--out", str(out)]
    assert main(args + ["--verify"]) == EXIT_OK
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (100, 6)
    for inv in lie_core.catalog("e3").casimirs:
        vals = [inv.value(r) for r in rows]
        assert np.ptp(vals) <= 1e-9


def test_orbit_sample_degenerate(tmp_path):
    out = tmp_path / "orbit.csv"
    assert main(["orbit", "sample", "--algebra", "so3", "--xi", "0,0,0", "--n", "5", "--out", str(out)]) == EXIT_OK
    assert not np.any(np.loadtxt(out, delimiter=",", skiprows=1))


def test_simulate_golden(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", str(DATA / "euler_top.json"), "--out", str(out)]) == EXIT_OK
    golden = gzip.decompress((DATA / "euler_top_trajectory.csv.gz").read_bytes())
    assert (out / "trajectory.csv").read_bytes() == golden
    report = json.loads((out / "conservation.json").read_text())
    assert report["H"]["drift"] <= 1e-8 and report["norm2"]["drift"] <= 1e-8


def test_simulate_deterministic(tmp_path):
    cfg = write_config(tmp_path, {"schema": 1, "hamiltonian": "e3_kirchhoff", "integrator": {"dt": 0.01, "t_end": 1}})
    for d in ("a", "b"):
        assert main(["simulate", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
    for f in ("trajectory.csv", "conservation.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_declared_non_integral(tmp_path):
    cfg = {
        "schema": 1,
        "hamiltonian": "euler_top",
        "integrator": {"dt": 0.01, "t_end": 1},
        "observables": ["H", "y0"],
    }
    assert main(["simulate", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_FAIL


def test_simulate_polynomial_with_casimir(tmp_path):
    cfg = {
        "schema": 1,
        "algebra": "so3",
        "hamiltonian": {"polynomial": [[0.5, [2, 0, 0]], [1.0, [0, 1, 1]]]},
        "integrator": {"dt": 0.01, "t_end": 2},
        "z0": {"y": [1, 0.2, -0.3]},
        "observables": ["H", "norm2"],
    }
    assert main(["simulate", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_OK


@pytest.mark.parametrize(
    "cfg",
    [
        {"schema": 1, "hamiltonian": "euler_top", "integrator": {"dt": 0, "t_end": 1}},
        {"schema": 1, "hamiltonian": "euler_top", "integrator": {"dt": 0.1, "t_end": 1}, "typo": 1},
        {"schema": 2, "hamiltonian": "euler_top", "integrator": {"dt": 0.1, "t_end": 1}},
        {"schema": 1, "hamiltonian": "lagrange_top", "integrator": {"dt": 0.1, "t_end": 1}},
        {"schema": 1, "algebra": "nope", "hamiltonian": "euler_top", "integrator": {"dt": 0.1, "t_end": 1}},
    ],
)
def test_simulate_config_errors(tmp_path, cfg):
    assert main(["simulate", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_simulate_missing_and_malformed(tmp_path):
    assert main(["simulate", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_simulate_divergence(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", write_config(tmp_path, DIVERGING), "--out", str(out)]) == EXIT_DIVERGED
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x_0,y_0,y_1" and len(lines) > 2


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "jacobi", "--algebra", "so3"],
        ["check", "axioms", "--kind", "coadjoint", "--xi", "0,0,1", "--samples", "50"],
        ["check", "axioms", "--kind", "cotangent", "--samples", "50"],
        ["check", "multiplicativity", "--group", "so3", "--samples", "50", "--h", "1e-5", "--tol", "1e-4"],
        ["check", "involution", "--preset", "e3_kirchhoff", "--tol", "1e-8"],
        ["check", "correspondence", "--algebra", "so3", "--xi", "0,0,1"],
    ],
)
def test_checks_pass(capsys, argv):
    code, report = run_json(capsys, argv)
    assert code == EXIT_OK and report["passed"] is True
    assert report["command"] and report["records"]
    for r in report["records"]:
        assert {"check", "max_defect", "samples", "seed"} <= set(r)


def test_check_failures(capsys):
    assert main(["check", "multiplicativity", "--samples", "10", "--perturb", "1"]) == EXIT_FAIL
    capsys.readouterr()


def test_check_usage_errors(capsys):
    assert main(["check", "bogus"]) == EXIT_USAGE
    assert main(["check", "involution", "--tol", "-1"]) == EXIT_USAGE
    assert main(["check", "jacobi", "--algebra", "nope"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    capsys.readouterr()


def test_check_report_deterministic(capsys, tmp_path):
    reports = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["check", "involution", "--preset", "euler_top", "--out", str(out)]) == EXIT_OK
        rep = json.loads(out.read_text())
        rep.pop("timestamp")
        reports.append(rep)
    assert reports[0] == reports[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coadgroupoid", "algebra", "info", "nope"], capture_output=True)
    assert proc.returncode == EXIT_USAGE and proc.stderr

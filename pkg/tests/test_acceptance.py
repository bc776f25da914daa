"""Acceptance suite: one test per criterion, each printing a pass/fail line with its runtime."""
import gzip
import json
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from coadgroupoid import lie_core
from coadgroupoid.algebroid import (
    coadjoint_algebroid,
    fiberwise_algebroid,
    structure_identity_defect,
    trivial_algebroid,
)
from coadgroupoid.dynamics import (
    conservation,
    correspondence_check,
    euler_hamiltonian,
    integrate,
    preset,
)
from coadgroupoid.groupoid_chart import (
    axioms_check,
    make_coadjoint_groupoid,
    make_trivial_groupoid,
    tm_coadjoint_check,
)
from coadgroupoid.lie_poisson import (
    bivector,
    coordinate,
    coordinate_triples,
    fiber_coordinate,
    fiber_quadratic,
    hamiltonian_vector_field,
    jacobi_check,
    poisson_bracket,
    polynomial,
    sample_points,
)
from coadgroupoid.matrix_group import big_coad, exp_matrix, orbit_dimension, rep_from_catalog
from coadgroupoid.symplectic_check import (
    cotangent_groupoid,
    fiber_area_perturbation,
    multiplicativity_check,
    orbit_nondegeneracy,
)

CATALOG = ["so3", "so4", "so31", "e3", "sl2", "heis3", "abelian(3)"]
DATA = Path(__file__).parent / "data"


@contextmanager
def criterion(capsys, number, title, budget):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        if status == "PASS" and elapsed >= budget:
            status = "FAIL"
        with capsys.disabled():
            print(f"\n[{status}] criterion {number:2d}: {title} ({elapsed:.2f} s, budget {budget:g} s)")
    assert elapsed < budget, f"criterion {number} took {elapsed:.2f} s"


def test_c01_algebra_axioms(capsys):
    with criterion(capsys, 1, "Jacobi and coad homomorphism <= 1e-12 on the catalog", 1):
        for name in CATALOG:
            L = lie_core.catalog(name).algebra
            assert lie_core.jacobi_defect(L) <= 1e-12, name
            assert lie_core.coad_homomorphism_defect(L, samples=100, seed=0) <= 1e-12, name


def test_c02_coadjoint_action_derivative(capsys):
    h = 1e-5
    with criterion(capsys, 2, "d/dt Ad*_exp(tX) xi at 0 equals coad(X) xi to 1e-8", 1):
        for name in CATALOG:
            rep = rep_from_catalog(name)
            L = rep.algebra
            rng = np.random.default_rng(0)
            for _ in range(50):
                X, xi = rng.uniform(-1, 1, (2, L.rank))
                plus = big_coad(rep, exp_matrix(rep.matrix(h * X)), xi)
                minus = big_coad(rep, exp_matrix(rep.matrix(-h * X)), xi)
                d = (plus - minus) / (2 * h)
                assert np.max(np.abs(d - lie_core.coad(L, X, xi))) <= 1e-8, name


def test_c03_orbit_geometry(capsys):
    with criterion(capsys, 3, "orbit dimensions, KKS Gram rank and parity", 5):
        assert orbit_dimension(lie_core.catalog("so3").algebra, [0, 0, 1]) == 2
        e3 = lie_core.catalog("e3").algebra
        assert orbit_dimension(e3, np.random.default_rng(1).uniform(-1, 1, 6)) == 4
        for name in CATALOG:
            L = lie_core.catalog(name).algebra
            rng = np.random.default_rng(2)
            for _ in range(100):
                res = orbit_nondegeneracy(L, rng.uniform(-1, 1, L.rank))
                assert res.ok and res.orbit_dim % 2 == 0, name


def test_c04_groupoid_axioms(capsys):
    with criterion(capsys, 4, "groupoid axioms <= 1e-9 and Tm lemma with O(h^2) refinement", 10):
        rep = rep_from_catalog("so3")
        xi = np.array([0.0, 0.0, 1.0])
        assert axioms_check(make_trivial_groupoid(2, rep), 200, 0).max_residual <= 1e-9
        assert axioms_check(make_coadjoint_groupoid(2, rep, xi), 200, 0).max_residual <= 1e-9
        d = [tm_coadjoint_check(rep, xi, 50, 0, h) for h in (1e-3, 1e-4, 1e-5)]
        assert d[2] <= 1e-6
        assert 50 <= d[0] / d[1] <= 200 and 50 <= d[1] / d[2] <= 200


def test_c05_structure_function_equality(capsys):
    with criterion(capsys, 5, "ad*_[ea,eb] xi0 = C^g_ab ad*_eg xi0 to 1e-12", 1):
        for name in CATALOG:
            L = lie_core.catalog(name).algebra
            rng = np.random.default_rng(3)
            for _ in range(20):
                assert structure_identity_defect(L, rng.uniform(-1, 1, L.rank)) <= 1e-12, name


def _poisson_specs():
    so3 = lie_core.catalog("so3").algebra
    specs = [fiberwise_algebroid(lie_core.catalog(n).algebra) for n in CATALOG]
    specs += [trivial_algebroid(1, so3), trivial_algebroid(2, so3), coadjoint_algebroid(2, so3, [0, 0, 1])]
    return specs


def test_c06_poisson_layer(capsys):
    with criterion(capsys, 6, "Hamiltonian field = bivector . grad H, Jacobi <= 1e-6, pullbacks commute", 10):
        rng = np.random.default_rng(4)
        for spec in _poisson_specs():
            n, k = spec.base_dim, spec.rank
            terms = [(rng.uniform(-1, 1), rng.integers(0, 3, n + k)) for _ in range(6)]
            H = polynomial(terms, n, k)
            for p in sample_points(spec, 100, 5):
                dx, dy = hamiltonian_vector_field(spec, H, p)
                ref = bivector(spec, p) @ H.gradient(p)
                assert np.max(np.abs(np.concatenate([dx, dy]) - ref)) <= 1e-10
            if n + k <= 6:
                assert jacobi_check(spec, coordinate_triples(spec), 3, 0) <= 1e-6
            for i in range(n):
                for j in range(n):
                    xi_, xj = coordinate(i, n, k), coordinate(j, n, k)
                    assert all(poisson_bracket(spec, xi_, xj, p) == 0.0 for p in sample_points(spec, 10, 6))


def test_c07_dynamics(capsys):
    with criterion(capsys, 7, "Euler top conservation, rk4 order, time reversal, e(3) Casimirs", 30):
        top = preset("euler_top")
        run = integrate(top.spec, top.H, top.z0, 10.0, 1e-3)
        assert conservation(run, top.integrals).max_drift() <= 1e-8
        dt = 0.04
        ref = integrate(top.spec, top.H, top.z0, 10.0, dt / 20).final.y
        e1 = np.linalg.norm(integrate(top.spec, top.H, top.z0, 10.0, dt).final.y - ref)
        e2 = np.linalg.norm(integrate(top.spec, top.H, top.z0, 10.0, dt / 2).final.y - ref)
        assert 12 <= e1 / e2 <= 20
        back = integrate(top.spec, top.H, run.final, 10.0, 1e-3, backward=True)
        assert np.max(np.abs(back.final.y - top.z0.y)) <= 1e-6
        e3 = preset("e3_kirchhoff", c=(0.1, -0.2, 0.3))
        traj = integrate(e3.spec, e3.H, e3.z0, 10.0, 1e-3)
        drift = conservation(traj, e3.integrals)
        assert drift.entries["p_dot_p"].drift <= 1e-8 and drift.entries["y_dot_p"].drift <= 1e-8


def test_c08_first_integral_correspondence(capsys):
    with criterion(capsys, 8, "product and fiberwise defects agree to 1e-10", 5):
        so3 = lie_core.catalog("so3").algebra
        H = euler_hamiltonian([1, 2, 3])
        good = correspondence_check(so3, [0, 0, 1], 1, fiber_quadratic(np.eye(3), name="norm2"), H, 50, 0)
        bad = correspondence_check(so3, [0, 0, 1], 1, fiber_coordinate(0, 3), H, 50, 0)
        assert good.product_passed and good.fiber_passed
        assert not bad.product_passed and not bad.fiber_passed
        for rep in (good, bad):
            assert abs(rep.product_defect - rep.fiber_defect) <= 1e-10


def test_c09_multiplicativity(capsys):
    with criterion(capsys, 9, "cotangent groupoid form is multiplicative, perturbation detected", 30):
        G, omega = cotangent_groupoid(rep_from_catalog("abelian(3)"))
        assert multiplicativity_check(G, omega, 50, 0, 1e-5).max_defect <= 1e-10
        so3 = rep_from_catalog("so3")
        G, omega = cotangent_groupoid(so3)
        d = [multiplicativity_check(G, omega, 50, 0, h).max_defect for h in (1e-3, 1e-4, 1e-5)]
        assert d[2] <= 1e-5
        assert 50 <= d[0] / d[1] <= 200 and 50 <= d[1] / d[2] <= 200
        bad = omega.plus(fiber_area_perturbation(so3))
        assert multiplicativity_check(G, bad, 50, 0, 1e-5).max_defect > 1e-2


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "coadgroupoid", *args], capture_output=True, text=True)


def test_c10_cli(capsys, tmp_path):
    with criterion(capsys, 10, "golden euler_top CSV and the exit-code contract", 60):
        out = tmp_path / "golden"
        assert _cli("simulate", str(DATA / "euler_top.json"), "--out", str(out)).returncode == 0
        golden = gzip.decompress((DATA / "euler_top_trajectory.csv.gz").read_bytes())
        assert (out / "trajectory.csv").read_bytes() == golden

        def config(name, cfg):
            p = tmp_path / name
            p.write_text(json.dumps(cfg))
            return str(p)

        base = {"schema": 1, "hamiltonian": "euler_top", "integrator": {"dt": 0.01, "t_end": 1}}
        violated = config("violated.json", {**base, "observables": ["H", "y0"]})
        bad_dt = config("bad_dt.json", {**base, "integrator": {"dt": 0, "t_end": 1}})
        diverging = config(
            "diverging.json",
            {
                "schema": 1,
                "algebra": "abelian(1)",
                "algebroid": "trivial",
                "base_dim": 1,
                "hamiltonian": {"polynomial": [[0.5, [0, 2, 0]], [-1, [4, 0, 0]]]},
                "integrator": {"dt": 0.01, "t_end": 5},
                "z0": {"x": [1], "y": [1, 0]},
            },
        )
        cases = [
            (("algebra", "info", "so3"), 0),
            (("orbit", "dim", "--algebra", "so3", "--xi", "0,0,1"), 0),
            (("check", "jacobi", "--algebra", "so3"), 0),
            (("check", "involution", "--preset", "e3_kirchhoff", "--tol", "1e-8"), 0),
            (("check", "multiplicativity", "--group", "so3", "--samples", "50", "--h", "1e-5", "--tol", "1e-4"), 0),
            (("simulate", violated, "--out", str(tmp_path / "v")), 1),
            (("check", "multiplicativity", "--samples", "5", "--perturb", "1"), 1),
            (("algebra", "info", "nope"), 2),
            (("simulate", bad_dt, "--out", str(tmp_path / "d")), 2),
            (("check", "bogus"), 2),
            (("simulate", diverging, "--out", str(tmp_path / "x")), 3),
        ]
        for args, code in cases:
            assert _cli(*args).returncode == code, args
        assert (tmp_path / "x" / "trajectory.csv").exists()

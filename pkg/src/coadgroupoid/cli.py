"""Command-line front end.

Exit codes: 0 pass, 1 check failure, 2 usage or config error, 3 numerical
divergence.
"""
from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import dynamics, lie_core, lie_poisson, symplectic_check
from .algebroid import coadjoint_algebroid, fiberwise_algebroid, trivial_algebroid
from .errors import DivergenceError, InputError, RepresentationError
from .groupoid_chart import axioms_check, make_coadjoint_groupoid, make_trivial_groupoid
from .lie_poisson import DualPoint, Observable
from .matrix_group import MatrixRep, orbit_dimension, orbit_points_to_csv, orbit_sample

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- config ---------------------------------------------------------------

_VECTOR = {"type": "array", "items": {"type": "number"}}
_POLY = {
    "type": "array",
    "items": {"type": "array", "prefixItems": [{"type": "number"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}], "minItems": 2, "maxItems": 2},
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "hamiltonian", "integrator"],
    "properties": {
        "schema": {"const": 1},
        "algebra": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["rank", "entries"],
                    "properties": {"rank": {"type": "integer", "minimum": 1}, "entries": {"type": "array"}},
                },
            ]
        },
        "algebroid": {"enum": ["fiberwise", "trivial", "coadjoint"]},
        "base_dim": {"type": "integer", "minimum": 0},
        "xi0": _VECTOR,
        "hamiltonian": {
            "oneOf": [
                {"enum": list(dynamics.PRESET_NAMES)},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["preset"],
                    "properties": {
                        "preset": {"enum": list(dynamics.PRESET_NAMES)},
                        "inertia": _VECTOR,
                        "c": _VECTOR,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["polynomial"],
                    "properties": {"polynomial": _POLY},
                },
            ]
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dt", "t_end"],
            "properties": {
                "method": {"enum": ["rk4", "euler"]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "z0": {
            "type": "object",
            "additionalProperties": False,
            "required": ["y"],
            "properties": {"x": _VECTOR, "y": _VECTOR},
        },
        "observables": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "string"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name", "polynomial"],
                        "properties": {"name": {"type": "string"}, "polynomial": _POLY},
                    },
                ]
            },
        },
        "seed": {"type": "integer"},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"drift": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"invalid config at {where}: {exc.message}") from None
    if data["integrator"]["t_end"] < data["integrator"]["dt"]:
        raise UsageError("integrator.t_end must be at least dt")
    return data


def _algebra_from_config(value) -> tuple[lie_core.StructureConstants, list]:
    if isinstance(value, str):
        entry = lie_core.catalog(value)
        return entry.algebra, list(entry.casimirs)
    return lie_core.StructureConstants.from_json_dict(value), []


def _named_observables(spec, H, extra: list[Observable], casimirs) -> dict[str, Observable]:
    n, k = spec.base_dim, spec.rank
    named = {"H": H}
    for F in extra:
        named[F.name] = F
    for inv in casimirs:
        named.setdefault(inv.name, lie_poisson.from_invariant(inv))
    for i in range(n):
        named[f"x{i}"] = lie_poisson.coordinate(i, n, k)
    for a in range(k):
        named[f"y{a}"] = lie_poisson.coordinate(n + a, n, k)
    return named


def build_system(cfg: dict):
    """Resolve a validated config into ``(spec, H, z0, integrals)``."""
    ham = cfg["hamiltonian"]
    if isinstance(ham, str):
        ham = {"preset": ham}
    preset = None
    if "preset" in ham:
        kwargs = {key: tuple(ham[key]) for key in ("inertia", "c") if key in ham}
        preset = dynamics.preset(ham["preset"], **kwargs)
        preset_algebra = "so3" if ham["preset"] == "euler_top" else "e3"
        if "algebra" in cfg and cfg["algebra"] != preset_algebra:
            raise UsageError(f"preset {ham['preset']} runs on {preset_algebra}, config says {cfg['algebra']!r}")
        cfg = {**cfg, "algebra": preset_algebra}
    if "algebra" not in cfg:
        raise UsageError("config needs an algebra when the hamiltonian is not a preset")
    L, casimirs = _algebra_from_config(cfg["algebra"])
    n = cfg.get("base_dim", 0)
    kind = cfg.get("algebroid", "fiberwise")
    if kind == "fiberwise":
        spec = fiberwise_algebroid(L, n)
    elif kind == "trivial":
        spec = trivial_algebroid(n, L)
    else:
        if "xi0" not in cfg:
            raise UsageError("coadjoint algebroid needs xi0")
        spec = coadjoint_algebroid(n, L, cfg["xi0"])
    k = spec.rank
    if preset is not None and (spec.base_dim or k != preset.spec.rank):
        raise UsageError("preset hamiltonians need a fiberwise algebroid with base_dim 0")
    if preset is not None:
        H, extra = preset.H, preset.integrals[1:]
    else:
        H, extra = lie_poisson.polynomial(ham["polynomial"], spec.base_dim, k, name="H"), []
    named = _named_observables(spec, H, extra, casimirs)

    z0cfg = cfg.get("z0")
    if z0cfg is None:
        if preset is None:
            raise UsageError("config needs z0 when the hamiltonian is not a preset")
        z0 = preset.z0
    else:
        z0 = DualPoint(z0cfg.get("x", []), z0cfg["y"])
    if z0.x.shape != (spec.base_dim,) or z0.y.shape != (k,):
        raise UsageError(f"z0 must have x of length {spec.base_dim} and y of length {k}")

    if "observables" in cfg:
        integrals = []
        for item in cfg["observables"]:
            if isinstance(item, str):
                if item not in named:
                    raise UsageError(f"unknown observable {item!r}; known: {', '.join(named)}")
                integrals.append(named[item])
            else:
                integrals.append(lie_poisson.polynomial(item["polynomial"], spec.base_dim, k, name=item["name"]))
    else:
        integrals = [H] + list(extra)
    return spec, H, z0, integrals


# -- helpers --------------------------------------------------------------


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _rep(name: str) -> MatrixRep:
    entry = lie_core.catalog(name)
    return MatrixRep(entry.algebra, entry.basis, entry.name)


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _emit(report: dict, out: Optional[str]) -> None:
    report = {**report, "timestamp": _timestamp()}
    text = json.dumps(report, indent=2, default=float) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _record(check: str, defect: float, samples: int, seed: int, h: Optional[float] = None, **extra) -> dict:
    rec = {"check": check, "max_defect": float(defect), "samples": samples, "seed": seed}
    if h is not None:
        rec["h"] = h
    rec.update(extra)
    return rec


def _finish(command: str, records: list[dict], tol: float, out: Optional[str], passed: Optional[bool] = None) -> int:
    if passed is None:
        passed = all(r["max_defect"] <= tol for r in records)
    _emit({"command": command, "tol": tol, "passed": bool(passed), "records": records}, out)
    return EXIT_OK if passed else EXIT_FAIL


# -- commands -------------------------------------------------------------


def cmd_algebra(args) -> int:
    if args.action == "list":
        for name in lie_core.CATALOG_NAMES:
            print(name)
        return EXIT_OK
    if not args.name:
        raise UsageError("algebra info needs a name")
    entry = lie_core.catalog(args.name)
    info = {
        "name": entry.name,
        "rank": entry.algebra.rank,
        "jacobi_defect": lie_core.jacobi_defect(entry.algebra),
        "matrix_size": entry.matrix_size,
        "casimirs": [c.name for c in entry.casimirs],
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def _casimir_scan(entry, xi0, points) -> float:
    worst = 0.0
    for inv in entry.casimirs:
        ref = inv.value(xi0)
        for p in points:
            worst = max(worst, abs(inv.value(p.xi) - ref) / max(1.0, abs(ref)))
    return worst


def cmd_orbit(args) -> int:
    entry = lie_core.catalog(args.algebra)
    L = entry.algebra
    xi = L.check_vector(args.xi, "xi")
    if args.action == "dim":
        print(orbit_dimension(L, xi))
        return EXIT_OK
    rep = MatrixRep(L, entry.basis, entry.name)
    points = orbit_sample(rep, xi, args.n, args.seed)
    text = orbit_points_to_csv(points)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.verify:
        drift = _casimir_scan(entry, xi, points)
        ok = drift <= args.tol
        print(f"casimir scan: max relative drift {drift:.3g} ({'ok' if ok else 'FAILED'})", file=sys.stderr)
        return EXIT_OK if ok else EXIT_FAIL
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    spec, H, z0, integrals = build_system(cfg)
    integ = cfg["integrator"]
    tol = cfg.get("tolerances", {}).get("drift", 1e-8)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj = dynamics.integrate(spec, H, z0, integ["t_end"], integ["dt"], integ.get("method", "rk4"))
    except DivergenceError as exc:
        (out / "trajectory.csv").write_text(exc.trajectory.to_csv())
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    (out / "trajectory.csv").write_text(traj.to_csv())
    report = dynamics.conservation(traj, integrals)
    (out / "conservation.json").write_text(report.to_json() + "\n")
    bad = [name for name, e in report.entries.items() if e.drift > tol]
    for name in bad:
        print(f"integral {name} drifted by {report.entries[name].drift:.3g} > {tol:g}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def _check_jacobi(args) -> int:
    L = lie_core.catalog(args.algebra).algebra
    spec = trivial_algebroid(args.base_dim, L) if args.base_dim else fiberwise_algebroid(L)
    records = [
        _record("jacobi_defect", lie_core.jacobi_defect(L), 0, args.seed),
        _record("coad_homomorphism", lie_core.coad_homomorphism_defect(L, args.samples, args.seed), args.samples, args.seed),
        _record(
            "poisson_jacobi",
            lie_poisson.jacobi_check(spec, lie_poisson.coordinate_triples(spec), args.samples, args.seed, args.h),
            args.samples, args.seed, args.h,
        ),
    ]
    return _finish("check jacobi", records, args.tol, args.out)


def _check_axioms(args) -> int:
    rep = _rep(args.algebra)
    if args.kind == "trivial":
        G = make_trivial_groupoid(args.base_dim, rep)
    elif args.kind == "coadjoint":
        xi = rep.algebra.check_vector(args.xi if args.xi is not None else np.eye(rep.rank)[-1], "xi")
        G = make_coadjoint_groupoid(args.base_dim, rep, xi)
    else:
        G, _ = symplectic_check.cotangent_groupoid(rep)
    report = axioms_check(G, args.samples, args.seed)
    records = [
        _record(r["axiom"], r["max_residual"], r["samples"], r["seed"]) for r in report.to_records()
    ]
    return _finish(f"check axioms {args.kind}", records, args.tol, args.out)


def _check_multiplicativity(args) -> int:
    rep = _rep(args.group)
    G, omega = symplectic_check.cotangent_groupoid(rep)
    if args.perturb:
        omega = omega.plus(symplectic_check.fiber_area_perturbation(rep, args.perturb))
    rep_ = symplectic_check.multiplicativity_check(G, omega, args.samples, args.seed, args.h)
    records = [rep_.to_json_dict()]
    return _finish("check multiplicativity", records, args.tol, args.out)


def _check_involution(args) -> int:
    kwargs = {}
    if args.c is not None:
        kwargs["c"] = tuple(args.c)
    p = dynamics.preset(args.preset, **kwargs)
    rep = dynamics.involution_check(p.spec, p.integrals, args.samples, args.seed, args.tol)
    records = []
    for i, a in enumerate(rep.names):
        for j in range(i + 1, len(rep.names)):
            records.append(_record(f"{{{a},{rep.names[j]}}}", rep.matrix[i, j], args.samples, args.seed))
    extra = {"commuting": rep.commuting, "independent": rep.independent}
    _emit({"command": "check involution", "tol": args.tol, "passed": rep.passed, "records": records, **extra}, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _fiber_observable(name: str, entry) -> Observable:
    k = entry.algebra.rank
    for inv in entry.casimirs:
        if inv.name == name:
            return lie_poisson.from_invariant(inv)
    if name.startswith("y") and name[1:].isdigit() and int(name[1:]) < k:
        return lie_poisson.fiber_coordinate(int(name[1:]), k)
    known = [c.name for c in entry.casimirs] + [f"y{a}" for a in range(k)]
    raise UsageError(f"unknown function {name!r}; known: {', '.join(known)}")


def _check_correspondence(args) -> int:
    entry = lie_core.catalog(args.algebra)
    L = entry.algebra
    k = L.rank
    xi = L.check_vector(args.xi if args.xi is not None else np.eye(k)[-1], "xi")
    if args.f is None:
        if not entry.casimirs:
            raise UsageError("algebra has no catalog Casimir; pass --f")
        f = lie_poisson.from_invariant(entry.casimirs[0])
    else:
        f = _fiber_observable(args.f, entry)
    inertia = args.inertia if args.inertia is not None else np.arange(1.0, k + 1)
    h = dynamics.euler_hamiltonian(inertia[:k])
    rep = dynamics.correspondence_check(L, xi, args.base_dim, f, h, args.samples, args.seed, args.tol)
    records = [
        _record("product_first_integral", rep.product_defect, args.samples, args.seed),
        _record("fiber_first_integral", rep.fiber_defect, args.samples, args.seed),
    ]
    extra = {"product_passed": rep.product_passed, "fiber_passed": rep.fiber_passed}
    _emit({"command": "check correspondence", "tol": args.tol, "passed": rep.agree, "records": records, **extra}, args.out)
    return EXIT_OK if rep.agree else EXIT_FAIL


_CHECKS = {
    "jacobi": _check_jacobi,
    "axioms": _check_axioms,
    "multiplicativity": _check_multiplicativity,
    "involution": _check_involution,
    "correspondence": _check_correspondence,
}


def cmd_check(args) -> int:
    return _CHECKS[args.target](args)


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coadgroupoid", description="Co-adjoint orbits, Lie-Poisson dynamics and groupoid checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("algebra", help="list catalog algebras or show one")
    p.add_argument("action", choices=("list", "info"))
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_algebra)

    p = sub.add_parser("orbit", help="co-adjoint orbit dimension or samples")
    p.add_argument("action", choices=("sample", "dim"))
    p.add_argument("--algebra", required=True)
    p.add_argument("--xi", type=_vector, required=True, help="comma-separated; use --xi=-1,0,0 for negatives")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--verify", action="store_true", help="check Casimir invariance of every sample")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("simulate", help="integrate a configured system")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run a verification suite")
    p.add_argument("target", choices=tuple(_CHECKS))
    p.add_argument("--algebra", default="so3")
    p.add_argument("--group", default="so3")
    p.add_argument("--preset", default="euler_top", choices=dynamics.PRESET_NAMES)
    p.add_argument("--kind", default="trivial", choices=("trivial", "coadjoint", "cotangent"))
    p.add_argument("--xi", type=_vector)
    p.add_argument("--base-dim", type=int, default=1)
    p.add_argument("--f", help="fiber function: a catalog Casimir name or yN")
    p.add_argument("--inertia", type=_vector)
    p.add_argument("--c", type=_vector)
    p.add_argument("--perturb", type=float, default=0.0, help="add a non-multiplicative fiber term")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)
    return parser


# module defaults per check: samples, h, tol
_CHECK_DEFAULTS = {
    "jacobi": (20, lie_poisson.JACOBI_H, 1e-6),
    "axioms": (200, None, 1e-9),
    "multiplicativity": (50, 1e-5, 1e-4),
    "involution": (50, None, 1e-8),
    "correspondence": (50, None, 1e-8),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "check":
            samples, h, tol = _CHECK_DEFAULTS[args.target]
            args.samples = samples if args.samples is None else args.samples
            args.h = h if args.h is None else args.h
            args.tol = tol if args.tol is None else args.tol
            if args.samples < 1 or (args.h is not None and args.h <= 0) or args.tol <= 0:
                raise UsageError("--samples, --h and --tol must be positive")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InputError, RepresentationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Hamiltonian flows on the dual bundle, first integrals and presets."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lie_core
from .algebroid import AlgebroidSpec, coadjoint_algebroid, fiberwise_algebroid
from .errors import DivergenceError, InputError
from .lie_poisson import (
    DualPoint,
    Observable,
    as_point,
    fiber_quadratic,
    from_invariant,
    hamiltonian_vector_field,
    kk_bracket,
    poisson_bracket,
    sample_points,
)
from .lie_core import StructureConstants

INDEPENDENCE_RTOL = 1e-8


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[DualPoint]

    @property
    def base_dim(self) -> int:
        return len(self.states[0].x)

    def array(self) -> np.ndarray:
        """States stacked as rows ``[x, y]``."""
        return np.array([s.z for s in self.states])

    @property
    def final(self) -> DualPoint:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.base_dim
        k = len(self.states[0].y)
        w.writerow(["t"] + [f"x_{i}" for i in range(n)] + [f"y_{a}" for a in range(k)])
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in s.z])
        return buf.getvalue()


def _field(spec, H, z, n):
    dx, dy = hamiltonian_vector_field(spec, H, DualPoint.from_flat(z, n))
    return np.concatenate([dx, dy])


def integrate(
    spec: AlgebroidSpec,
    H: Observable,
    z0,
    t_end: float,
    dt: float,
    method: str = "rk4",
    backward: bool = False,
) -> Trajectory:
    """Fixed-step integration of the Hamiltonian field of H from z0.

    ``backward=True`` flows the field in negative time; the recorded times
    still increase from 0 to t_end.
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    if not t_end >= dt:
        raise InputError("t_end must be at least dt")
    if method not in ("rk4", "euler"):
        raise InputError(f"unknown method {method!r}")
    p0 = as_point(z0)
    n = spec.base_dim
    steps = int(round(t_end / dt))
    sign = -1.0 if backward else 1.0
    z = p0.z
    times = [0.0]
    states = [p0]
    for i in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                if method == "euler":
                    z = z + dt * sign * _field(spec, H, z, n)
                else:
                    k1 = sign * _field(spec, H, z, n)
                    k2 = sign * _field(spec, H, z + 0.5 * dt * k1, n)
                    k3 = sign * _field(spec, H, z + 0.5 * dt * k2, n)
                    k4 = sign * _field(spec, H, z + dt * k3, n)
                    z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            except InputError:
                z = np.full_like(z, np.nan)
        if not np.all(np.isfinite(z)):
            partial = Trajectory(np.array(times), states)
            raise DivergenceError(f"non-finite state after t={times[-1]:g}", partial, times[-1])
        times.append(i * dt)
        states.append(DualPoint.from_flat(z, n))
    return Trajectory(np.array(times), states)


@dataclass
class ConservationEntry:
    initial: float
    drift: float
    relative_drift: float


@dataclass
class ConservationReport:
    entries: dict[str, ConservationEntry] = field(default_factory=dict)

    def max_drift(self) -> float:
        return max((e.drift for e in self.entries.values()), default=0.0)

    def to_json_dict(self) -> dict:
        return {
            name: {"initial": e.initial, "drift": e.drift, "relative_drift": e.relative_drift}
            for name, e in self.entries.items()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def conservation(traj: Trajectory, observables: Sequence[Observable]) -> ConservationReport:
    rep = ConservationReport()
    for i, F in enumerate(observables):
        vals = np.array([F(s) for s in traj.states])
        drift = float(np.max(np.abs(vals - vals[0])))
        rel = drift / abs(vals[0]) if vals[0] != 0 else drift
        rep.entries[F.name or f"F{i}"] = ConservationEntry(float(vals[0]), drift, float(rel))
    return rep


@dataclass
class FirstIntegralReport:
    mode: str
    defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.tol


def first_integral_check(
    spec: AlgebroidSpec,
    H: Observable,
    F: Observable,
    mode: str = "pointwise",
    samples: int = 50,
    seed: int = 0,
    tol: float = 1e-8,
    z0=None,
    t_end: float = 10.0,
    dt: float = 1e-3,
) -> FirstIntegralReport:
    """Pointwise: max ``|{F, H}|`` over samples.  Trajectory: drift of F from z0."""
    if mode == "pointwise":
        pts = sample_points(spec, samples, seed)
        defect = max((abs(poisson_bracket(spec, F, H, p)) for p in pts), default=0.0)
    elif mode == "trajectory":
        if z0 is None:
            raise InputError("trajectory mode needs z0")
        traj = integrate(spec, H, z0, t_end, dt)
        defect = conservation(traj, [F]).max_drift()
    else:
        raise InputError(f"unknown mode {mode!r}")
    return FirstIntegralReport(mode, float(defect), tol)


@dataclass
class InvolutionReport:
    matrix: np.ndarray
    tol: float
    names: list[str]
    commuting: int
    independent: int

    @property
    def passed(self) -> bool:
        return bool(np.all(self.matrix <= self.tol))

    def to_json_dict(self) -> dict:
        return {
            "names": self.names,
            "matrix": self.matrix.tolist(),
            "tol": self.tol,
            "commuting": self.commuting,
            "independent": self.independent,
        }


def _largest_clique(adj: np.ndarray) -> list[int]:
    m = len(adj)
    best: list[int] = []

    def grow(chosen, rest):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        for j, v in enumerate(rest):
            if all(adj[v, u] for u in chosen):
                grow(chosen + [v], rest[j + 1:])

    grow([], list(range(m)))
    return best


def involution_check(
    spec: AlgebroidSpec, funcs: Sequence[Observable], samples: int = 50, seed: int = 0, tol: float = 1e-8
) -> InvolutionReport:
    """Pairwise bracket defects, size of the largest commuting subset, and
    how many of that subset have independent gradients."""
    m = len(funcs)
    if m < 2:
        raise InputError("involution_check needs at least two functions")
    pts = sample_points(spec, samples, seed)
    M = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            M[i, j] = M[j, i] = max(abs(poisson_bracket(spec, funcs[i], funcs[j], p)) for p in pts)
    clique = _largest_clique(M <= tol)
    independent = 0
    for p in pts:
        grads = np.array([funcs[i].gradient(p) for i in clique])
        s = np.linalg.svd(grads, compute_uv=False)
        if s.size and s[0] > 0:
            independent = max(independent, int(np.sum(s > INDEPENDENCE_RTOL * s[0])))
    names = [F.name or f"F{i}" for i, F in enumerate(funcs)]
    return InvolutionReport(M, tol, names, len(clique), independent)


@dataclass
class CorrespondenceReport:
    product_defect: float
    fiber_defect: float
    tol: float

    @property
    def product_passed(self) -> bool:
        return self.product_defect <= self.tol

    @property
    def fiber_passed(self) -> bool:
        return self.fiber_defect <= self.tol

    @property
    def agree(self) -> bool:
        return self.product_passed == self.fiber_passed and abs(self.product_defect - self.fiber_defect) <= 1e-10


def correspondence_check(
    L: StructureConstants,
    xi0,
    base_dim: int,
    f: Observable,
    h: Observable,
    samples: int = 50,
    seed: int = 0,
    tol: float = 1e-8,
) -> CorrespondenceReport:
    """Is ``F = (p, f)`` a first integral of ``H = (p, h)`` exactly when f is one for h on g*?"""
    try:
        spec = coadjoint_algebroid(base_dim, L, xi0)
    except InputError:
        spec = fiberwise_algebroid(L, base_dim)
    product = first_integral_check(spec, h, f, samples=samples, seed=seed, tol=tol).defect
    pts = sample_points(spec, samples, seed)
    fiber = max(abs(kk_bracket(L, f, h, p.y)) for p in pts)
    return CorrespondenceReport(product, float(fiber), tol)


# -- presets --------------------------------------------------------------


@dataclass
class Preset:
    name: str
    spec: AlgebroidSpec
    H: Observable
    z0: DualPoint
    integrals: list[Observable]


def euler_hamiltonian(inertia, extra_linear=None) -> Observable:
    """``1/2 sum y_a^2 / I_a`` on the first len(I) fiber coordinates, plus ``c . p``."""
    inertia = np.asarray(inertia, dtype=float)
    if np.any(inertia <= 0):
        raise InputError("inertia must be positive")
    r = len(inertia)
    c = None if extra_linear is None else np.asarray(extra_linear, dtype=float)

    def func(x, y):
        v = 0.5 * float(np.sum(y[:r] ** 2 / inertia))
        if c is not None:
            v += float(c @ y[r:])
        return v

    def grad(x, y):
        g = np.zeros_like(y)
        g[:r] = y[:r] / inertia
        if c is not None:
            g[r:] = c
        return np.zeros_like(x), g

    return Observable(func, grad, name="H")


def preset(name: str, inertia=(1.0, 2.0, 3.0), c=(0.0, 0.0, 0.0), z0=None) -> Preset:
    if name == "euler_top":
        L = lie_core.catalog("so3").algebra
        spec = fiberwise_algebroid(L)
        H = euler_hamiltonian(inertia)
        start = DualPoint([], [1.0, 0.1, 0.1] if z0 is None else z0)
        return Preset(name, spec, H, start, [H, fiber_quadratic(np.eye(3), name="norm2")])
    if name == "e3_kirchhoff":
        entry = lie_core.catalog("e3")
        spec = fiberwise_algebroid(entry.algebra)
        H = euler_hamiltonian(inertia, c)
        start = DualPoint([], [1.0, 0.1, 0.1, 0.0, 0.0, 1.0] if z0 is None else z0)
        return Preset(name, spec, H, start, [H] + [from_invariant(inv) for inv in entry.casimirs])
    raise InputError(f"unknown preset {name!r}; choose euler_top or e3_kirchhoff")


PRESET_NAMES = ("euler_top", "e3_kirchhoff")


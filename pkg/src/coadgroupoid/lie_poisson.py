"""Linear Poisson structure on the dual bundle of an algebroid.

Coordinates on the dual bundle are ``(x^i, y_a)``; flattened state vectors
put the x block first.  Sign convention::

    {x^i, y_a} = rho^i_a        {y_a, y_b} = -C^g_ab y_g

which reproduces ``dy/dt = y x Omega`` for the free rigid body.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import lie_core
from .algebroid import AlgebroidSpec, coadjoint_algebroid, fiberwise_algebroid
from .errors import InputError
from .lie_core import StructureConstants

GRADIENT_H = 1e-6
JACOBI_H = 1e-4


@dataclass(frozen=True)
class DualPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        if x.ndim != 1 or y.ndim != 1:
            raise InputError("DualPoint coordinates must be 1-d")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("DualPoint has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_flat(cls, z, n: int) -> "DualPoint":
        z = np.asarray(z, dtype=float)
        return cls(z[:n], z[n:])


def as_point(at) -> DualPoint:
    if isinstance(at, DualPoint):
        return at
    x, y = at
    return DualPoint(x, y)


@dataclass(frozen=True)
class Observable:
    """A smooth function ``func(x, y)`` on the dual bundle.

    ``grad(x, y)`` returns ``(d/dx, d/dy)``; without it gradients come from
    central differences with step ``h``.
    """

    func: Callable[[np.ndarray, np.ndarray], float]
    grad: Optional[Callable] = None
    h: float = GRADIENT_H
    name: str = ""

    def __call__(self, at) -> float:
        p = as_point(at)
        return float(self.func(p.x, p.y))

    def value(self, x, y) -> float:
        return float(self.func(np.asarray(x, float), np.asarray(y, float)))

    def gradient(self, at) -> np.ndarray:
        p = as_point(at)
        if self.grad is not None:
            gx, gy = self.grad(p.x, p.y)
            return np.concatenate([np.broadcast_to(np.asarray(gx, float), p.x.shape), np.asarray(gy, float)])
        return central_gradient(lambda z: self.func(z[: len(p.x)], z[len(p.x):]), p.z, self.h)

    def numeric(self, h: Optional[float] = None) -> "Observable":
        """Same function with the analytic gradient dropped."""
        return Observable(self.func, None, self.h if h is None else h, self.name)


def central_gradient(f: Callable, z, h: float = GRADIENT_H) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (f(z + e) - f(z - e)) / (2.0 * h)
    return g


def coordinate(index: int, n: int, k: int, name: str = "") -> Observable:
    """The coordinate function ``z_index`` (x block first, then y)."""
    if not 0 <= index < n + k:
        raise InputError(f"coordinate index {index} out of range for n={n}, k={k}")
    e = np.zeros(n + k)
    e[index] = 1.0
    label = name or (f"x{index}" if index < n else f"y{index - n}")
    return Observable(
        lambda x, y: float(np.concatenate([x, y])[index]),
        lambda x, y: (e[: len(x)] if len(x) == n else np.zeros_like(x), e[n:]),
        name=label,
    )


def fiber_coordinate(a: int, k: int, name: str = "") -> Observable:
    """``y_a`` on any dual bundle with fiber rank k, ignoring x."""
    e = np.eye(k)[a]
    return Observable(lambda x, y: float(y[a]), lambda x, y: (np.zeros_like(x), e), name=name or f"y{a}")


def polynomial(terms: Sequence, n: int, k: int, name: str = "") -> Observable:
    """Polynomial ``sum coef * prod z_i ** p_i`` from ``[(coef, powers), ...]``."""
    parsed = []
    for coef, powers in terms:
        powers = np.asarray(powers, dtype=int)
        if powers.shape != (n + k,) or np.any(powers < 0):
            raise InputError(f"monomial powers must be {n + k} non-negative integers, got {powers.tolist()}")
        parsed.append((float(coef), powers))

    def func(x, y):
        z = np.concatenate([x, y])
        return float(sum(c * np.prod(z ** p) for c, p in parsed))

    def grad(x, y):
        z = np.concatenate([x, y])
        g = np.zeros(n + k)
        for c, p in parsed:
            for i in np.nonzero(p)[0]:
                q = p.copy()
                q[i] -= 1
                g[i] += c * p[i] * np.prod(z ** q)
        return g[:n], g[n:]

    return Observable(func, grad, name=name)


def fiber_quadratic(Q, name: str = "") -> Observable:
    """``y.Q.y`` on the fiber, independent of x."""
    Q = np.asarray(Q, dtype=float)
    S = Q + Q.T
    return Observable(lambda x, y: float(y @ Q @ y), lambda x, y: (np.zeros_like(x), S @ y), name=name)


def from_invariant(inv: lie_core.Invariant) -> Observable:
    return Observable(lambda x, y: inv.value(y), lambda x, y: (np.zeros_like(x), inv.gradient(y)), name=inv.name)


# -- structure ------------------------------------------------------------


def bivector(spec: AlgebroidSpec, at) -> np.ndarray:
    """The Poisson tensor at a point, x block first."""
    p = as_point(at)
    n, k = spec.base_dim, spec.rank
    if p.x.shape != (n,) or p.y.shape != (k,):
        raise InputError(f"point must have x of length {n} and y of length {k}")
    rho = spec.anchor_at(p.x)
    P = np.zeros((n + k, n + k))
    P[:n, n:] = rho.T
    P[n:, :n] = -rho
    P[n:, n:] = -np.einsum("abg,g->ab", spec.c_at(p.x), p.y)
    return P


def poisson_bracket(spec: AlgebroidSpec, F: Observable, G: Observable, at) -> float:
    p = as_point(at)
    return float(F.gradient(p) @ bivector(spec, p) @ G.gradient(p))


def hamiltonian_vector_field(spec: AlgebroidSpec, H: Observable, at) -> tuple[np.ndarray, np.ndarray]:
    """``(dx/dt, dy/dt)`` of the Hamiltonian equations, written out by blocks."""
    p = as_point(at)
    n = spec.base_dim
    g = H.gradient(p)
    dHdx, dHdy = g[:n], g[n:]
    rho = spec.anchor_at(p.x)
    dx = dHdy @ rho
    dy = -(rho @ dHdx + np.einsum("abg,b,g->a", spec.c_at(p.x), dHdy, p.y))
    return dx, dy


def bracket_observable(spec: AlgebroidSpec, F: Observable, G: Observable, h: float = JACOBI_H) -> Observable:
    """``{F, G}`` as an observable whose gradient is taken numerically."""
    return Observable(lambda x, y: poisson_bracket(spec, F, G, DualPoint(x, y)), None, h, f"{{{F.name},{G.name}}}")


def sample_points(spec: AlgebroidSpec, samples: int, seed: int, scale: float = 1.0) -> list[DualPoint]:
    rng = np.random.default_rng(seed)
    return [
        DualPoint(rng.uniform(-scale, scale, spec.base_dim), rng.uniform(-scale, scale, spec.rank))
        for _ in range(samples)
    ]


def jacobi_check(
    spec: AlgebroidSpec, triples: Sequence, samples: int = 20, seed: int = 0, h: float = JACOBI_H
) -> float:
    """Max Jacobiator ``|{{F,G},H} + {{G,H},F} + {{H,F},G}|`` by nested differences."""
    worst = 0.0
    pts = sample_points(spec, samples, seed)
    for F, G, H in triples:
        cyc = [
            (bracket_observable(spec, F, G, h), H),
            (bracket_observable(spec, G, H, h), F),
            (bracket_observable(spec, H, F, h), G),
        ]
        for p in pts:
            total = sum(poisson_bracket(spec, inner, outer, p) for inner, outer in cyc)
            worst = max(worst, abs(total))
    return worst


def coordinate_triples(spec: AlgebroidSpec) -> list[tuple]:
    n, k = spec.base_dim, spec.rank
    coords = [coordinate(i, n, k) for i in range(n + k)]
    return list(itertools.combinations(coords, 3))


def casimir_check(spec: AlgebroidSpec, F: Observable, samples: int = 50, seed: int = 0) -> float:
    """Max over random points of ``max_a |{F, z_a}|``."""
    n, k = spec.base_dim, spec.rank
    worst = 0.0
    for p in sample_points(spec, samples, seed):
        row = F.gradient(p) @ bivector(spec, p)
        worst = max(worst, float(np.max(np.abs(row))) if row.size else 0.0)
    return worst


def kk_bracket(L: StructureConstants, f: Observable, g: Observable, xi) -> float:
    """Lie-Poisson bracket on g*: ``-<xi, [df, dg]>``."""
    xi = L.check_vector(xi, "xi")
    p = DualPoint(np.zeros(0), xi)
    return -lie_core.pairing(xi, lie_core.bracket(L, f.gradient(p), g.gradient(p)))


@dataclass
class ProductBracketReport:
    max_defect: float
    max_product: float
    max_fiber: float


def product_bracket_check(
    L: StructureConstants, xi0, base_dim: int, f: Observable, h: Observable, samples: int = 50, seed: int = 0
) -> ProductBracketReport:
    """Compare ``{F, H}`` on the co-adjoint algebroid dual with ``{f, h}_KK``.

    ``F = (p, f)`` and ``H = (p, h)`` ignore base coordinates.  Falls back to
    the zero-anchor bundle when the orbit of xi0 is a point.
    """
    try:
        spec = coadjoint_algebroid(base_dim, L, xi0)
    except InputError:
        spec = fiberwise_algebroid(L, base_dim)
    worst = prod_max = fib_max = 0.0
    for p in sample_points(spec, samples, seed):
        prod = poisson_bracket(spec, f, h, p)
        fib = kk_bracket(L, f, h, p.y)
        worst = max(worst, abs(prod - fib))
        prod_max = max(prod_max, abs(prod))
        fib_max = max(fib_max, abs(fib))
    return ProductBracketReport(worst, prod_max, fib_max)

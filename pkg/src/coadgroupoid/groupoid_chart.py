"""Groupoids in coordinates: structure maps, axiom checks, tangent maps.

Composition convention: ``multiply(g, h)`` is defined when
``source(g) == target(h)``.  For the trivial groupoid ``M x G x M`` an
element ``(p, a, q)`` has target ``p`` and source ``q``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import ChartDomainError, FiberMismatchError, InputError, SamplerError
from .matrix_group import (
    MatrixRep,
    big_coad,
    coad_generator_matrix,
    exp_matrix,
    random_group_element,
)

TOL_BASE = 1e-9
TOL_XI = 1e-9
DEFAULT_H = 1e-5


def _straight_line(g, v, t):
    return g + t * v


@dataclass(frozen=True)
class GroupoidChart:
    """Numeric groupoid ``G => M`` on coordinate charts.

    ``multiply`` does not check composability; use :meth:`compose` for a
    checked product.  ``display`` maps element coordinates to the
    coordinates used when comparing elements (identity unless the chart
    carries hidden data such as a group witness).  ``retract(g, v, t)`` is
    a curve through ``g`` with velocity ``v`` that stays on the groupoid.
    """

    elem_dim: int
    base_dim: int
    source: Callable
    target: Callable
    unit: Callable
    inverse: Callable
    multiply: Callable
    sample: Callable  # sample(rng, target=None) -> element
    kind: str = "custom"
    tol_base: float = TOL_BASE
    display: Callable = field(default=lambda g: np.asarray(g, dtype=float))
    retract: Callable = field(default=_straight_line)
    sample_tangent: Optional[Callable] = None  # sample_tangent(rng, g) -> tangent
    tangent_basis: Optional[Callable] = None  # columns span T_g G
    rep: Optional[MatrixRep] = None
    xi0: Optional[np.ndarray] = None

    def composable(self, g, h) -> bool:
        d = np.asarray(self.source(g)) - np.asarray(self.target(h))
        return bool(d.size == 0 or np.max(np.abs(d)) <= self.tol_base)

    def compose(self, g, h):
        if not self.composable(g, h):
            raise FiberMismatchError("elements are not composable: source(g) != target(h)")
        return self.multiply(g, h)


# -- trivial groupoid M x G x M -------------------------------------------


def _split(n, m):
    def split(g):
        g = np.asarray(g, dtype=float)
        return g[:n], g[n:n + m * m].reshape(m, m), g[n + m * m:]

    return split


def _join(p, a, q):
    return np.concatenate([np.asarray(p, float).ravel(), np.asarray(a, float).ravel(), np.asarray(q, float).ravel()])


def _group_retract(n, rep):
    split = _split(n, rep.dim)

    def retract(g, v, t):
        p, a, q = split(g)
        dp, da, dq = split(v)
        # velocities from finite differences are tangent only to O(h^2)
        V = rep.matrix(rep.coords(da @ np.linalg.inv(a), residual_tol=1e-4))
        return _join(p + t * dp, exp_matrix(t * V) @ a, q + t * dq)

    return retract


def _witness_triple_maps(base_dim, rep):
    n, m = base_dim, rep.dim
    split = _split(n, m)
    ident = np.eye(m)

    def source(g):
        return split(g)[2].copy()

    def target(g):
        return split(g)[0].copy()

    def unit(p):
        p = np.asarray(p, dtype=float)
        return _join(p, ident, p)

    def inverse(g):
        p, a, q = split(g)
        return _join(q, np.linalg.inv(a), p)

    def multiply(g, h):
        p, a, _ = split(g)
        _, b, r = split(h)
        return _join(p, a @ b, r)

    def sample(rng, target=None):
        p = rng.uniform(-1, 1, n) if target is None else np.asarray(target, dtype=float)
        return _join(p, random_group_element(rep, rng), rng.uniform(-1, 1, n))

    def sample_tangent(rng, g):
        _, a, _ = split(g)
        V = rep.matrix(rng.uniform(-1, 1, rep.rank))
        return _join(rng.uniform(-1, 1, n), V @ a, rng.uniform(-1, 1, n))

    def tangent_basis(g):
        _, a, _ = split(g)
        cols = []
        for i in range(n):
            cols.append(_join(np.eye(n)[i], np.zeros((m, m)), np.zeros(n)))
        for B in rep.basis:
            cols.append(_join(np.zeros(n), B @ a, np.zeros(n)))
        for i in range(n):
            cols.append(_join(np.zeros(n), np.zeros((m, m)), np.eye(n)[i]))
        return np.column_stack(cols)

    return dict(
        source=source, target=target, unit=unit, inverse=inverse, multiply=multiply,
        sample=sample, sample_tangent=sample_tangent, tangent_basis=tangent_basis,
        retract=_group_retract(n, rep),
    )


def make_trivial_groupoid(base_dim: int, rep: MatrixRep) -> GroupoidChart:
    """The pair-groupoid-times-group ``M x G x M`` with ``M`` an open box."""
    if base_dim < 0:
        raise InputError("base_dim must be >= 0")
    maps = _witness_triple_maps(base_dim, rep)
    return GroupoidChart(
        elem_dim=2 * base_dim + rep.dim ** 2, base_dim=base_dim, kind="trivial", rep=rep, **maps
    )


def make_coadjoint_groupoid(base_dim: int, rep: MatrixRep, xi0) -> GroupoidChart:
    """Co-adjoint groupoid ``M x O(xi0)`` of the trivial groupoid.

    Elements carry a group witness ``a`` and display as ``(p, Ad*_a xi0, q)``.
    Products multiply witnesses.
    """
    xi0 = rep.algebra.check_vector(xi0, "xi0").copy()
    xi0.setflags(write=False)
    maps = _witness_triple_maps(base_dim, rep)
    split = _split(base_dim, rep.dim)

    def display(g):
        p, a, q = split(g)
        return np.concatenate([p, big_coad(rep, a, xi0), q])

    return GroupoidChart(
        elem_dim=2 * base_dim + rep.dim ** 2, base_dim=base_dim, kind="coadjoint",
        display=display, rep=rep, xi0=xi0, **maps,
    )


def coadjoint_value(G: GroupoidChart, g) -> np.ndarray:
    """The orbit point ``Ad*_witness xi0`` of a co-adjoint chart element."""
    if G.kind != "coadjoint":
        raise InputError("coadjoint_value needs a co-adjoint chart")
    _, a, _ = _split(G.base_dim, G.rep.dim)(g)
    return big_coad(G.rep, a, G.xi0)


def element_parts(G: GroupoidChart, g):
    """Split witness-triple coordinates into ``(p, a, q)``."""
    if G.rep is None or G.kind not in ("trivial", "coadjoint"):
        raise InputError("element_parts needs a trivial or co-adjoint chart")
    return _split(G.base_dim, G.rep.dim)(g)


# -- axioms -----------------------------------------------------------------


@dataclass
class AxiomReport:
    residuals: dict
    samples: int
    seed: int

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol

    def to_records(self) -> list[dict]:
        return [
            {"axiom": name, "max_residual": r, "samples": self.samples, "seed": self.seed}
            for name, r in self.residuals.items()
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2)


def _dist(x, y) -> float:
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.max(np.abs(d))) if d.size else 0.0


def sample_composable(G: GroupoidChart, rng, length: int = 2) -> list:
    """A chain ``g_1, ..., g_length`` with each consecutive pair composable."""
    chain = [G.sample(rng)]
    for _ in range(length - 1):
        nxt = G.sample(rng, target=G.source(chain[-1]))
        if not G.composable(chain[-1], nxt):
            raise SamplerError("chart sampler did not produce a composable pair")
        chain.append(nxt)
    return chain


def axioms_check(G: GroupoidChart, samples: int = 200, seed: int = 0) -> AxiomReport:
    """Max residual of each groupoid axiom over seeded random samples."""
    rng = np.random.default_rng(seed)
    res = {
        "source_of_product": 0.0,
        "target_of_product": 0.0,
        "associativity": 0.0,
        "left_unit": 0.0,
        "right_unit": 0.0,
        "left_inverse": 0.0,
        "right_inverse": 0.0,
        "unit_source_target": 0.0,
        "inverse_source_target": 0.0,
    }
    D, m = G.display, G.multiply

    def bump(name, r):
        res[name] = max(res[name], r)

    for _ in range(samples):
        g, h, k = sample_composable(G, rng, 3)
        gh = m(g, h)
        bump("source_of_product", _dist(G.source(gh), G.source(h)))
        bump("target_of_product", _dist(G.target(gh), G.target(g)))
        bump("associativity", _dist(D(m(gh, k)), D(m(g, m(h, k)))))
        bump("left_unit", _dist(D(m(G.unit(G.target(g)), g)), D(g)))
        bump("right_unit", _dist(D(m(g, G.unit(G.source(g)))), D(g)))
        gi = G.inverse(g)
        bump("left_inverse", _dist(D(m(gi, g)), D(G.unit(G.source(g)))))
        bump("right_inverse", _dist(D(m(g, gi)), D(G.unit(G.target(g)))))
        bump("inverse_source_target", max(_dist(G.source(gi), G.target(g)), _dist(G.target(gi), G.source(g))))
        p = G.target(g)
        u = G.unit(p)
        bump("unit_source_target", max(_dist(G.source(u), p), _dist(G.target(u), p)))
    return AxiomReport(res, samples, seed)


def isotropy_sample(G: GroupoidChart, p, n: int, seed: int = 0) -> list[np.ndarray]:
    """Elements with source = target = p."""
    if G.kind not in ("trivial", "coadjoint"):
        raise InputError(f"isotropy sampling is not supported for chart kind {G.kind!r}")
    p = np.asarray(p, dtype=float)
    if p.shape != (G.base_dim,):
        raise InputError(f"base point must have length {G.base_dim}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g = _join(p, random_group_element(G.rep, rng), p)
        assert _dist(G.source(g), p) <= 1e-12 and _dist(G.target(g), p) <= 1e-12
        out.append(g)
    return out


# -- tangent maps ---------------------------------------------------------


def tangent_map(f: Callable, at, v, h: float = DEFAULT_H, domain: Optional[Callable] = None) -> np.ndarray:
    """Central difference ``(f(at + h v) - f(at - h v)) / 2h``."""
    if h <= 0:
        raise InputError("step h must be positive")
    at = np.asarray(at, dtype=float)
    v = np.asarray(v, dtype=float)
    plus, minus = at + h * v, at - h * v
    if domain is not None and not (domain(plus) and domain(minus)):
        raise ChartDomainError("finite-difference stencil leaves the chart domain")
    fp = np.asarray(f(plus), dtype=float)
    fm = np.asarray(f(minus), dtype=float)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise ChartDomainError("chart map is not finite on the difference stencil")
    return (fp - fm) / (2.0 * h)


def curve_derivative(curve: Callable, h: float = DEFAULT_H) -> np.ndarray:
    """Central-difference velocity of ``t -> curve(t)`` at t = 0."""
    return tangent_map(lambda t: curve(float(t[0])), np.zeros(1), np.ones(1), h)


def tm_coadjoint_check(
    rep: MatrixRep, xi0, samples: int = 50, seed: int = 0, h: float = DEFAULT_H, base_dim: int = 2
) -> float:
    """Max defect of ``Tm'(eta1, eta2) = ad*_{Tm(X, Y)} xi`` on random data.

    Left side: differentiate the displayed product of witness curves with
    velocities X, Y.  Right side: differentiate ``Tm(X, Y)`` first, then push
    it to the orbit along a fresh group curve through ``m(g, h)``.
    """
    G = make_coadjoint_groupoid(base_dim, rep, xi0)
    split = _split(base_dim, rep.dim)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        g, k = sample_composable(G, rng, 2)
        X = G.sample_tangent(rng, g)
        Y = G.sample_tangent(rng, k)
        # match Talpha(X) = Tbeta(Y)
        _, Ya, Yq = split(Y)
        Y = _join(split(X)[2], Ya, Yq)
        lhs = curve_derivative(
            lambda t: G.display(G.multiply(G.retract(g, X, t), G.retract(k, Y, t))), h
        )
        gk = G.multiply(g, k)
        W = curve_derivative(lambda t: G.multiply(G.retract(g, X, t), G.retract(k, Y, t)), h)
        rhs = curve_derivative(lambda t: G.display(G.retract(gk, W, t)), h)
        worst = max(worst, _dist(lhs, rhs))
    return worst


def witness_independence_spread(G: GroupoidChart, samples: int = 50, seed: int = 0) -> float:
    """Spread of displayed products when a witness is changed within its class.

    Replaces the witness ``a`` of ``g`` by ``a s`` with ``s`` in the
    stabilizer of ``xi0`` (same displayed value) and compares the displayed
    products with a random composable ``h``.  Zero when the stabilizer is
    normal.
    """
    if G.kind != "coadjoint":
        raise InputError("witness independence applies to co-adjoint charts")
    L = G.rep.algebra
    gens = coad_generator_matrix(L, G.xi0)
    kernel = scipy.linalg.null_space(gens, rcond=1e-10)
    split = _split(G.base_dim, G.rep.dim)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        g, k = sample_composable(G, rng, 2)
        if kernel.shape[1] == 0:
            continue
        Z = kernel @ rng.uniform(-1, 1, kernel.shape[1])
        s = exp_matrix(G.rep.matrix(Z))
        p, a, q = split(g)
        g2 = _join(p, a @ s, q)
        worst = max(worst, _dist(G.display(G.multiply(g, k)), G.display(G.multiply(g2, k))))
    return worst


# -- translations on the co-adjoint groupoid ------------------------------


def translations(G: GroupoidChart, gprime, tol: float = 1e-10):
    """Left and right translation by ``gprime`` on a co-adjoint chart.

    ``left(h)`` is defined on the target fiber over ``source(gprime)`` and
    returns ``gprime * h``; ``right(h)`` is defined on the source fiber over
    ``target(gprime)`` and returns ``h * gprime``.
    """
    if G.kind != "coadjoint":
        raise InputError("translations are defined here for co-adjoint charts")
    gprime = np.asarray(gprime, dtype=float)
    p_src, q_tgt = G.source(gprime), G.target(gprime)

    def left(hprime):
        if _dist(G.target(hprime), p_src) > G.tol_base:
            raise FiberMismatchError("left translation: element not in the target fiber over source(g')")
        out = G.multiply(gprime, hprime)
        if _dist(G.target(out), q_tgt) > tol:
            raise FiberMismatchError("left translation left the target fiber over target(g')")
        return out

    def right(hprime):
        if _dist(G.source(hprime), q_tgt) > G.tol_base:
            raise FiberMismatchError("right translation: element not in the source fiber over target(g')")
        out = G.multiply(hprime, gprime)
        if _dist(G.source(out), p_src) > tol:
            raise FiberMismatchError("right translation left the source fiber over source(g')")
        return out

    return left, right


def witness_element(G: GroupoidChart, p, a, q) -> np.ndarray:
    """Build element coordinates from a base pair and a group matrix."""
    if G.rep is None:
        raise InputError("chart has no matrix representation")
    return _join(p, a, q)

"""Orbit symplectic forms, the cotangent groupoid and multiplicativity checks."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import lie_core
from .errors import InputError
from .groupoid_chart import (
    DEFAULT_H,
    GroupoidChart,
    curve_derivative,
    element_parts,
    make_coadjoint_groupoid,
    sample_composable,
)
from .lie_core import StructureConstants
from .matrix_group import (
    RANK_RTOL,
    MatrixRep,
    big_coad,
    coad_generator_matrix,
    numerical_rank,
    random_group_element,
)

MATCH_TOL = 1e-8
# tangents produced by finite differences are only tangent to O(h^2)
_PROJECTION_RESIDUAL = 1e-4


@dataclass(frozen=True)
class TwoFormField:
    """``eval(point, u, v)``: a two-form on a chart, evaluated on tangents."""

    eval: Callable
    name: str = ""

    def __call__(self, point, u, v) -> float:
        return float(self.eval(point, u, v))

    def plus(self, other: "TwoFormField", name: str = "") -> "TwoFormField":
        return TwoFormField(lambda p, u, v: self(p, u, v) + other(p, u, v), name or f"{self.name}+{other.name}")


def form_audit(G: GroupoidChart, omega: TwoFormField, samples: int = 20, seed: int = 0) -> dict:
    """Antisymmetry and bilinearity defects of ``omega`` on random tangents."""
    if G.sample_tangent is None:
        raise InputError("chart has no tangent sampler")
    rng = np.random.default_rng(seed)
    anti = lin = 0.0
    for _ in range(samples):
        g = G.sample(rng)
        u, v, w = (G.sample_tangent(rng, g) for _ in range(3))
        a, b = rng.uniform(-2, 2, 2)
        anti = max(anti, abs(omega(g, u, v) + omega(g, v, u)))
        lin = max(lin, abs(omega(g, a * u + b * w, v) - a * omega(g, u, v) - b * omega(g, w, v)))
    return {"antisymmetry": anti, "bilinearity": lin}


# -- KKS form on orbits ---------------------------------------------------


def kks_form(L: StructureConstants, xi, X, Y) -> float:
    """``<xi, [X, Y]>``: the orbit form on ``ad*_X xi, ad*_Y xi``."""
    xi = L.check_vector(xi, "xi")
    return lie_core.pairing(xi, lie_core.bracket(L, X, Y))


def kks_gram(L: StructureConstants, xi) -> np.ndarray:
    xi = L.check_vector(xi, "xi")
    return np.einsum("abg,g->ab", L.c, xi)


@dataclass(frozen=True)
class NondegeneracyResult:
    ok: bool
    rank: int
    orbit_dim: int


def orbit_nondegeneracy(L: StructureConstants, xi, tol: float = RANK_RTOL) -> NondegeneracyResult:
    """Gram rank of the orbit form versus the orbit dimension."""
    r = numerical_rank(kks_gram(L, xi), tol)
    d = numerical_rank(coad_generator_matrix(L, xi), tol)
    return NondegeneracyResult(r == d, r, d)


# -- pullback to orbit tangents ---------------------------------------------


@dataclass(frozen=True)
class OrbitTangent:
    """The tangent ``ad*_X xi`` at orbit point xi, with its representative X.

    ``witness`` is a group element carrying xi0 to xi; the group form is
    evaluated there.
    """

    xi: np.ndarray
    X: Optional[np.ndarray]
    witness: Optional[np.ndarray] = None


@dataclass(frozen=True)
class PullbackForm:
    """``omega'(ad*_X xi, ad*_Y xi) := omega(X, Y)`` using carried representatives.

    ``omega.eval(witness, X, Y)`` takes algebra vectors (right-trivialized
    group tangents).
    """

    omega: TwoFormField
    rep: MatrixRep
    xi0: np.ndarray

    def _point(self, t: OrbitTangent):
        return self.rep.identity if t.witness is None else t.witness

    def __call__(self, t1: OrbitTangent, t2: OrbitTangent) -> float:
        if t1.X is None or t2.X is None:
            raise InputError("orbit tangent is missing its representative")
        return self.omega(self._point(t1), t1.X, t2.X)

    def audit(self, t1: OrbitTangent, t2: OrbitTangent, samples: int = 20, seed: int = 0) -> float:
        """Max change of the value when representatives move by stabilizer elements."""
        L = self.rep.algebra
        base = self(t1, t2)
        kernel = scipy.linalg.null_space(coad_generator_matrix(L, t1.xi), rcond=RANK_RTOL)
        if kernel.shape[1] == 0:
            return 0.0
        rng = np.random.default_rng(seed)
        spread = 0.0
        for _ in range(samples):
            Z1 = kernel @ rng.uniform(-1, 1, kernel.shape[1])
            Z2 = kernel @ rng.uniform(-1, 1, kernel.shape[1])
            moved = self(OrbitTangent(t1.xi, t1.X + Z1, t1.witness), OrbitTangent(t2.xi, t2.X + Z2, t2.witness))
            spread = max(spread, abs(moved - base))
        return spread


def pullback_form(omega: TwoFormField, rep: MatrixRep, xi0) -> PullbackForm:
    xi0 = rep.algebra.check_vector(xi0, "xi0").copy()
    return PullbackForm(omega, rep, xi0)


# -- cotangent groupoid ---------------------------------------------------


def _cot_split(m, k):
    def split(z):
        z = np.asarray(z, dtype=float)
        return z[: m * m].reshape(m, m), z[m * m: m * m + k]

    return split


def _cot_join(g, mu):
    return np.concatenate([np.asarray(g, float).ravel(), np.asarray(mu, float).ravel()])


def right_trivialize(rep: MatrixRep, g, dg) -> np.ndarray:
    """Algebra coordinates of ``dg g^-1``."""
    return rep.coords(np.asarray(dg, float) @ np.linalg.inv(g), residual_tol=_PROJECTION_RESIDUAL)


def cotangent_groupoid(rep: MatrixRep, bracket_sign: float = -1.0) -> tuple[GroupoidChart, TwoFormField]:
    """``G x g* => g*`` in right trivialization, with its canonical two-form.

    Element ``(g, mu)`` has target ``mu`` and source ``Ad*_{g^-1} mu``;
    ``(g, mu)(h, nu) = (gh, mu)``.  With ``r(dg) = dg g^-1`` the form is::

        <dmu', r(dg)> - <dmu, r(dg')> + bracket_sign * <mu, [r(dg), r(dg')]>

    ``bracket_sign = -1`` is the exterior derivative of the Liouville form
    and is the multiplicative choice.

    Curves are straight lines in the matrix chart: multiplication is
    bilinear, so central differences of ``Tm`` are exact and the O(h^2)
    error comes from the source map alone.
    """
    L = rep.algebra
    m, k = rep.dim, rep.rank
    split = _cot_split(m, k)

    def source(z):
        g, mu = split(z)
        return big_coad(rep, np.linalg.inv(g), mu, residual_tol=_PROJECTION_RESIDUAL)

    def target(z):
        return split(z)[1].copy()

    def unit(mu):
        return _cot_join(rep.identity, mu)

    def inverse(z):
        g, mu = split(z)
        return _cot_join(np.linalg.inv(g), source(z))

    def multiply(z, w):
        g, mu = split(z)
        h, _ = split(w)
        return _cot_join(g @ h, mu)

    def sample(rng, target=None):
        mu = rng.uniform(-1, 1, k) if target is None else np.asarray(target, dtype=float)
        return _cot_join(random_group_element(rep, rng), mu)

    def sample_tangent(rng, z):
        g, _ = split(z)
        return _cot_join(rep.matrix(rng.uniform(-1, 1, k)) @ g, rng.uniform(-1, 1, k))

    def tangent_basis(z):
        g, _ = split(z)
        cols = [_cot_join(B @ g, np.zeros(k)) for B in rep.basis]
        cols += [_cot_join(np.zeros((m, m)), e) for e in np.eye(k)]
        return np.column_stack(cols)

    G = GroupoidChart(
        elem_dim=m * m + k, base_dim=k, source=source, target=target, unit=unit, inverse=inverse,
        multiply=multiply, sample=sample, kind="cotangent",
        sample_tangent=sample_tangent, tangent_basis=tangent_basis, rep=rep,
    )

    def omega(z, u, v):
        g, mu = split(z)
        dg1, dmu1 = split(u)
        dg2, dmu2 = split(v)
        r1, r2 = right_trivialize(rep, g, dg1), right_trivialize(rep, g, dg2)
        return dmu2 @ r1 - dmu1 @ r2 + bracket_sign * lie_core.pairing(mu, lie_core.bracket(L, r1, r2))

    return G, TwoFormField(omega, "canonical")


def fiber_area_perturbation(rep: MatrixRep, weight: float = 1.0) -> TwoFormField:
    """``weight * dmu_0 ^ dmu_1`` on the cotangent chart; not multiplicative."""
    m, k = rep.dim, rep.rank
    if k < 2:
        raise InputError("need rank >= 2 for a fiber area form")
    split = _cot_split(m, k)

    def ev(z, u, v):
        a, b = split(u)[1], split(v)[1]
        return weight * (a[0] * b[1] - a[1] * b[0])

    return TwoFormField(ev, "dmu0^dmu1")


# -- multiplicativity -----------------------------------------------------


def _push(G: GroupoidChart, f: Callable, g, v, h: float) -> np.ndarray:
    return curve_derivative(lambda t: f(G.retract(g, v, t)), h)


def match_tangent(G: GroupoidChart, g, v, k, w, h: float = DEFAULT_H):
    """Least-squares correct w at k so that ``Tsource(v) = Ttarget(w)``.

    Returns the corrected w and the remaining mismatch.
    """
    want = _push(G, G.source, g, v, h)
    have = _push(G, G.target, k, w, h)
    B = G.tangent_basis(k)
    J = np.column_stack([_push(G, G.target, k, B[:, j], h) for j in range(B.shape[1])])
    c, *_ = np.linalg.lstsq(J, want - have, rcond=None)
    w = w + B @ c
    mismatch = float(np.max(np.abs(_push(G, G.target, k, w, h) - want))) if want.size else 0.0
    return w, mismatch


@dataclass
class DefectReport:
    check: str
    max_defect: float
    h: float
    samples: int
    seed: int
    audit_spread: Optional[float] = None
    max_mismatch: float = 0.0

    def to_json_dict(self) -> dict:
        d = {"check": self.check, "max_defect": self.max_defect, "h": self.h, "samples": self.samples, "seed": self.seed}
        if self.audit_spread is not None:
            d["audit_spread"] = self.audit_spread
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def multiplicativity_check(
    G: GroupoidChart, omega: TwoFormField, samples: int = 50, seed: int = 0, h: float = DEFAULT_H
) -> DefectReport:
    """Max of ``|omega_gk(Tm(v1,w1), Tm(v2,w2)) - omega_g(v1,v2) - omega_k(w1,w2)|``."""
    if G.sample_tangent is None or G.tangent_basis is None:
        raise InputError("chart needs tangent sampling and a tangent basis")
    rng = np.random.default_rng(seed)
    worst = mism = 0.0
    for _ in range(samples):
        g, k = sample_composable(G, rng, 2)
        pairs = []
        for _ in range(2):
            v = G.sample_tangent(rng, g)
            w, miss = match_tangent(G, g, v, k, G.sample_tangent(rng, k), h)
            if miss > MATCH_TOL:
                raise InputError(f"tangent matching failed (mismatch {miss:.3g})")
            mism = max(mism, miss)
            pairs.append((v, w))
        gk = G.multiply(g, k)
        tm = [
            curve_derivative(lambda t, v=v, w=w: G.multiply(G.retract(g, v, t), G.retract(k, w, t)), h)
            for v, w in pairs
        ]
        (v1, w1), (v2, w2) = pairs
        d = omega(gk, tm[0], tm[1]) - omega(g, v1, v2) - omega(k, w1, w2)
        worst = max(worst, abs(d))
    return DefectReport("multiplicativity", worst, h, samples, seed, max_mismatch=mism)


def coadjoint_multiplicativity_audit(
    rep: MatrixRep, xi0, samples: int = 30, seed: int = 0, h: float = DEFAULT_H, base_dim: int = 1
) -> DefectReport:
    """Multiplicativity of the pulled-back form on the co-adjoint groupoid.

    The group form is the cotangent form restricted along ``a -> (a, xi0)``,
    that is ``omega(X, Y) = -<xi0, [X, Y]>`` on right-trivialized tangents.
    Reports its multiplicativity defect on the co-adjoint chart of the
    trivial groupoid, and the representative audit spread at the displayed
    orbit points.
    """
    L = rep.algebra
    xi0 = L.check_vector(xi0, "xi0").copy()
    _, cot_omega = cotangent_groupoid(rep)
    zero_mu = np.zeros(rep.rank)

    def group_form(a, X, Y):
        u = _cot_join(rep.matrix(X) @ a, zero_mu)
        v = _cot_join(rep.matrix(Y) @ a, zero_mu)
        return cot_omega(_cot_join(a, xi0), u, v)

    omega_group = TwoFormField(group_form, "cotangent|xi0")
    pb = pullback_form(omega_group, rep, xi0)
    G = make_coadjoint_groupoid(base_dim, rep, xi0)

    def chart_form(g, u, v):
        _, a, _ = element_parts(G, g)
        _, da, _ = element_parts(G, u)
        _, db, _ = element_parts(G, v)
        return pb(
            OrbitTangent(big_coad(rep, a, xi0), right_trivialize(rep, a, da), a),
            OrbitTangent(big_coad(rep, a, xi0), right_trivialize(rep, a, db), a),
        )

    report = multiplicativity_check(G, TwoFormField(chart_form, "pullback"), samples, seed, h)
    rng = np.random.default_rng(seed + 1)
    spread = 0.0
    for _ in range(samples):
        a = random_group_element(rep, rng)
        xi = big_coad(rep, a, xi0)
        t1 = OrbitTangent(xi, rng.uniform(-1, 1, rep.rank), a)
        t2 = OrbitTangent(xi, rng.uniform(-1, 1, rep.rank), a)
        spread = max(spread, pb.audit(t1, t2, samples=5, seed=int(rng.integers(1 << 31))))
    report.check = "coadjoint_multiplicativity"
    report.audit_spread = spread
    return report

"""Lie algebroids on a chart: anchor, structure functions, section brackets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import lie_core
from .errors import CertificationRefused, DegenerateInputError, InputError
from .groupoid_chart import DEFAULT_H, curve_derivative, element_parts, make_trivial_groupoid
from .lie_core import StructureConstants
from .matrix_group import MatrixRep, big_coad, coad_generator_matrix, exp_matrix, numerical_rank


@dataclass(frozen=True)
class AlgebroidSpec:
    """Anchor ``rho[a, i]`` (rank x base_dim) and structure functions on a chart.

    ``anchor(x)`` and ``structure(x)`` may depend on the base point; the
    built-in constructors produce constant ones and set ``constant=True``.
    """

    base_dim: int
    rank: int
    anchor: Callable[[np.ndarray], np.ndarray]
    structure: Callable[[np.ndarray], StructureConstants]
    kind: str = "custom"
    constant: bool = False
    algebra: Optional[StructureConstants] = None
    xi0: Optional[np.ndarray] = None
    generators: Optional[np.ndarray] = field(default=None, repr=False)
    generator_rank: Optional[int] = None

    def anchor_at(self, x) -> np.ndarray:
        rho = np.asarray(self.anchor(np.asarray(x, dtype=float)), dtype=float)
        if rho.shape != (self.rank, self.base_dim):
            raise InputError(f"anchor must be {self.rank}x{self.base_dim}, got {rho.shape}")
        return rho

    def c_at(self, x) -> np.ndarray:
        return self.structure(np.asarray(x, dtype=float)).c

    def to_json_dict(self) -> dict:
        if not self.constant:
            raise InputError("only constant-structure algebroids serialize to JSON")
        x0 = np.zeros(self.base_dim)
        c = StructureConstants(self.c_at(x0), validate=False).to_json_dict()["entries"]
        return {"n": self.base_dim, "k": self.rank, "anchor": self.anchor_at(x0).tolist(), "c": c}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def constant_algebroid(anchor, c, kind: str = "custom", **extra) -> AlgebroidSpec:
    anchor = np.array(anchor, dtype=float)
    L = c if isinstance(c, StructureConstants) else StructureConstants(c)
    k = L.rank
    if anchor.ndim != 2 or anchor.shape[0] != k:
        raise InputError(f"anchor must have {k} rows, got shape {anchor.shape}")
    anchor.setflags(write=False)
    return AlgebroidSpec(
        base_dim=anchor.shape[1], rank=k, anchor=lambda x: anchor, structure=lambda x: L,
        kind=kind, constant=True, **extra,
    )


def algebroid_from_json(data) -> AlgebroidSpec:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        n, k = int(data["n"]), int(data["k"])
        anchor = np.array(data["anchor"], dtype=float).reshape(k, n)
        L = StructureConstants.from_json_dict({"rank": k, "entries": data["c"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad algebroid JSON: {exc}") from None
    return constant_algebroid(anchor, L)


def fiberwise_algebroid(L: StructureConstants, base_dim: int = 0) -> AlgebroidSpec:
    """Bundle of Lie algebras ``M x g`` with zero anchor (Lie-Poisson on g*)."""
    return constant_algebroid(np.zeros((L.rank, base_dim)), L, kind="custom", algebra=L)


def trivial_algebroid(base_dim: int, L: StructureConstants) -> AlgebroidSpec:
    """``TM (+) (M x g)``: coordinate fields first, then the algebra basis."""
    n, k = base_dim, L.rank
    anchor = np.zeros((n + k, n))
    anchor[:n, :n] = np.eye(n)
    c = np.zeros((n + k, n + k, n + k))
    c[n:, n:, n:] = L.c
    return constant_algebroid(anchor, c, kind="trivial", algebra=L)


def coadjoint_algebroid(base_dim: int, L: StructureConstants, xi0) -> AlgebroidSpec:
    """Co-adjoint algebroid with generators ``e'_a = ad*_{e_a} xi0``.

    Keeps all k generators even when they are dependent; ``generator_rank``
    is the dimension of their span.  Anchor is zero.
    """
    xi0 = L.check_vector(xi0, "xi0").copy()
    gens = coad_generator_matrix(L, xi0)
    r = numerical_rank(gens)
    if r == 0:
        raise DegenerateInputError("all co-adjoint generators vanish (orbit is a point)")
    xi0.setflags(write=False)
    gens.setflags(write=False)
    return constant_algebroid(
        np.zeros((L.rank, base_dim)), L, kind="coadjoint",
        algebra=L, xi0=xi0, generators=gens, generator_rank=r,
    )


# -- sections -------------------------------------------------------------


def directional_derivative(f: Callable, x, v, h: float = DEFAULT_H) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.asarray(f(x + h * v), float) - np.asarray(f(x - h * v), float)) / (2.0 * h)


def anchor_image(spec: AlgebroidSpec, X: Callable, x) -> np.ndarray:
    """The vector field ``rho(X)`` evaluated at x."""
    return np.asarray(X(x), dtype=float) @ spec.anchor_at(x)


def section_bracket(spec: AlgebroidSpec, X: Callable, Y: Callable, x, h: float = DEFAULT_H) -> np.ndarray:
    """Coefficients of ``[X, Y](x)``; sections map base points to coefficient vectors."""
    x = np.asarray(x, dtype=float)
    Xv, Yv = np.asarray(X(x), float), np.asarray(Y(x), float)
    out = np.einsum("abg,a,b->g", spec.c_at(x), Xv, Yv)
    if spec.base_dim:
        out = out + directional_derivative(Y, x, anchor_image(spec, X, x), h)
        out = out - directional_derivative(X, x, anchor_image(spec, Y, x), h)
    return out


def _sample_base(spec, rng):
    return rng.uniform(-1, 1, spec.base_dim)


def leibniz_check(
    spec: AlgebroidSpec, X: Callable, Y: Callable, f: Callable, samples: int = 50, seed: int = 0,
    h: float = DEFAULT_H,
) -> float:
    """Max of ``|[X, fY] - f[X, Y] - rho(X)(f) Y|`` over random base points."""
    rng = np.random.default_rng(seed)
    fY = lambda x: f(x) * np.asarray(Y(x), float)  # noqa: E731
    worst = 0.0
    for _ in range(samples):
        x = _sample_base(spec, rng)
        lhs = section_bracket(spec, X, fY, x, h)
        df = float(directional_derivative(f, x, anchor_image(spec, X, x), h)) if spec.base_dim else 0.0
        rhs = f(x) * section_bracket(spec, X, Y, x, h) + df * np.asarray(Y(x), float)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def vector_field_bracket(U: Callable, V: Callable, x, h: float = DEFAULT_H) -> np.ndarray:
    """Lie bracket of vector fields on the chart, ``DV.U - DU.V``."""
    x = np.asarray(x, dtype=float)
    return directional_derivative(V, x, U(x), h) - directional_derivative(U, x, V(x), h)


def anchor_compatibility_check(
    spec: AlgebroidSpec, X: Callable, Y: Callable, samples: int = 30, seed: int = 0, h: float = DEFAULT_H
) -> float:
    """Max of ``|rho[X, Y] - [rho X, rho Y]|`` over random base points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = _sample_base(spec, rng)
        lhs = section_bracket(spec, X, Y, x, h) @ spec.anchor_at(x)
        rhs = vector_field_bracket(lambda z: anchor_image(spec, X, z), lambda z: anchor_image(spec, Y, z), x, h)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# -- co-adjoint structure ---------------------------------------------------


def structure_identity_defect(L: StructureConstants, xi0) -> float:
    """Max over a, b of ``|ad*_{[e_a, e_b]} xi0 - C^g_ab ad*_{e_g} xi0|``.

    Holds for every xi0 by linearity of X -> ad*_X xi0.
    """
    gens = coad_generator_matrix(L, xi0)
    worst = 0.0
    for a in range(L.rank):
        for b in range(L.rank):
            direct = lie_core.coad(L, lie_core.bracket(L, L.basis(a), L.basis(b)), xi0)
            contracted = gens @ L.c[a, b]
            worst = max(worst, float(np.max(np.abs(direct - contracted))))
    return worst


def structure_equality_check(L: StructureConstants, xi0) -> float:
    """Certify equal structure constants for the co-adjoint algebroid.

    Only certifies when the generators form a basis (orbit dimension = k);
    otherwise raises :class:`CertificationRefused` carrying the rank.
    """
    spec_gens = coad_generator_matrix(L, xi0)
    r = numerical_rank(spec_gens)
    if r < L.rank:
        raise CertificationRefused(
            f"generators span dimension {r} < {L.rank}; they are not a basis of sections", rank=r
        )
    return structure_identity_defect(L, xi0)


def invariant_field_check(
    rep: MatrixRep, xi0, X, samples: int = 30, seed: int = 0, h: float = DEFAULT_H, base_dim: int = 1
) -> float:
    """Compare the pushforward of a right-invariant field with ``ad*``.

    At random ``g = (p, a, q)`` the right-invariant field of the algebra
    element X is ``(0, X a, 0)``; its image under ``g -> Ad*_a xi0`` is
    differenced numerically and compared with ``ad*_X`` applied at the
    image point.
    """
    L = rep.algebra
    X = L.check_vector(X, "X")
    G = make_trivial_groupoid(base_dim, rep)
    rng = np.random.default_rng(seed)
    V = rep.matrix(X)
    worst = 0.0
    for _ in range(samples):
        g = G.sample(rng)
        _, a, _ = element_parts(G, g)
        pushed = curve_derivative(lambda t: big_coad(rep, exp_matrix(t * V) @ a, xi0), h)
        direct = lie_core.coad(L, X, big_coad(rep, a, xi0))
        worst = max(worst, float(np.max(np.abs(pushed - direct))))
    return worst


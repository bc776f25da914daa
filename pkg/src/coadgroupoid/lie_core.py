"""Finite-dimensional Lie algebras given by structure constants.

Convention used throughout the package: ``c[a, b, g]`` is the coefficient of
``e_g`` in ``[e_a, e_b]``.  Algebra elements and dual vectors are plain
1-d numpy arrays of length ``rank``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InputError, StructureError

JACOBI_TOL = 1e-12


def _jacobi_residual(c: np.ndarray) -> np.ndarray:
    # r[a,b,g,n] = sum_m c[a,b,m] c[m,g,n] + cyclic(a,b,g)
    t = np.einsum("abm,mgn->abgn", c, c)
    return t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)


@dataclass(frozen=True)
class StructureConstants:
    """Dense structure constants of a Lie algebra of dimension ``rank``.

    Construction validates antisymmetry and the Jacobi identity.  Pass
    ``antisymmetrize=True`` to repair a slightly asymmetric array, or
    ``validate=False`` to accept arbitrary input (useful for negative tests).
    """

    c: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)
    antisymmetrize: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise InputError(f"structure constants must have shape (k, k, k), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("structure constants contain non-finite entries")
        if self.antisymmetrize:
            c = 0.5 * (c - c.transpose(1, 0, 2))
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.validate:
            asym = float(np.max(np.abs(c + c.transpose(1, 0, 2))))
            if asym > 0.0:
                raise StructureError(f"structure constants are not antisymmetric (max defect {asym:.3g})")
            defect = jacobi_defect(self)
            scale = max(1.0, float(np.max(np.abs(c))) ** 2)
            if defect > JACOBI_TOL * scale:
                raise StructureError(f"Jacobi identity fails (defect {defect:.3g})")

    @property
    def rank(self) -> int:
        return self.c.shape[0]

    def basis(self, a: int) -> np.ndarray:
        e = np.zeros(self.rank)
        e[a] = 1.0
        return e

    def check_vector(self, v, what="vector") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.rank,):
            raise InputError(f"{what} must have length {self.rank}, got shape {v.shape}")
        return v

    # JSON: only entries with a < b are listed, sorted lexicographically.
    def to_json_dict(self) -> dict:
        k = self.rank
        entries = []
        for a in range(k):
            for b in range(a + 1, k):
                for g in range(k):
                    v = float(self.c[a, b, g])
                    if v != 0.0:
                        entries.append([a, b, g, v])
        return {"rank": k, "entries": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict, **kwargs) -> "StructureConstants":
        try:
            k = int(data["rank"])
            entries = data["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad structure-constant JSON: {exc}") from None
        if k < 1:
            raise InputError("rank must be positive")
        c = np.zeros((k, k, k))
        for entry in entries:
            if len(entry) != 4:
                raise InputError(f"entry must be [a, b, g, value], got {entry!r}")
            a, b, g, v = int(entry[0]), int(entry[1]), int(entry[2]), float(entry[3])
            if not (0 <= a < b < k and 0 <= g < k):
                raise InputError(f"entry indices out of range or not a < b: {entry!r}")
            c[a, b, g] = v
            c[b, a, g] = -v
        return cls(c, **kwargs)

    @classmethod
    def from_json(cls, text: str, **kwargs) -> "StructureConstants":
        return cls.from_json_dict(json.loads(text), **kwargs)


def bracket(L: StructureConstants, X, Y) -> np.ndarray:
    X = L.check_vector(X, "X")
    Y = L.check_vector(Y, "Y")
    return np.einsum("abg,a,b->g", L.c, X, Y)


def ad_operator(L: StructureConstants, X) -> np.ndarray:
    """Matrix ``M`` with ``M @ Y == bracket(L, X, Y)``."""
    X = L.check_vector(X, "X")
    return np.einsum("abg,a->gb", L.c, X)


def coad_operator(L: StructureConstants, X) -> np.ndarray:
    """Matrix of ``ad*_X`` on dual vectors: ``<ad*_X xi, Y> = <xi, [Y, X]>``."""
    return -ad_operator(L, X).T


def coad(L: StructureConstants, X, xi) -> np.ndarray:
    return coad_operator(L, X) @ L.check_vector(xi, "xi")


def jacobi_defect(L: StructureConstants) -> float:
    return float(np.max(np.abs(_jacobi_residual(L.c))))


def random_element(L: StructureConstants, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=L.rank)


def coad_homomorphism_defect(L: StructureConstants, samples: int = 100, seed: int = 0) -> float:
    """Max of ``|coad([X,Y]) - [coad X, coad Y]|`` over random pairs."""
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        X = random_element(L, rng)
        Y = random_element(L, rng)
        A, B = coad_operator(L, X), coad_operator(L, Y)
        d = coad_operator(L, bracket(L, X, Y)) - (A @ B - B @ A)
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


def pairing(xi, X) -> float:
    return float(np.dot(xi, X))


# ---------------------------------------------------------------------------
# catalog


class Invariant(NamedTuple):
    """A polynomial function on the dual of an algebra with its gradient."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    algebra: StructureConstants
    basis: np.ndarray  # (k, m, m) faithful matrix basis
    casimirs: tuple = ()

    @property
    def matrix_size(self) -> int:
        return self.basis.shape[1]


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, g in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, g] = 1.0
        eps[b, a, g] = -1.0
    return eps


def _unit(m, i, j):
    E = np.zeros((m, m))
    E[i, j] = 1.0
    return E


def _so3_basis() -> np.ndarray:
    # (L_a)_{bc} = -eps_{abc}, so that [L_a, L_b] = eps_{abc} L_c
    return -levi_civita()


def structure_from_basis(basis: np.ndarray) -> np.ndarray:
    """Structure constants of the span of ``basis`` under the commutator."""
    basis = np.asarray(basis, dtype=float)
    k = basis.shape[0]
    B = basis.reshape(k, -1).T
    c = np.zeros((k, k, k))
    for a in range(k):
        for b in range(k):
            comm = basis[a] @ basis[b] - basis[b] @ basis[a]
            coef, *_ = np.linalg.lstsq(B, comm.ravel(), rcond=None)
            if np.max(np.abs(B @ coef - comm.ravel())) > 1e-12:
                raise StructureError("matrix basis is not closed under commutators")
            c[a, b] = coef
    c[np.abs(c) < 1e-14] = 0.0
    return 0.5 * (c - c.transpose(1, 0, 2))


def _quadratic(name, Q):
    Q = np.asarray(Q, dtype=float)
    return Invariant(name, lambda y: float(y @ Q @ y), lambda y: (Q + Q.T) @ y)


def _so3():
    L = StructureConstants(levi_civita())
    return CatalogEntry("so3", L, _so3_basis(), (_quadratic("norm2", np.eye(3)),))


def _e3():
    # rotations e_0..e_2, translations f_0..f_2 (indices 3..5)
    eps = levi_civita()
    c = np.zeros((6, 6, 6))
    c[:3, :3, :3] = eps            # [e_a, e_b] = eps_abc e_c
    c[:3, 3:, 3:] = eps            # [e_a, f_b] = eps_abc f_c
    c[3:, :3, 3:] = -eps.transpose(1, 0, 2)
    basis = np.zeros((6, 4, 4))
    basis[:3, :3, :3] = _so3_basis()
    for a in range(3):
        basis[3 + a, a, 3] = 1.0
    Q = np.zeros((6, 6))
    Q[3:, 3:] = np.eye(3)
    S = np.zeros((6, 6))
    S[:3, 3:] = 0.5 * np.eye(3)
    S[3:, :3] = 0.5 * np.eye(3)
    return CatalogEntry("e3", StructureConstants(c), basis, (_quadratic("p_dot_p", Q), _quadratic("y_dot_p", S)))


def _so4():
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    basis = np.array([_unit(4, i, j) - _unit(4, j, i) for i, j in pairs])
    L = StructureConstants(structure_from_basis(basis))
    # Pfaffian of the skew matrix sum xi_ij E_ij
    P = np.zeros((6, 6))
    idx = {p: n for n, p in enumerate(pairs)}
    for (p, q), s in ((((0, 1), (2, 3)), 1.0), (((0, 2), (1, 3)), -1.0), (((0, 3), (1, 2)), 1.0)):
        P[idx[p], idx[q]] = P[idx[q], idx[p]] = 0.5 * s
    return CatalogEntry("so4", L, basis, (_quadratic("norm2", np.eye(6)), _quadratic("pfaffian", P)))


def _so31():
    # preserves diag(-1, 1, 1, 1); rotations about axes 1..3 then boosts
    rot = [_unit(4, 2, 3) - _unit(4, 3, 2), _unit(4, 3, 1) - _unit(4, 1, 3), _unit(4, 1, 2) - _unit(4, 2, 1)]
    rot = [-r for r in rot]
    boost = [_unit(4, 0, i) + _unit(4, i, 0) for i in (1, 2, 3)]
    basis = np.array(rot + boost)
    L = StructureConstants(structure_from_basis(basis))
    Q = np.diag([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    S = np.zeros((6, 6))
    S[:3, 3:] = 0.5 * np.eye(3)
    S[3:, :3] = 0.5 * np.eye(3)
    return CatalogEntry("so31", L, basis, (_quadratic("quadratic", Q), _quadratic("rot_dot_boost", S)))


def _sl2():
    basis = np.array([[[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]])
    L = StructureConstants(structure_from_basis(basis))
    Q = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 2.0], [0.0, 2.0, 0.0]])
    return CatalogEntry("sl2", L, basis, (_quadratic("quadratic", Q),))


def _heis3():
    basis = np.array([_unit(3, 0, 1), _unit(3, 1, 2), _unit(3, 0, 2)])
    L = StructureConstants(structure_from_basis(basis))
    center = Invariant("center", lambda y: float(y[2]), lambda y: np.array([0.0, 0.0, 1.0]))
    return CatalogEntry("heis3", L, basis, (center,))


def _abelian(n):
    if n < 1:
        raise InputError("abelian algebra needs n >= 1")
    basis = np.array([_unit(n, i, i) for i in range(n)])
    inv = tuple(
        Invariant(f"y{i}", (lambda y, i=i: float(y[i])), (lambda y, i=i: np.eye(n)[i]))
        for i in range(n)
    )
    return CatalogEntry(f"abelian({n})", StructureConstants(np.zeros((n, n, n))), basis, inv)


_BUILDERS = {"so3": _so3, "so4": _so4, "so31": _so31, "e3": _e3, "sl2": _sl2, "heis3": _heis3}
CATALOG_NAMES = ("so3", "so4", "so31", "e3", "sl2", "heis3", "abelian")


def parse_algebra_name(name: str, params: int | None = None) -> tuple[str, int | None]:
    m = re.fullmatch(r"\s*abelian\s*(?:\(\s*(\d+)\s*\)|:(\d+)|(\d+))?\s*", name)
    if m:
        n = next((g for g in m.groups() if g is not None), None)
        n = int(n) if n is not None else params
        if n is None:
            raise InputError("abelian algebra requires a dimension, e.g. abelian(3)")
        return "abelian", n
    key = name.strip().lower().replace("(", "").replace(")", "").replace(",", "")
    if key not in _BUILDERS:
        raise InputError(f"unknown algebra {name!r}; known: {', '.join(CATALOG_NAMES)}")
    return key, None


def catalog(name: str, params: int | None = None) -> CatalogEntry:
    """Look up a standard algebra: so3, so4, so31, e3, sl2, heis3, abelian(n)."""
    key, n = parse_algebra_name(name, params)
    if key == "abelian":
        return _abelian(n)
    return _BUILDERS[key]()

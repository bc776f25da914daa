"""Matrix Lie groups: exponential, Ad/Ad* actions, co-adjoint orbits."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import lie_core
from .errors import InputError, RepresentationError
from .lie_core import StructureConstants

CLOSURE_TOL = 1e-12
RESIDUAL_TOL = 1e-9
RANK_RTOL = 1e-10

_EXP_DEGREE = 12
_EXP_THRESHOLD = 0.5


@dataclass(frozen=True)
class MatrixRep:
    """A faithful matrix basis ``basis[a]`` for the algebra ``algebra``."""

    algebra: StructureConstants
    basis: np.ndarray
    name: str = ""
    _flat_pinv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        k = self.algebra.rank
        if basis.ndim != 3 or basis.shape[0] != k or basis.shape[1] != basis.shape[2]:
            raise InputError(f"basis must have shape ({k}, m, m), got {basis.shape}")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        B = basis.reshape(k, -1).T
        if np.linalg.matrix_rank(B) < k:
            raise RepresentationError("basis matrices are linearly dependent")
        object.__setattr__(self, "_flat_pinv", np.linalg.pinv(B))
        c = self.algebra.c
        for a in range(k):
            for b in range(k):
                comm = basis[a] @ basis[b] - basis[b] @ basis[a]
                expected = np.tensordot(c[a, b], basis, axes=1)
                if np.max(np.abs(comm - expected)) > CLOSURE_TOL:
                    raise RepresentationError(
                        f"commutator of basis {a},{b} does not match the structure constants"
                    )

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def rank(self) -> int:
        return self.algebra.rank

    def matrix(self, X) -> np.ndarray:
        X = self.algebra.check_vector(X, "X")
        return np.tensordot(X, self.basis, axes=1)

    def coords(self, A, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
        """Expand a matrix in the basis; raise if it is not in the span."""
        A = np.asarray(A, dtype=float)
        x = self._flat_pinv @ A.ravel()
        res = float(np.max(np.abs(np.tensordot(x, self.basis, axes=1) - A)))
        if res > residual_tol * max(1.0, float(np.max(np.abs(A)))):
            raise RepresentationError(f"matrix is not in the algebra span (residual {res:.3g})")
        return x

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim)


def rep_from_catalog(name: str, params: int | None = None) -> MatrixRep:
    entry = lie_core.catalog(name, params)
    return MatrixRep(entry.algebra, entry.basis, entry.name)


def exp_matrix(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring a degree-12 Taylor series."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("exp_matrix needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise InputError("exp_matrix: non-finite input")
    norm = float(np.max(np.sum(np.abs(A), axis=0))) if A.size else 0.0
    s = 0
    if norm > _EXP_THRESHOLD:
        s = int(math.ceil(math.log2(norm / _EXP_THRESHOLD)))
    S = A / 2.0**s
    n = A.shape[0]
    E = np.eye(n)
    # Horner form of sum_{j<=12} S^j / j!
    for j in range(_EXP_DEGREE, 0, -1):
        E = np.eye(n) + (S @ E) / j
    for _ in range(s):
        E = E @ E
    return E


def check_group_element(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or not np.all(np.isfinite(g)):
        raise InputError("group element must be a finite square matrix")
    scale = max(float(np.max(np.abs(g))), 1e-300)
    if abs(np.linalg.det(g / scale)) <= 1e-12:
        raise InputError("group element is not invertible")
    return g


def Ad_matrix(rep: MatrixRep, g, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """k x k matrix of ``Ad_g`` in the algebra basis."""
    g = check_group_element(g)
    ginv = np.linalg.inv(g)
    return np.column_stack([rep.coords(g @ B @ ginv, residual_tol) for B in rep.basis])


def big_ad(rep: MatrixRep, g, X, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    g = check_group_element(g)
    return rep.coords(g @ rep.matrix(X) @ np.linalg.inv(g), residual_tol)


def Ad_star_matrix(rep: MatrixRep, g, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Matrix of ``Ad*_g``: ``<Ad*_g xi, X> = <xi, Ad_{g^-1} X>``."""
    g = check_group_element(g)
    return Ad_matrix(rep, np.linalg.inv(g), residual_tol).T


def big_coad(rep: MatrixRep, g, xi, residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    xi = rep.algebra.check_vector(xi, "xi")
    return Ad_star_matrix(rep, g, residual_tol) @ xi


def random_group_element(rep: MatrixRep, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return exp_matrix(rep.matrix(rng.uniform(-scale, scale, rep.rank)))


@dataclass(frozen=True)
class OrbitPoint:
    xi: np.ndarray
    witness: np.ndarray
    origin: np.ndarray


def orbit_sample(rep: MatrixRep, xi0, n: int, seed: int = 0) -> list[OrbitPoint]:
    """``n`` points ``Ad*_{exp X} xi0`` with X uniform in [-2, 2]^k."""
    if n < 1:
        raise InputError("n must be >= 1")
    xi0 = rep.algebra.check_vector(xi0, "xi0").copy()
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g = random_group_element(rep, rng, scale=2.0)
        out.append(OrbitPoint(big_coad(rep, g, xi0), g, xi0))
    return out


def orbit_points_to_csv(points: list[OrbitPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    k = len(points[0].xi) if points else 0
    w.writerow([f"xi_{i}" for i in range(k)])
    for p in points:
        w.writerow([repr(float(v)) for v in p.xi])
    return buf.getvalue()


def orbit_witnesses_to_json(points: list[OrbitPoint]) -> str:
    return json.dumps([p.witness.tolist() for p in points])


def coad_generator_matrix(L: StructureConstants, xi) -> np.ndarray:
    """Columns ``coad(e_a) xi`` for a = 0..k-1."""
    xi = L.check_vector(xi, "xi")
    return np.column_stack([lie_core.coad_operator(L, L.basis(a)) @ xi for a in range(L.rank)])


def numerical_rank(M, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orbit_dimension(L: StructureConstants, xi, rtol: float = RANK_RTOL) -> int:
    return numerical_rank(coad_generator_matrix(L, xi), rtol)


def stabilizer_check(rep: MatrixRep, g, xi, tol: float = 1e-10) -> bool:
    if tol <= 0:
        raise InputError("tol must be positive")
    return bool(np.max(np.abs(big_coad(rep, g, xi) - np.asarray(xi, dtype=float))) <= tol)

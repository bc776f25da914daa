import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coadgroupoid import lie_core
from coadgroupoid.errors import InputError, StructureError
from coadgroupoid.lie_core import StructureConstants

ALL = ["so3", "so4", "so31", "e3", "sl2", "heis3", "abelian(3)"]

vec3 = arrays(np.float64, 3, elements=st.floats(-1, 1))
vec6 = arrays(np.float64, 6, elements=st.floats(-1, 1))


@pytest.fixture(scope="module")
def so3():
    return lie_core.catalog("so3").algebra


@pytest.fixture(scope="module")
def e3():
    return lie_core.catalog("e3").algebra


def e(i, k=3):
    return np.eye(k)[i]


def test_so3_bracket_e1_e2(so3):
    assert np.array_equal(lie_core.bracket(so3, e(0), e(1)), e(2))


def test_so3_bracket_matches_cross_product(so3):
    rng = np.random.default_rng(3)
    for _ in range(20):
        X, Y = rng.uniform(-1, 1, (2, 3))
        np.testing.assert_allclose(lie_core.bracket(so3, X, Y), np.cross(X, Y), atol=1e-15)


def test_abelian_bracket_vanishes():
    L = lie_core.catalog("abelian(3)").algebra
    assert np.array_equal(lie_core.bracket(L, e(0), e(1)), np.zeros(3))


def test_bracket_dimension_mismatch(so3):
    with pytest.raises(InputError):
        lie_core.bracket(so3, [1.0, 0.0], e(1))


def test_ad_operator_matches_bracket(so3):
    M = lie_core.ad_operator(so3, e(2))
    np.testing.assert_array_equal(M @ e(0), lie_core.bracket(so3, e(2), e(0)))
    # [e3, e1] = e2 under the epsilon convention
    np.testing.assert_array_equal(M @ e(0), e(1))
    assert not np.any(lie_core.ad_operator(so3, np.zeros(3)))
    assert not np.any(lie_core.ad_operator(lie_core.catalog("abelian", 4).algebra, np.ones(4)))


def test_coad_is_cross_product(so3):
    # coad(e1) e2* = e1 x e2 = e3*
    np.testing.assert_array_equal(lie_core.coad(so3, e(0), e(1)), e(2))
    assert lie_core.pairing(lie_core.coad(so3, e(0), e(1)), e(0)) == 0.0
    assert not np.any(lie_core.coad(so3, np.zeros(3), e(1)))


def test_coad_is_minus_ad_transpose(e3):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, 6)
    assert np.array_equal(lie_core.coad_operator(e3, X), -lie_core.ad_operator(e3, X).T)


@pytest.mark.parametrize("name", ALL)
def test_catalog_axioms(name):
    L = lie_core.catalog(name).algebra
    assert lie_core.jacobi_defect(L) <= 1e-12
    assert lie_core.coad_homomorphism_defect(L, samples=100, seed=0) <= 1e-12


def test_so3_constants_are_epsilon(so3):
    assert np.array_equal(so3.c, lie_core.levi_civita())


def test_e3_block_structure(e3):
    c = e3.c
    assert e3.rank == 6
    assert not np.any(c[:3, :3, 3:])  # [e, e] in e
    assert not np.any(c[:3, 3:, :3])  # [e, f] in f
    assert not np.any(c[3:, 3:, :])  # [f, f] = 0
    assert lie_core.jacobi_defect(e3) <= 1e-15


def test_abelian_catalog():
    L = lie_core.catalog("abelian(4)").algebra
    assert L.rank == 4 and not np.any(L.c)
    assert lie_core.coad_homomorphism_defect(L) == 0.0


@pytest.mark.parametrize("name", ["abelian(2)", "abelian:2", "abelian2"])
def test_abelian_name_forms(name):
    assert lie_core.catalog(name).algebra.rank == 2


def test_unknown_name():
    with pytest.raises(InputError):
        lie_core.catalog("nope")
    with pytest.raises(InputError):
        lie_core.catalog("abelian")


def test_corrupted_so3_has_visible_defect():
    c = lie_core.levi_civita().copy()
    c[0, 1, 2] += 0.1
    with pytest.raises(StructureError):
        StructureConstants(c)
    assert abs(lie_core.jacobi_defect(StructureConstants(c, validate=False)) - 0.1) <= 1e-12


def test_rescaled_so3_is_still_lie():
    # changing both c[0,1,2] and c[1,0,2] rescales one bracket and keeps Jacobi
    c = lie_core.levi_civita().copy()
    c[0, 1, 2] += 0.1
    c[1, 0, 2] -= 0.1
    assert lie_core.jacobi_defect(StructureConstants(c)) == 0.0


def test_asymmetric_rejected_unless_repaired():
    c = lie_core.levi_civita().copy()
    c[0, 1, 2] = 1.001
    with pytest.raises(StructureError):
        StructureConstants(c)
    L = StructureConstants(c, antisymmetrize=True)
    assert L.c[0, 1, 2] == -L.c[1, 0, 2]


def test_json_roundtrip_sorted(e3):
    d = e3.to_json_dict()
    keys = [tuple(x[:3]) for x in d["entries"]]
    assert keys == sorted(keys)
    assert all(a < b for a, b, _ in keys)
    back = StructureConstants.from_json(json.dumps(d))
    assert np.array_equal(back.c, e3.c)


def test_json_rejects_bad_entries():
    with pytest.raises(InputError):
        StructureConstants.from_json_dict({"rank": 3, "entries": [[1, 0, 2, 1.0]]})
    with pytest.raises(InputError):
        StructureConstants.from_json_dict({"entries": []})


@pytest.mark.parametrize("name", ALL)
def test_casimirs_are_ad_invariant(name):
    entry = lie_core.catalog(name)
    L = entry.algebra
    rng = np.random.default_rng(1)
    for inv in entry.casimirs:
        for _ in range(20):
            xi, X = rng.uniform(-1, 1, (2, L.rank))
            # d/dt C(xi + t coad(X) xi) = <grad C, coad(X) xi>
            assert abs(inv.gradient(xi) @ lie_core.coad(L, X, xi)) <= 1e-13


@given(vec3, vec3, vec3, st.floats(-2, 2), st.floats(-2, 2))
def test_bracket_bilinear_antisymmetric(X, Y, Z, a, b):
    L = lie_core.catalog("so3").algebra
    lhs = lie_core.bracket(L, a * X + b * Y, Z)
    rhs = a * lie_core.bracket(L, X, Z) + b * lie_core.bracket(L, Y, Z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)
    np.testing.assert_array_equal(lie_core.bracket(L, X, Y), -lie_core.bracket(L, Y, X))


@settings(max_examples=50)
@given(vec6, vec6, vec6)
def test_coad_pairing_identity(X, Y, xi):
    L = lie_core.catalog("e3").algebra
    # <ad*_X xi, Y> = <xi, [Y, X]>
    lhs = lie_core.pairing(lie_core.coad(L, X, xi), Y) - lie_core.pairing(xi, lie_core.bracket(L, Y, X))
    assert abs(lhs) <= 1e-12

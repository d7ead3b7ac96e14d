import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors as sympy_invariant_factors

from monopole import cohomology as co
from monopole.cohomology import ChainComplex, ChainComplexError
from monopole.spinor_algebra import DomainError

# (free rank, torsion) per degree over Z; dimension per degree over Z/2
EXPECTED = {
    "s4": ([(1, []), (0, []), (0, []), (0, []), (1, [])], [1, 0, 0, 0, 1]),
    "cp2": ([(1, []), (0, []), (1, []), (0, []), (1, [])], [1, 0, 1, 0, 1]),
    "t4": ([(1, []), (4, []), (6, []), (4, []), (1, [])], [1, 4, 6, 4, 1]),
    "s2xs2": ([(1, []), (0, []), (2, []), (0, []), (1, [])], [1, 0, 2, 0, 1]),
    "torsion_z2": ([(1, []), (0, []), (0, []), (0, [2])], [1, 0, 1, 1]),
    "torsion_z4": ([(1, []), (0, []), (0, []), (0, [4])], [1, 0, 1, 1]),
}


def exact(M):
    return [[int(v) for v in row] for row in M]


def check_smith(M):
    M = np.asarray(M, dtype=object)
    s = co.smith_normal_form(M)
    assert exact(s.U @ s.D @ s.V) == exact(M)
    assert exact(s.left @ M @ s.right) == exact(s.D)
    assert abs(int(Matrix(exact(s.U)).det())) == 1 and abs(int(Matrix(exact(s.V)).det())) == 1
    diag = [int(d) for d in s.diagonal]
    nz = [d for d in diag if d != 0]
    assert all(d > 0 for d in nz)
    assert diag[: len(nz)] == nz
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    off = s.D.copy()
    for i in range(min(off.shape)):
        off[i, i] = 0
    assert not any(int(v) for v in off.ravel())
    return s


def test_smith_examples():
    assert [int(d) for d in check_smith([[2]]).diagonal] == [2]
    assert [int(d) for d in check_smith([[2, 0], [0, 3]]).diagonal] == [1, 6]
    s = check_smith(np.zeros((2, 3), dtype=int))
    assert exact(s.U) == exact(np.eye(2, dtype=int)) and exact(s.V) == exact(np.eye(3, dtype=int))


def test_smith_random_against_sympy():
    rng = np.random.default_rng(0)
    for _ in range(500):
        M = rng.integers(-9, 10, size=(8, 8))
        s = check_smith(M)
        ours = [int(d) for d in s.diagonal if d != 0]
        theirs = [abs(int(v)) for v in sympy_invariant_factors(Matrix(M.tolist()), domain=ZZ) if v != 0]
        assert ours == theirs


@given(st.integers(1, 5), st.integers(1, 5), st.data())
@settings(max_examples=60, deadline=None)
def test_smith_rectangular(r, c, data):
    M = data.draw(st.lists(st.lists(st.integers(-30, 30), min_size=c, max_size=c), min_size=r, max_size=r))
    check_smith(M)


def test_smith_deterministic_and_big_ints():
    M = [[10**30, 3], [7, 10**25]]
    a, b = co.smith_normal_form(M), co.smith_normal_form(M)
    assert exact(a.D) == exact(b.D) and exact(a.U) == exact(b.U)
    check_smith(M)
    with pytest.raises(OverflowError):
        co.to_int64(a.D)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_catalog_groups(name):
    cx = co.load_catalog(name)
    z, z2 = EXPECTED[name]
    assert co.cohomology_groups(cx, "Z") == z
    assert [r for r, t in co.cohomology_groups(cx, "Z/2")] == z2


def test_catalog_names():
    assert set(EXPECTED) == set(co.catalog_names())


def test_boundary_composition_checked():
    with pytest.raises(ChainComplexError):
        ChainComplex([1, 1, 1], {1: [[1]], 2: [[1]]})


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"ranks": [1, 1,\n  ]}')
    with pytest.raises(ChainComplexError, match="line 2"):
        ChainComplex.from_file(p)
    with pytest.raises(ChainComplexError, match="ranks"):
        ChainComplex.from_dict({"boundaries": {}})
    with pytest.raises(ChainComplexError, match="unknown key"):
        ChainComplex.from_dict({"ranks": [1], "extra": 1})


def test_round_trip(tmp_path):
    cx = co.load_catalog("torsion_z2")
    p = tmp_path / "cx.json"
    p.write_text(json.dumps(cx.to_dict()))
    cy = ChainComplex.from_file(p)
    assert cy.to_dict() == cx.to_dict()


def test_reduce_mod2():
    cx = co.load_catalog("cp2")
    h2 = co.cohomology_group(cx, 2, "Z")
    g = h2.element([1])
    assert co.reduce_mod2(h2.element([0])).is_zero()
    assert co.reduce_mod2(h2.element([2])).is_zero()
    r = co.reduce_mod2(g)
    assert r.coords == (1,)
    with pytest.raises(DomainError):
        co.reduce_mod2(r)


def test_bockstein_torsion_example():
    cx = co.load_catalog("torsion_z2")
    w = cx.classes["w2"]
    b = co.bockstein(w)
    assert b.degree == 3 and b.ring == "Z" and b.coords == (1,)
    h3 = co.cohomology_group(cx, 3, "Z")
    assert h3.torsion == [2]
    # independent of the lift: any lift differs by an even cochain
    for lift in ([1], [3], [-1], [5]):
        assert co.bockstein(w, lift=lift).coords == b.coords
    with pytest.raises(DomainError):
        co.bockstein(w, lift=[2])


def test_bockstein_zero_and_cp2():
    cx = co.load_catalog("cp2")
    w = cx.classes["w2"]
    assert co.bockstein(w).is_zero()
    zero = co.cohomology_class(cx, 2, [0], "Z/2")
    assert co.bockstein(zero).is_zero()


def test_bockstein_is_two_torsion():
    for name in co.catalog_names():
        cx = co.load_catalog(name)
        for k in range(cx.dim + 1):
            h = co.cohomology_group(cx, k, "Z/2")
            for coords in co.group_elements(h):
                b = co.bockstein(h.element(coords))
                if b.degree > cx.dim:
                    continue
                doubled = co.cohomology_class(cx, b.degree, [2 * v for v in b.representative], "Z")
                assert doubled.is_zero()


def test_exactness_reduce_then_bockstein():
    # image of reduce_mod2 equals kernel of bockstein, exhaustively
    for name in co.catalog_names():
        cx = co.load_catalog(name)
        for k in range(cx.dim):
            hz, h2 = co.cohomology_group(cx, k, "Z"), co.cohomology_group(cx, k, "Z/2")
            image = {co.reduce_mod2(hz.element(c)).coords for c in co.group_elements(hz)}
            kernel = {c for c in co.group_elements(h2) if co.bockstein(h2.element(c)).is_zero()}
            assert image == {tuple(c) for c in kernel}


def test_spinc_lift_manifolds():
    for name in co.catalog_names():
        cx = co.load_catalog(name)
        if cx.manifold:
            d = co.spinc_lift(cx, cx.classes["w2"])
            assert d.lifts
            assert co.reduce_mod2(d.witness).coords == cx.classes["w2"].coords


def test_spinc_lift_examples():
    cp2 = co.load_catalog("cp2")
    d = co.spinc_lift(cp2, cp2.classes["w2"])
    assert d.lifts and d.witness.coords == (1,)
    tz = co.load_catalog("torsion_z2")
    d = co.spinc_lift(tz, tz.classes["w2"])
    assert not d.lifts and not d.obstruction.is_zero()
    for name in co.catalog_names():
        cx = co.load_catalog(name)
        zero = co.cohomology_class(cx, 2, [0] * cx.rank(2), "Z/2")
        d = co.spinc_lift(cx, zero)
        assert d.lifts and d.witness.is_zero()
    with pytest.raises(DomainError):
        co.spinc_lift(cp2, co.cohomology_group(cp2, 2, "Z").element([1]))


def test_empty_complex():
    cx = ChainComplex([0, 0, 0])
    assert co.cohomology_groups(cx, "Z") == [(0, [])] * 3
    d = co.spinc_lift(cx, co.cohomology_class(cx, 2, [], "Z/2"))
    assert d.lifts

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from dglakit.coneweil import (CeAlgebra, Derivation, GCAlgebra, GDifferentialSpace, WeilAlgebra,
                              build_cone, build_cone_p, check_g_differential_space,
                              cone_cohomology)
from dglakit.core import CutoffRefused, SparseLinearMap, cohomology_dim, dgla_residuals
from dglakit.liecore import InvariantError, InvariantPolynomial, builtin, killing_form

E, H, F = 0, 1, 2


def test_gc_algebra_signs():
    A = GCAlgebra(2, 1)
    u0, u1, v = A.odd(0), A.odd(1), A.even(0)
    assert A.mul(u0, u1) == {((0, 1), ()): 1}
    assert A.mul(u1, u0) == {((0, 1), ()): -1}
    assert A.mul(u0, u0) == {}
    assert A.mul(v, u0) == A.mul(u0, v)


def test_gc_algebra_poly_cutoff():
    A = GCAlgebra(0, 1, poly_cutoff=2)
    v = A.even(0)
    vv = A.mul(v, v)
    with pytest.raises(CutoffRefused):
        A.mul(vv, v)


def test_abelian_weil_differential():
    W = WeilAlgebra(builtin("abelian_2"), 3)
    for a in range(2):
        assert W.d(W.theta(a)) == W.t(a)
        assert W.d(W.t(a)) == {}


def test_sl2_weil_on_top_theta_monomial():
    # derivation rule by hand: the quadratic parts of d theta die against two thetas
    W = WeilAlgebra(builtin("sl2"), 3)
    top = {((E, H, F), ()): 1}
    expect = {((H, F), (E,)): 1, ((E, F), (H,)): -1, ((E, H), (F,)): 1}
    assert W.d(top) == expect


def test_weil_theta_theta_convention():
    W = WeilAlgebra(builtin("sl2"), 2)
    # [theta,theta] = f^c_ab theta^a theta^b e_c; the e_h component is 2 f^h_ef theta^e theta^f
    assert W.bracket_theta_theta()[H] == {((E, F), ()): 2}
    dtheta_h = W.d(W.theta(H))
    assert dtheta_h == {((), (H,)): 1, ((E, F), ()): -1}


def test_weil_is_acyclic_in_low_degrees():
    W = WeilAlgebra(builtin("sl2"), 3)
    dims = []
    for k in range(0, 5):
        d_in = (SparseLinearMap.from_operator(W.d, [{b: 1} for b in W.basis(k - 1)], 1)
                if k else SparseLinearMap((), (), 1))
        d_out = SparseLinearMap.from_operator(W.d, [{b: 1} for b in W.basis(k)], 1)
        dims.append(cohomology_dim(d_in, d_out))
    assert dims == [1, 0, 0, 0, 0]


@pytest.mark.parametrize("name", ["sl2", "so3", "abelian_2"])
def test_weil_relations(name):
    W = WeilAlgebra(builtin(name), 3)
    assert all(ok for _, ok, _ in W.verify())


def test_ce_is_g_differential():
    ok, w = check_g_differential_space(CeAlgebra(builtin("sl2")).g_space())
    assert ok, w


def test_ce_with_zero_contractions_fails():
    ce = CeAlgebra(builtin("sl2"))
    zero = [Derivation(ce.alg, -1, [{} for _ in range(3)], [], "0") for _ in range(3)]
    V = GDifferentialSpace(ce.lie, ce.basis, ce.d, zero, ce.L, range(4), "broken")
    ok, w = check_g_differential_space(V)
    assert not ok and "[d,I(" in w


def test_cone_brackets():
    C = build_cone(builtin("sl2"))
    assert C.bracket({("L", H): 1}, {("I", E): 1}) == {("I", E): 2}
    assert C.d({("I", E): 1}) == {("L", E): 1}
    assert cone_cohomology(C) == {-1: 0, 0: 0}


def test_abelian_cone():
    C = build_cone(builtin("abelian_2"))
    keys = C.keys()
    assert all(not C.bracket({a: 1}, {b: 1}) for a in keys for b in keys)
    assert C.d({("I", 1): 1}) == {("L", 1): 1}


def test_cone_p_extension():
    L = builtin("sl2")
    Cp = build_cone_p(L, killing_form(L))
    assert Cp.bracket({("I", E): 1}, {("I", F): 1}) == {("c",): -8}
    assert next(dgla_residuals(Cp, [{k: 1} for k in Cp.keys()]), None) is None
    zero = build_cone_p(L, InvariantPolynomial(L, 2, {}))
    assert zero.bracket({("I", E): 1}, {("I", F): 1}) == {}


def test_cone_p_rejects_non_invariant():
    L = builtin("sl2")
    with pytest.raises(InvariantError):
        build_cone_p(L, InvariantPolynomial(L, 2, {(E, E): mpq(1)}))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=3), st.integers(-3, 3))
def test_cartan_relation_on_random_weil_elements(picks, coef):
    W = WeilAlgebra(builtin("sl2"), 3)
    basis = W.basis(3)
    u = {basis[i % len(basis)]: mpq(coef or 1) for i in picks}
    du = W.d(u)
    assert W.d(du) == {}
    for a in range(3):
        lhs = W.d(W.I[a](u))
        for k, v in W.I[a](du).items():
            lhs[k] = lhs.get(k, 0) + v
        lhs = {k: v for k, v in lhs.items() if v}
        assert lhs == W.L[a](u)

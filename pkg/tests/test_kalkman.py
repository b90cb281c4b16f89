"""Maurer-Cartan elements, the group-like elements phi and Phi, transgression,
Cartan/Weil models and the FMS twisted algebra."""

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from dglakit.coneweil import WeilAlgebra, build_cone
from dglakit.core import CutoffRefused, add_into, scaled, sub
from dglakit.dmodel import DgAlgebra
from dglakit.kalkman import (TensorDgla, cartan_model, ce_module, cone_mc_element,
                             dg_mc_element, equivariant_cohomology_weil, exact_difference,
                             fms_dgla, fms_layer_two_residual, fms_relations,
                             invariant_subspace, kalkman_residuals, kalkman_transform, mc_check,
                             phi_big, phi_cone, phi_low_degree_expansion, project_to_cone,
                             remark_witness, transgress_solve, trivial_module, weight_function,
                             weil_module)
from dglakit.liecore import builtin, invariant_polynomials, killing_form, trace_cubic

E, H, F = 0, 1, 2


@pytest.fixture(scope="module")
def sl2():
    return builtin("sl2")


@pytest.fixture(scope="module")
def Phi4(sl2):
    return phi_big(DgAlgebra(sl2, 4), 4)


# -- Maurer-Cartan ----------------------------------------------------------


def test_cone_mc(sl2):
    W = WeilAlgebra(sl2, 4)
    ok, res = mc_check(TensorDgla(W, build_cone(sl2), 8), cone_mc_element(W))
    assert ok, res


def test_dg_mc(sl2):
    W = WeilAlgebra(sl2, 3)
    D = DgAlgebra(sl2, 6)
    ok, res = mc_check(TensorDgla(W, D, 6), dg_mc_element(W, D, 6))
    assert ok, res


def test_zero_is_mc(sl2):
    W = WeilAlgebra(sl2, 2)
    assert mc_check(TensorDgla(W, build_cone(sl2)), {}) == (True, {})


def test_mc_rejects_wrong_degree(sl2):
    W = WeilAlgebra(sl2, 2)
    with pytest.raises(ValueError):
        mc_check(TensorDgla(W, build_cone(sl2)), {(((), ()), ("L", 0)): 1})


# -- phi and Phi -----------------------------------------------------------


@pytest.mark.parametrize("name", ["sl2", "so3", "abelian_2"])
def test_phi_identity(name):
    G = phi_cone(builtin(name), verify=True)
    assert G.group_like_residual() == {}
    assert G.invariance_residual() is None
    assert G.counit() == 1


def test_phi_big_identity_and_orientation(Phi4):
    assert Phi4.group_like_residual() == {}
    assert Phi4.invariance_residual() is None
    assert Phi4.notes["orientation"] == "dPhi/ds = Phi b"


def test_phi_low_degree(sl2, Phi4):
    R = Phi4.ring
    D = R.words.D
    assert sub(R.truncate(Phi4.terms, 3), R.truncate(phi_low_degree_expansion(D, R), 3)) == {}


def test_phi_big_projects_to_phi(sl2, Phi4):
    small = phi_cone(sl2)
    proj = project_to_cone(Phi4, sl2)
    keep = lambda X: {k: v for k, v in X.items() if len(k[0][0]) + 2 * len(k[0][1]) <= 4}
    assert keep(proj) == keep(small.terms)


def test_phi_big_abelian():
    G = phi_big(DgAlgebra(builtin("abelian_1"), 4), 4)
    assert G.group_like_residual() == {}


def test_phi_big_cutoffs(sl2):
    with pytest.raises(CutoffRefused):
        phi_big(DgAlgebra(sl2, 3), 4)
    with pytest.raises(CutoffRefused):
        phi_big(DgAlgebra(sl2, 3), 1)


# -- transgression -----------------------------------------------------------

# e for (sl2, Killing) from the invariant linear solve; the sign convention is d_W e = +p
E_SL2 = {((0,), (2,)): 4, ((0, 1, 2), ()): 8, ((1,), (1,)): 8, ((2,), (0,)): 4}


def test_transgression_sl2(sl2):
    ch = transgress_solve(sl2, killing_form(sl2))
    assert ch.sign == 1
    assert ch.e == {k: mpq(v) for k, v in E_SL2.items()}
    assert ch.eta == {((0, 1, 2), ()): 8}


def test_transgression_routes_agree(sl2):
    p = killing_form(sl2)
    a = transgress_solve(sl2, p, "linear_solve")
    b = transgress_solve(sl2, p, "via_phi_p")
    W = WeilAlgebra(sl2, 3)
    y = exact_difference(W, a.e, b.e, 3)
    assert y is not None
    r = W.d(y)
    add_into(r, b.e)
    assert sub(a.e, r) == {}


def test_remark_witness(sl2):
    p = killing_form(sl2)
    W = WeilAlgebra(sl2, 3)
    w = remark_witness(W, p)
    assert W.d(w) == scaled(W.poly_element(p), -1)
    # -p(t, theta) + (1/6) p(theta, [theta, theta]), expanded by hand
    assert w == {((2,), (0,)): -4, ((0,), (2,)): -4, ((1,), (1,)): -8, ((0, 1, 2), ()): -8}


def test_transgression_abelian():
    L = builtin("abelian_2")
    p = invariant_polynomials(L, 2)[0]
    ch = transgress_solve(L, p)
    W = WeilAlgebra(L, 3)
    naive: dict = {}
    for m, c in p.coeffs.items():
        a, b = m
        add_into(naive, W.mul(W.theta(a), W.t(b)), c / 2)
        add_into(naive, W.mul(W.theta(b), W.t(a)), c / 2)
    assert W.d(naive) == W.poly_element(p)
    assert exact_difference(W, ch.e, naive, 3) is not None


def test_transgression_sl3_cubic():
    L = builtin("sl3")
    ch = transgress_solve(L, trace_cubic(L))
    W = WeilAlgebra(L, 4)
    assert W.d(ch.e) == W.poly_element(trace_cubic(L))
    assert all(not W.L[a](ch.e) for a in range(8))


def test_transgression_rejects_bad_method(sl2):
    with pytest.raises(ValueError):
        transgress_solve(sl2, killing_form(sl2), "guess")


# -- modules, Cartan model, Kalkman -------------------------------------------


def _modules(L):
    yield "trivial", trivial_module(L)
    yield "ce", ce_module(L)
    yield "weil", weil_module(L, 3, range(0, 4))


@pytest.mark.parametrize("which", ["trivial", "ce", "weil"])
def test_module_and_cartan_relations(sl2, Phi4, which):
    V = dict(_modules(sl2))[which]
    assert V.verify()[0]
    U = cartan_model(V, 3, range(0, 4))
    assert U.verify() == (True, None)
    K = kalkman_transform(U, Phi4)
    assert next(kalkman_residuals(U, K), None) is None


def test_trivial_module_cartan_is_weil(sl2):
    U = cartan_model(trivial_module(sl2), 3, range(0, 4))
    for k in range(4):
        for key in U.basis(k):
            w = key[0]
            assert U.d({key: 1}) == {(kk, key[1]): v for kk, v in U.W.d({w: 1}).items()}


def test_trivial_module_kalkman_is_identity(sl2, Phi4):
    U = cartan_model(trivial_module(sl2), 3, range(0, 4))
    K = kalkman_transform(U, Phi4)
    for key in U.basis(3):
        assert K.forward({key: 1}) == {key: 1}


def test_cone_module_recovers_weil_model(sl2, Phi4):
    # for a module pulled back from Cg, Y(x) is the module contraction I_V(x)
    V = ce_module(sl2)
    U = cartan_model(V, 3, range(0, 4))
    K = kalkman_transform(U, Phi4)
    for key in U.basis(3):
        for a in range(3):
            wk, vk = key
            expect = {}
            for kk, c in V.i((a,))({vk: 1}).items():
                sign = -1 if len(wk[0]) % 2 else 1
                expect[(wk, kk)] = sign * c
            assert K.Y[a]({key: 1}) == expect


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3), st.lists(st.integers(0, 500), min_size=1, max_size=3),
       st.integers(1, 3))
def test_conjugation_round_trip(degree, picks, coef):
    U, K = _ce_kalkman()
    basis = U.basis(degree)
    u = {}
    for i in picks:
        add_into(u, {basis[i % len(basis)]: mpq(coef)})
    assert K.backward(K.forward(u)) == {k: v for k, v in u.items() if v}


_CACHE = {}


def _ce_kalkman():
    if "k" not in _CACHE:
        L = builtin("sl2")
        U = cartan_model(ce_module(L), 3, range(0, 4))
        _CACHE["k"] = (U, kalkman_transform(U, phi_big(DgAlgebra(L, 4), 4)))
    return _CACHE["k"]


# -- equivariant cohomology -------------------------------------------------


@pytest.mark.parametrize("model", ["weil", "cartan"])
def test_equivariant_cohomology_of_weil(sl2, model):
    got = equivariant_cohomology_weil(sl2, range(0, 9), model)
    assert [got[k] for k in range(9)] == [1, 0, 0, 0, 1, 0, 0, 0, 1]


def test_point_equivariant_cohomology_is_invariant_polynomials(sl2):
    W = WeilAlgebra(sl2, 4)
    for k in range(0, 9):
        basic = invariant_subspace(W.I + W.L, W.basis(k), sl2, weight_function(sl2))
        expect = 0 if k % 2 else (1 if k == 0 else len(invariant_polynomials(sl2, k // 2)))
        assert len(basic) == expect
        assert all(not W.d(b) for b in basic)


def test_equivariant_cutoff_refusal(sl2):
    with pytest.raises(CutoffRefused):
        equivariant_cohomology_weil(sl2, range(0, 9), "weil", poly_cutoff=1)


# -- FMS ------------------------------------------------------------------


def test_fms_sl2(sl2):
    p = killing_form(sl2)
    Fm = fms_dgla(sl2, p)
    assert Fm.image_dims() == {0: 3, -1: 3, -2: 1}
    # e(0) = -p(t, theta) + (1/6) p(theta, [theta, theta])
    assert Fm.twist.e0() == {((0,), (2,)): -4, ((1,), (1,)): -8, ((2,), (0,)): -4,
                             ((0, 1, 2), ()): -8}
    # I~(x) = I(x) - p(x, theta), and [I~(x), I~(y)] = -2 p(x,y) 1
    assert Fm.I_tilde(E) == {("I", E): 1, ("B", ((F,), ())): -4}
    A = Fm.A
    for a in range(3):
        for b in range(3):
            got = A.bracket(Fm.I_tilde(a), Fm.I_tilde(b))
            assert got == scaled(A.unit(), -2 * p.tensor((a, b)))
    assert next(fms_relations(Fm), None) is None
    assert fms_layer_two_residual(Fm) is None


@pytest.mark.slow
def test_fms_sl3():
    L = builtin("sl3")
    Fm = fms_dgla(L, trace_cubic(L))
    assert Fm.image_dims() == {0: 8, -1: 8, -2: 8, -3: 8, -4: 1}
    assert next(fms_relations(Fm), None) is None
    assert fms_layer_two_residual(Fm) is None


def test_fms_abelian():
    L = builtin("abelian_2")
    p = invariant_polynomials(L, 2)[0]
    assert p.coeffs == {(0, 0): 1}
    Fm = fms_dgla(L, p)
    assert next(fms_relations(Fm), None) is None
    assert Fm.twist.e0() == {((0,), (0,)): -1}
    A = Fm.A
    for a in range(2):
        # B is abelian, so the twist only changes d on the contractions: d' I(a) - d I(a) = p(a, t)
        assert A.d(Fm.theta({a: 1})) == A.d_untwisted(Fm.theta({a: 1}))
        shift = sub(A.d({("I", a): 1}), A.d_untwisted({("I", a): 1}))
        assert shift == ({("B", ((), (0,))): 1} if a == 0 else {})

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from dglakit.coneweil import build_cone, build_cone_p, cone_cohomology
from dglakit.core import CutoffRefused, add_into, dgla_residuals, sub
from dglakit.dmodel import (CentralExtensionData, DgAlgebra, acyclicity_report, d_p,
                            generating_function_residual, polynomial_extension, projection_pi,
                            verify_dg)
from dglakit.liecore import InvariantError, builtin, killing_form, trace_cubic

from oracles import free_lie_dims_pbw

E, H, F = 0, 1, 2
HALF = mpq(1, 2)

small = st.integers(min_value=-3, max_value=3)


def vec(dim):
    return st.lists(small, min_size=dim, max_size=dim).map(
        lambda xs: {i: mpq(x) for i, x in enumerate(xs) if x}).filter(bool)


@pytest.fixture(scope="module")
def sl2():
    return builtin("sl2")


@pytest.fixture(scope="module")
def D5(sl2):
    return DgAlgebra(sl2, 5)


def test_sl2_graded_dimensions(sl2):
    dims = DgAlgebra(sl2, 3).dims()
    assert [dims[k] for k in (-1, -2, -3)] == [3, 6, 14]


def test_dimensions_match_free_lie_oracle(sl2):
    # S+(sl2) has 3, 6, 10 letters in degrees -1, -3, -5
    pbw = free_lie_dims_pbw({-1: 3, -3: 6, -5: 10}, 6)
    dims = DgAlgebra(sl2, 6).dims()
    assert all(dims[k] == pbw[k] for k in range(-1, -7, -1))


def test_abelian_one_dimensions():
    dims = DgAlgebra(builtin("abelian_1"), 6).dims()
    # frozen from the PBW oracle on odd letters of degree -1, -3, -5
    assert [dims[k] for k in range(-1, -7, -1)] == [1, 1, 1, 1, 2, 3]
    assert free_lie_dims_pbw({-1: 1, -3: 1, -5: 1}, 6) == {-1: 1, -2: 1, -3: 1, -4: 1,
                                                           -5: 2, -6: 3}


def test_sl3_degree_minus_two():
    # spanned by [I(x),I(y)], a copy of Sym^2 of an 8-dimensional space
    assert DgAlgebra(builtin("sl3"), 2).dims()[-2] == 36


def test_cutoff_refusals(sl2):
    with pytest.raises(CutoffRefused):
        DgAlgebra(sl2, 0)
    D = DgAlgebra(sl2, 3)
    with pytest.raises(CutoffRefused):
        D.generator((E, E, E))
    with pytest.raises(CutoffRefused):
        acyclicity_report(D, range(-3, 1))


def test_polarized_quadratic_differential(D5):
    for a in range(3):
        for b in range(3):
            lhs = D5.d(D5.generator((a, b)))
            rhs = {k: HALF * v for k, v in D5.bracket(D5.generator((a,)),
                                                      D5.generator((b,))).items()}
            assert lhs == rhs


def test_first_layer_differential(D5):
    assert D5.d(D5.generator((H,))) == {("l", H): 1}


@settings(max_examples=25, deadline=None)
@given(vec(3))
def test_cubic_layer_differential(x):
    D = DgAlgebra(builtin("sl2"), 5)
    i1, i2, i3 = (D.i_layer(x, k) for k in (1, 2, 3))
    assert D.d(i3) == D.bracket(i1, i2)


@settings(max_examples=25, deadline=None)
@given(vec(3))
def test_generating_function(x):
    assert generating_function_residual(DgAlgebra(builtin("sl2"), 5), x) is None


def test_axioms_at_cutoff_five(D5):
    assert next(verify_dg(D5), None) is None


def test_acyclicity(sl2):
    D = DgAlgebra(sl2, 7)
    assert acyclicity_report(D, range(-6, 1)) == {k: 0 for k in range(-6, 1)}


def test_cone_acyclic_same_machinery(sl2):
    assert cone_cohomology(build_cone(sl2)) == {-1: 0, 0: 0}


def test_projection(sl2, D5):
    pi = projection_pi(D5, build_cone(sl2))
    assert pi(D5.generator((E,))) == {("I", E): 1}
    assert pi(D5.bracket(D5.generator((E,)), D5.generator((F,)))) == {}
    assert pi(D5.generator((E, F))) == {}


@settings(max_examples=200, deadline=None)
@given(st.integers(-4, 0), st.lists(st.integers(0, 200), min_size=1, max_size=3), small)
def test_projection_chain_map_on_random_elements(degree, picks, coef):
    D = DgAlgebra(builtin("sl2"), 5)
    basis = D.basis(degree)
    u: dict = {}
    for i in picks:
        add_into(u, basis[i % len(basis)], mpq(coef or 1))
    pi = projection_pi(D, build_cone(D.lie), verify=False)
    assert next(pi.residuals([u]), None) is None


def test_zero_extension_matches_dg(sl2):
    ext = CentralExtensionData([-2], {}, {}, "C")
    D0, D = DgAlgebra(sl2, 4, ext), DgAlgebra(sl2, 4)
    for k in range(0, -5, -1):
        for u in D.basis(k):
            assert D0.d(u) == D.d(u)


def test_cubic_extension_on_sl3():
    L = builtin("sl3")
    p = trace_cubic(L)
    D = DgAlgebra(L, 5, polynomial_extension(p))
    x = {0: mpq(1), 2: mpq(1), 3: mpq(2), 7: mpq(-1)}
    i1, i2, i3 = (D.i_layer(x, k) for k in (1, 2, 3))
    extra = sub(D.d(i3), D.bracket(i1, i2))
    assert extra == {("c", 0): p(x, x, x)}
    assert p(x, x, x) != 0
    assert D.dims()[-4] == DgAlgebra(L, 5).dims()[-4] + 1


def test_quadratic_extension_descends(sl2):
    p = killing_form(sl2)
    Dp = d_p(sl2, p, 5)
    pi = projection_pi(Dp, build_cone_p(sl2, p))
    assert next(pi.residuals(), None) is None
    assert Dp.dims()[-2] == DgAlgebra(sl2, 5).dims()[-2] + 1


def test_non_invariant_extension_rejected(sl2):
    bad = CentralExtensionData([-2], {(E, E): {0: mpq(1)}}, {}, "bad")
    with pytest.raises(InvariantError):
        DgAlgebra(sl2, 3, bad)


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, -1), st.integers(-3, -1), st.integers(0, 99), st.integers(0, 99))
def test_random_pairs_satisfy_leibniz(d1, d2, i, j):
    D = DgAlgebra(builtin("sl2"), 6)
    u = D.basis(d1)[i % D.dim(d1)]
    v = D.basis(d2)[j % D.dim(d2)]
    assert next(dgla_residuals(D, [u, v], degree_floor=-6, jacobi=False), None) is None

import json
from importlib import resources

import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from dglakit.liecore import (LieValidationError, InvariantError, builtin, builtin_polynomial,
                             check_jacobi, dump_lie, from_tensor, invariant_polynomials,
                             killing_form, load_lie_file, make_lie, multiset_mult, trace_cubic)

small = st.integers(min_value=-4, max_value=4)


def vectors(dim):
    return st.lists(small, min_size=dim, max_size=dim).map(
        lambda xs: {i: mpq(x) for i, x in enumerate(xs) if x})


def _sympy_sl2_killing():
    """Killing form of sl2 computed from 2x2 matrices with sympy."""
    E = sp.Matrix([[0, 1], [0, 0]])
    H = sp.Matrix([[1, 0], [0, -1]])
    F = sp.Matrix([[0, 0], [1, 0]])
    basis = [E, H, F]
    flat = sp.Matrix([[m[i] for m in basis] for i in range(4)])

    def coords(M):
        sol = flat.solve_least_squares(sp.Matrix(list(M)))
        return list(sol)

    ad = []
    for X in basis:
        ad.append(sp.Matrix([coords(X * Y - Y * X) for Y in basis]).T)
    return [[(ad[a] * ad[b]).trace() for b in range(3)] for a in range(3)]


def test_sl2_structure():
    L = builtin("sl2")
    e, h, f = 0, 1, 2
    assert L.basis_names == ("e", "h", "f")
    assert L.bracket({h: 1}, {e: 1}) == {e: 2}
    assert L.bracket({h: 1}, {f: 1}) == {f: -2}
    assert L.bracket({e: 1}, {f: 1}) == {h: 1}
    assert check_jacobi(L) == (True, None)


def test_builtin_dimensions():
    assert builtin("sl2").dim == 3
    assert builtin("sl3").dim == 8
    assert builtin("so3").dim == 3
    ab = builtin("abelian_2")
    assert ab.is_abelian() and ab.dim == 2
    with pytest.raises(KeyError):
        builtin("g2")


def test_so3_is_a_lie_algebra():
    L = builtin("so3")
    assert check_jacobi(L)[0]
    assert L.bracket({0: 1}, {1: 1}) == {2: 1}


def test_perturbed_constants_rejected():
    L = builtin("sl2")
    consts = {k: dict(v) for k, v in L.constants.items()}
    consts[(0, 1)] = {0: consts[(0, 1)][0] + 1}
    with pytest.raises(LieValidationError, match="Jacobi"):
        make_lie("bad", L.basis_names, consts)


def test_antisymmetry_enforced():
    with pytest.raises(LieValidationError):
        make_lie("bad", ("a", "b"), {(0, 1): {0: 1}, (1, 0): {0: 1}})


def test_killing_form_matches_sympy():
    L = builtin("sl2")
    K = killing_form(L)
    oracle = _sympy_sl2_killing()
    for a in range(3):
        for b in range(3):
            assert K.tensor((a, b)) == mpq(str(oracle[a][b]))
    assert K.tensor((1, 1)) == 8


@pytest.mark.parametrize("name,n,dim", [("sl2", 2, 1), ("sl2", 3, 0), ("abelian_2", 2, 3),
                                        ("so3", 2, 1), ("sl3", 3, 1)])
def test_invariant_polynomial_dimensions(name, n, dim):
    assert len(invariant_polynomials(builtin(name), n)) == dim


def test_killing_spans_the_quadratic_invariants():
    L = builtin("sl2")
    (q,) = invariant_polynomials(L, 2)
    K = killing_form(L)
    ratio = K.tensor((1, 1)) / q.tensor((1, 1))
    assert all(K.tensor(m) == ratio * q.tensor(m) for m in [(0, 0), (0, 2), (1, 1), (0, 1)])


def test_non_invariant_rejected():
    L = builtin("sl2")
    with pytest.raises(InvariantError):
        from_tensor(L, 2, lambda a, b: 1 if a == b == 0 else 0)


def test_cubic_on_sl3():
    L = builtin("sl3")
    p = trace_cubic(L)
    assert p.degree == 3 and not p.is_zero()
    assert p.invariance_residual() is None
    with pytest.raises(ValueError):
        trace_cubic(builtin("abelian_2"))


def test_polynomial_selector():
    L = builtin("sl2")
    assert builtin_polynomial(L, "killing").tensor((0, 2)) == 4
    assert builtin_polynomial(L, "2:0").degree == 2
    with pytest.raises(KeyError):
        builtin_polynomial(L, "mystery")


def test_multiset_mult():
    assert multiset_mult((0, 0, 1)) == 3
    assert multiset_mult((0, 1, 2)) == 6
    assert multiset_mult((2, 2)) == 1


def test_golden_definition_file(tmp_path):
    golden = resources.files("dglakit").joinpath("data/sl2.json").read_text()
    assert dump_lie(builtin("sl2")) == golden
    path = tmp_path / "sl2.json"
    path.write_text(golden)
    L = load_lie_file(path)
    assert L.constants == builtin("sl2").constants
    doc = json.loads(golden)
    doc["brackets"][0][2] = {"e": "-3/1"}
    path.write_text(json.dumps(doc))
    with pytest.raises(LieValidationError):
        load_lie_file(path)


@settings(max_examples=50, deadline=None)
@given(vectors(3), vectors(3), vectors(3))
def test_bracket_antisymmetry_and_jacobi(x, y, z):
    L = builtin("sl2")
    xy, yx = L.bracket(x, y), L.bracket(y, x)
    assert {k: v for k, v in ((k, xy.get(k, 0) + yx.get(k, 0)) for k in set(xy) | set(yx)) if v} == {}
    tot: dict = {}
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        for k, v in L.bracket(a, L.bracket(b, c)).items():
            tot[k] = tot.get(k, 0) + v
    assert not any(tot.values())


@settings(max_examples=50, deadline=None)
@given(vectors(8), vectors(8), vectors(8), vectors(8))
def test_cubic_invariance(x, y, z, w):
    L = builtin("sl3")
    p = trace_cubic(L)
    total = p(L.bracket(w, x), y, z) + p(x, L.bracket(w, y), z) + p(x, y, L.bracket(w, z))
    assert total == 0


@settings(max_examples=50, deadline=None)
@given(vectors(3), vectors(3), vectors(3))
def test_killing_invariance(x, y, z):
    L = builtin("sl2")
    K = killing_form(L)
    assert K(L.bracket(z, x), y) + K(x, L.bracket(z, y)) == 0
    assert K(x, y) == K(y, x)

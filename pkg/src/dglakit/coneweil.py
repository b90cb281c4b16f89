"""The cone Cg, its central extension C_p g, the Weil algebra and the CE algebra."""

from __future__ import annotations

import itertools
from typing import Callable, Mapping, Sequence

from .core import (ONE, CutoffRefused, Dgla, SparseLinearMap, add_into, add_term,
                   cohomology_dim, first_term, koszul, sub)
from .liecore import InvariantError, InvariantPolynomial, LieData


# ---------------------------------------------------------------------------
# free graded-commutative algebras: exterior on odd generators of degree 1,
# polynomial on even generators of degree 2.  Keys are (odd tuple, even tuple),
# both sorted; the odd part is written first.


def _merge_odd(a: tuple, b: tuple):
    """Sign and sorted union of two strictly increasing tuples, or None on overlap."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    sign = 1
    i = j = 0
    na = len(a)
    while i < na and j < len(b):
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        elif a[i] > b[j]:
            out.append(b[j])
            if (na - i) & 1:
                sign = -sign
            j += 1
        else:
            return None
    out.extend(a[i:])
    out.extend(b[j:])
    return sign, tuple(out)


def _merge_even(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


class GCAlgebra:
    """Free graded-commutative algebra with an optional even-degree cutoff."""

    def __init__(self, n_odd: int, n_even: int, odd_names=None, even_names=None,
                 poly_cutoff: int | None = None):
        self.n_odd = n_odd
        self.n_even = n_even
        self.odd_names = tuple(odd_names or (f"u{i}" for i in range(n_odd)))
        self.even_names = tuple(even_names or (f"v{i}" for i in range(n_even)))
        self.poly_cutoff = poly_cutoff
        self.one = ((), ())

    @staticmethod
    def deg(key) -> int:
        return len(key[0]) + 2 * len(key[1])

    def odd(self, i: int) -> dict:
        return {((i,), ()): ONE}

    def even(self, i: int) -> dict:
        return {((), (i,)): ONE}

    def mul_keys(self, k1, k2):
        m = _merge_odd(k1[0], k2[0])
        if m is None:
            return None
        ev = _merge_even(k1[1], k2[1])
        if self.poly_cutoff is not None and len(ev) > self.poly_cutoff:
            raise CutoffRefused(
                f"product exceeds polynomial cutoff {self.poly_cutoff}: {len(ev)}")
        # sign: moving odd part of k2 past even part of k1 is free
        return m[0], (m[1], ev)

    def mul(self, u: Mapping, v: Mapping) -> dict:
        out: dict = {}
        for a, x in u.items():
            for b, y in v.items():
                r = self.mul_keys(a, b)
                if r is not None:
                    add_term(out, r[1], r[0] * x * y)
        return out

    def basis(self, degree: int, max_even: int | None = None) -> list:
        cap = self.poly_cutoff if max_even is None else max_even
        out = []
        for r in range(min(self.n_odd, degree) + 1):
            if (degree - r) % 2:
                continue
            s = (degree - r) // 2
            if cap is not None and s > cap:
                continue
            for od in itertools.combinations(range(self.n_odd), r):
                for ev in itertools.combinations_with_replacement(range(self.n_even), s):
                    out.append((od, ev))
        return out

    def name(self, key) -> str:
        parts = [self.odd_names[i] for i in key[0]] + [self.even_names[i] for i in key[1]]
        return "*".join(parts) if parts else "1"

    def format(self, u: Mapping) -> str:
        if not u:
            return "0"
        return " + ".join(f"({c})*{self.name(k)}" for k, c in sorted(u.items()))


class Derivation:
    """A graded derivation of a GCAlgebra fixed by its values on generators."""

    def __init__(self, alg: GCAlgebra, degree: int, odd_images: Sequence[Mapping],
                 even_images: Sequence[Mapping], name: str = ""):
        self.alg = alg
        self.degree = degree
        self.odd_images = [dict(x) for x in odd_images]
        self.even_images = [dict(x) for x in even_images]
        self.name = name
        self._cache: dict = {}

    def on_key(self, key) -> dict:
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        alg = self.alg
        od, ev = key
        out: dict = {}
        par = self.degree & 1
        for i, a in enumerate(od):
            img = self.odd_images[a]
            if not img:
                continue
            sign = -1 if (par and (i & 1)) else 1
            left = {(od[:i], ()): ONE}
            right = {(od[i + 1:], ev): ONE}
            add_into(out, alg.mul(alg.mul(left, img), right), sign)
        if ev:
            sign = -1 if (par and (len(od) & 1)) else 1
            left = {(od, ()): ONE}
            prev = None
            for j, b in enumerate(ev):
                if b == prev:
                    continue
                prev = b
                img = self.even_images[b]
                if not img:
                    continue
                mult = ev.count(b)
                rest = ev[:j] + ev[j + 1:]
                add_into(out, alg.mul(alg.mul(left, img), {((), rest): ONE}), sign * mult)
        self._cache[key] = out
        return out

    def __call__(self, u: Mapping) -> dict:
        out: dict = {}
        for k, c in u.items():
            add_into(out, self.on_key(k), c)
        return out


def commutator(A: Callable, degA: int, B: Callable, degB: int) -> Callable:
    s = koszul(degA, degB)

    def op(u):
        out = A(B(u))
        add_into(out, B(A(u)), -s)
        return out
    return op


# ---------------------------------------------------------------------------
# g-differential spaces


class GDifferentialSpace:
    """A complex with operators I(a) (degree -1) and L(a) (degree 0).

    ``basis(k)`` lists basis keys in degree k; ``degrees`` is the range that
    verification sweeps cover.
    """

    def __init__(self, lie: LieData, basis: Callable, d: Callable, contraction: Sequence,
                 lie_derivative: Sequence, degrees: Sequence[int], name: str = ""):
        self.lie = lie
        self.basis = basis
        self.d = d
        self.I = list(contraction)
        self.L = list(lie_derivative)
        self.degrees = tuple(degrees)
        self.name = name


def check_g_differential_space(V: GDifferentialSpace) -> tuple[bool, str | None]:
    """Verify all Cg-module relations on the basis in V.degrees."""
    lie = V.lie
    n = lie.dim

    for k in V.degrees:
        for key in V.basis(k):
            u = {key: ONE}
            du = V.d(u)
            r = V.d(du)
            if r:
                return False, f"d^2 != 0 on {key}: {first_term(r)}"
            for a in range(n):
                Ia, La = V.I[a], V.L[a]
                cart = V.d(Ia(u))
                add_into(cart, Ia(du))
                r = sub(cart, La(u))
                if r:
                    return False, f"[d,I({a})] != L({a}) on {key}: {first_term(r)}"
                r = sub(V.d(La(u)), La(du))
                if r:
                    return False, f"[d,L({a})] != 0 on {key}: {first_term(r)}"
                for b in range(n):
                    Ib, Lb = V.I[b], V.L[b]
                    r = add_into(Ia(Ib(u)), Ib(Ia(u)))
                    if r:
                        return False, f"[I({a}),I({b})] != 0 on {key}: {first_term(r)}"
                    br = lie.bracket_basis(a, b)
                    lhs = sub(La(Ib(u)), Ib(La(u)))
                    rhs: dict = {}
                    for c, v in br.items():
                        add_into(rhs, V.I[c](u), v)
                    r = sub(lhs, rhs)
                    if r:
                        return False, f"[L({a}),I({b})] != I([{a},{b}]) on {key}: {first_term(r)}"
                    lhs = sub(La(Lb(u)), Lb(La(u)))
                    rhs = {}
                    for c, v in br.items():
                        add_into(rhs, V.L[c](u), v)
                    r = sub(lhs, rhs)
                    if r:
                        return False, f"[L({a}),L({b})] != L([{a},{b}]) on {key}: {first_term(r)}"
    return True, None


# ---------------------------------------------------------------------------
# Weil algebra


class WeilAlgebra:
    """Wg = S(g*) (x) ^(g*), generators theta^a in degree 1 and t^a in degree 2."""

    def __init__(self, lie: LieData, poly_cutoff: int | None = None):
        if poly_cutoff is not None and poly_cutoff < 1:
            raise ValueError("poly_cutoff must be at least 1")
        self.lie = lie
        n = lie.dim
        self.poly_cutoff = poly_cutoff
        names = lie.basis_names
        self.alg = GCAlgebra(n, n, [f"theta[{x}]" for x in names], [f"t[{x}]" for x in names],
                             poly_cutoff)
        alg = self.alg
        f = lie.f
        d_odd, d_even, I_list, L_list = [], [], [], []
        for a in range(n):
            img = dict(alg.even(a))
            for b in range(n):
                for c in range(b + 1, n):
                    # -1/2 f^a_bc theta^b theta^c summed over ordered pairs
                    v = f(a, b, c)
                    if v:
                        add_term(img, ((b, c), ()), -v)
            d_odd.append(img)
            img = {}
            for b in range(n):
                for c in range(n):
                    v = f(a, b, c)
                    if v:
                        add_term(img, ((b,), (c,)), -v)
            d_even.append(img)
        self.d = Derivation(alg, 1, d_odd, d_even, "d_W")
        for a in range(n):
            I_list.append(Derivation(alg, -1, [{alg.one: ONE} if b == a else {} for b in range(n)],
                                     [{} for _ in range(n)], f"I_W({a})"))
            co_odd, co_even = [], []
            for b in range(n):
                o, e = {}, {}
                for c in range(n):
                    v = f(b, a, c)
                    if v:
                        o[((c,), ())] = -v
                        e[((), (c,))] = -v
                co_odd.append(o)
                co_even.append(e)
            L_list.append(Derivation(alg, 0, co_odd, co_even, f"L_W({a})"))
        self.I = I_list
        self.L = L_list

    def theta(self, a: int) -> dict:
        return self.alg.odd(a)

    def t(self, a: int) -> dict:
        return self.alg.even(a)

    def mul(self, u, v) -> dict:
        return self.alg.mul(u, v)

    def basis(self, degree: int) -> list:
        return self.alg.basis(degree)

    def bracket_theta_theta(self) -> list[dict]:
        """Components of [theta,theta] = f^c_ab theta^a theta^b e_c."""
        n = self.lie.dim
        out = []
        for c in range(n):
            v: dict = {}
            for a in range(n):
                for b in range(a + 1, n):
                    x = self.lie.f(c, a, b)
                    if x:
                        add_term(v, ((a, b), ()), 2 * x)
            out.append(v)
        return out

    def poly_element(self, p: InvariantPolynomial, even_offset: int = 0) -> dict:
        """p(t,...,t) as an element of the polynomial part."""
        out: dict = {}
        for m, c in p.coeffs.items():
            add_term(out, ((), tuple(i + even_offset for i in m)), c)
        return out

    def g_space(self, degrees: Sequence[int]) -> GDifferentialSpace:
        return GDifferentialSpace(self.lie, self.basis, self.d, self.I, self.L, degrees,
                                  f"W({self.lie.name})")

    def verify(self) -> list[tuple[str, bool, str | None]]:
        """Generator-level checks: d^2=0, Bianchi identity, Cartan relations."""
        out = []
        n = self.lie.dim
        bad = None
        for a in range(n):
            r = self.d(self.d(self.theta(a)))
            if r:
                bad = f"d^2 theta[{a}] = {first_term(r)}"
                break
        out.append(("weil d^2=0 on theta", bad is None, bad))
        bad = None
        for a in range(n):
            lhs = self.d(self.t(a))
            for b in range(n):
                for c in range(n):
                    v = self.lie.f(a, b, c)
                    if v:
                        add_term(lhs, ((b,), (c,)), v)
            if lhs:
                bad = f"bianchi a={a}: {first_term(lhs)}"
                break
            r = self.d(self.d(self.t(a)))
            if r:
                bad = f"d^2 t[{a}] = {first_term(r)}"
                break
        out.append(("weil bianchi dt = -f theta t", bad is None, bad))
        degs = range(0, 4) if self.poly_cutoff is None or self.poly_cutoff >= 2 else range(0, 2)
        ok, w = check_g_differential_space(self.g_space([k for k in degs]))
        out.append(("weil g-differential algebra", ok, w))
        return out


def build_weil(lie: LieData, poly_cutoff: int = 4) -> WeilAlgebra:
    W = WeilAlgebra(lie, poly_cutoff)
    for name, ok, w in W.verify():
        if not ok:
            raise AssertionError(f"{name}: {w}")
    return W


# ---------------------------------------------------------------------------
# Chevalley-Eilenberg algebra


class CeAlgebra:
    """The exterior algebra on g* with the CE differential and Cartan operators."""

    def __init__(self, lie: LieData):
        self.lie = lie
        n = lie.dim
        self.alg = GCAlgebra(n, 0, [f"theta[{x}]" for x in lie.basis_names], [])
        alg = self.alg
        d_odd = []
        for a in range(n):
            img: dict = {}
            for b in range(n):
                for c in range(b + 1, n):
                    v = lie.f(a, b, c)
                    if v:
                        add_term(img, ((b, c), ()), -v)
            d_odd.append(img)
        self.d = Derivation(alg, 1, d_odd, [], "d_CE")
        self.I = [Derivation(alg, -1, [{alg.one: ONE} if b == a else {} for b in range(n)], [],
                             f"I({a})") for a in range(n)]
        self.L = []
        for a in range(n):
            co = []
            for b in range(n):
                co.append({((c,), ()): -lie.f(b, a, c) for c in range(n) if lie.f(b, a, c)})
            self.L.append(Derivation(alg, 0, co, [], f"L({a})"))

    def basis(self, degree: int) -> list:
        return self.alg.basis(degree)

    def g_space(self) -> GDifferentialSpace:
        return GDifferentialSpace(self.lie, self.basis, self.d, self.I, self.L,
                                  range(self.lie.dim + 1), f"CE({self.lie.name})")

    def cohomology(self) -> list[int]:
        n = self.lie.dim
        out = []
        for k in range(n + 1):
            d_in = (SparseLinearMap.from_operator(self.d, [{b: ONE} for b in self.basis(k - 1)], 1,
                                                  k - 1) if k > 0 else
                    SparseLinearMap((), (), 1, k - 1, self.d))
            d_out = SparseLinearMap.from_operator(self.d, [{b: ONE} for b in self.basis(k)], 1, k)
            out.append(cohomology_dim(d_in, d_out))
        return out


# ---------------------------------------------------------------------------
# the cone and its central extension


class ConeAlgebra(Dgla):
    """Cg with L(x) in degree 0 and I(x) in degree -1; keys ('L',a), ('I',a)."""

    def __init__(self, lie: LieData):
        self.lie = lie
        self.name = f"C({lie.name})"

    def deg(self, key) -> int:
        return {"L": 0, "I": -1, "c": -2}[key[0]]

    def bracket_keys(self, a, b) -> dict:
        ta, tb = a[0], b[0]
        if ta == "L" and tb in ("L", "I"):
            return {(tb, c): v for c, v in self.lie.bracket_basis(a[1], b[1]).items()}
        if ta == "I" and tb == "L":
            # [I(x),L(y)] = -[L(y),I(x)]
            return {("I", c): -v for c, v in self.lie.bracket_basis(b[1], a[1]).items()}
        return {}

    def d_key(self, a) -> dict:
        if a[0] == "I":
            return {("L", a[1]): ONE}
        return {}

    def keys(self) -> list:
        n = self.lie.dim
        return [("L", a) for a in range(n)] + [("I", a) for a in range(n)]

    def basis(self, degree: int) -> list[dict]:
        return [{k: ONE} for k in self.keys() if self.deg(k) == degree]


class ConePExtension(ConeAlgebra):
    """C_p g: adds a central c in degree -2 with [I(x),I(y)] = -2 p(x,y) c."""

    def __init__(self, lie: LieData, p: InvariantPolynomial):
        super().__init__(lie)
        if p.degree != 2:
            raise ValueError("C_p g needs a quadratic invariant")
        if p.invariance_residual() is not None:
            raise InvariantError(f"p is not invariant: {p.invariance_residual()}")
        self.p = p
        self.name = f"C_p({lie.name})"

    def bracket_keys(self, a, b) -> dict:
        if a[0] == "I" and b[0] == "I":
            v = -2 * self.p.tensor((a[1], b[1]))
            return {("c",): v} if v else {}
        return super().bracket_keys(a, b)

    def keys(self) -> list:
        return super().keys() + [("c",)]


def build_cone(lie: LieData) -> ConeAlgebra:
    C = ConeAlgebra(lie)
    _verify_cone(C)
    return C


def build_cone_p(lie: LieData, p: InvariantPolynomial) -> ConePExtension:
    C = ConePExtension(lie, p)
    from .core import dgla_residuals
    bad = next(dgla_residuals(C, [{k: ONE} for k in C.keys()]), None)
    if bad is not None:
        raise AssertionError(f"C_p g fails {bad}")
    return C


def _verify_cone(C: ConeAlgebra) -> None:
    from .core import dgla_residuals
    n = C.lie.dim
    for a in range(n):
        if C.d({("I", a): ONE}) != {("L", a): ONE} or C.d({("L", a): ONE}):
            raise AssertionError("cone differential relations")
        for b in range(n):
            if C.bracket({("I", a): ONE}, {("I", b): ONE}):
                raise AssertionError("[I,I] != 0")
    bad = next(dgla_residuals(C, [{k: ONE} for k in C.keys()]), None)
    if bad is not None:
        raise AssertionError(f"Cg fails {bad}")


def cone_cohomology(C: ConeAlgebra) -> dict[int, int]:
    out = {}
    for k in (-1, 0):
        dom_in = C.basis(k - 1)
        d_in = SparseLinearMap.from_operator(C.d, dom_in, 1, k - 1)
        d_out = SparseLinearMap.from_operator(C.d, C.basis(k), 1, k)
        out[k] = cohomology_dim(d_in, d_out)
    return out

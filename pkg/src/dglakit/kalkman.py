"""Tensor DGLAs over the Weil algebra, group-like elements and the Kalkman machinery.

Elements of Wg (x) U(A') are dicts keyed by (wkey, word, marker): wkey a Weil
monomial, word a basis word of the enveloping algebra of the negative part
A', and marker either None or a trailing ('l', a) / ('c', j) factor, which
only appears in d of an element and is pushed to the right end.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .core import (ONE, ZERO, Q, CutoffRefused, Dgla, SparseLinearMap, add_into,
                   add_term, cohomology_dim, first_term, independent_subset, kernel, koszul, scaled, solve_columns,
                   sub)
from .coneweil import (CeAlgebra, Derivation, GCAlgebra, GDifferentialSpace,
                       WeilAlgebra, _merge_odd, check_g_differential_space)
from .dmodel import DgAlgebra
from .liecore import InvariantPolynomial, LieData, multiset_mult, multisets


# ---------------------------------------------------------------------------
# tensor DGLAs


class TensorDgla(Dgla):
    """Wg (x) A with d = d_W + d_A and the bracket extended over Wg with Koszul signs.

    ``max_weil_degree`` drops all terms whose Weil degree exceeds it.
    """

    def __init__(self, W: WeilAlgebra, A: Dgla, max_weil_degree: int | None = None):
        self.W = W
        self.A = A
        self.max_wdeg = max_weil_degree
        self.name = f"W({W.lie.name}) x {A.name}"

    def deg(self, key) -> int:
        return GCAlgebra.deg(key[0]) + self.A.deg(key[1])

    def _keep(self, wkey) -> bool:
        return self.max_wdeg is None or GCAlgebra.deg(wkey) <= self.max_wdeg

    def bracket(self, u: Mapping, v: Mapping) -> dict:
        out: dict = {}
        mx = self.max_wdeg
        for (w1, a1), x in u.items():
            d1 = GCAlgebra.deg(w1)
            da1 = self.A.deg(a1)
            for (w2, a2), y in v.items():
                d2 = GCAlgebra.deg(w2)
                if mx is not None and d1 + d2 > mx:
                    continue
                r = self.W.alg.mul_keys(w1, w2)
                if r is None:
                    continue
                br = self.A.bracket_keys(a1, a2)
                if not br:
                    continue
                s = r[0] * koszul(da1, d2) * x * y
                for a, c in br.items():
                    add_term(out, (r[1], a), s * c)
        return out

    def d(self, u: Mapping) -> dict:
        out: dict = {}
        groups: dict = {}
        for (w, a), c in u.items():
            groups.setdefault(w, {})[a] = c
            for w2, c2 in self.W.d.on_key(w).items():
                if self._keep(w2):
                    add_term(out, (w2, a), c * c2)
        for w, part in groups.items():
            s = koszul(GCAlgebra.deg(w), 1)
            for a, c in self.A.d(part).items():
                add_term(out, (w, a), s * c)
        return out


def mc_check(T: TensorDgla, elem: Mapping) -> tuple[bool, dict]:
    """Residual d(x) - [x,x]/2 of a degree-1 element."""
    degs = {T.deg(k) for k in elem}
    if degs and degs != {1}:
        raise ValueError(f"Maurer-Cartan check needs a degree-1 element, got degrees {degs}")
    res = T.d(elem)
    add_into(res, T.bracket(elem, elem), -Q(1, 2))
    return not res, res


def cone_mc_element(W: WeilAlgebra) -> dict:
    """I(t) - L(theta) in Wg (x) Cg."""
    out = {}
    for a in range(W.lie.dim):
        out[(((), (a,)), ("I", a))] = ONE
        out[(((a,), ()), ("L", a))] = -ONE
    return out


def dg_mc_element(W: WeilAlgebra, D: DgAlgebra, max_weil_degree: int) -> dict:
    """i(t) - l(theta) in Wg (x) Dg, layers with Weil degree <= max_weil_degree."""
    out = {}
    for m in D.letters:
        if 2 * len(m) > max_weil_degree:
            continue
        out[(((), m), ("w", (D.letter_index[m],)))] = Q(multiset_mult(m))
    for a in range(W.lie.dim):
        out[(((a,), ()), ("l", a))] = -ONE
    return out


# ---------------------------------------------------------------------------
# models of U(A') for A' the negative part of Cg or Dg


class ConeWords:
    """U((Cg)^{<0}) = exterior algebra on I(e_a); words are sorted tuples."""

    def __init__(self, lie: LieData):
        self.lie = lie
        self.n_letters = lie.dim

    def layer(self, letter) -> int:
        return 1

    def letter_deg(self, letter) -> int:
        return -1

    def word_deg(self, w) -> int:
        return -len(w)

    def word_mul(self, u: tuple, v: tuple):
        return _merge_odd(u, v)

    def single(self, a: int) -> tuple:
        return (a,)

    def ad_word(self, a: int, w: tuple) -> dict:
        out: dict = {}
        for j, b in enumerate(w):
            for c, v in self.lie.bracket_basis(a, b).items():
                r = _sort_odd(w[:j] + (c,) + w[j + 1:])
                if r is not None:
                    add_term(out, r[1], r[0] * v)
        return out

    def d_word(self, w: tuple) -> dict:
        out: dict = {}
        for i, a in enumerate(w):
            sign = -1 if i & 1 else 1
            pre, post = w[:i], w[i + 1:]
            add_term(out, ("lt", pre + post, a), sign)
            for w2, v in self.ad_word(a, post).items():
                r = _merge_odd(pre, w2)
                if r is not None:
                    add_term(out, ("w", r[1]), sign * r[0] * v)
        return out

    def letter_name(self, letter) -> str:
        return f"I({self.lie.basis_names[letter]})"


def _sort_odd(w: tuple):
    """Sign and sorted form of a product of odd letters, or None if a letter repeats."""
    if len(set(w)) < len(w):
        return None
    sign = 1
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            if w[i] > w[j]:
                sign = -sign
    return sign, tuple(sorted(w))


class DgWords:
    """U(L(S+g)) = T(S+g); words are tuples of letter indices of a DgAlgebra."""

    def __init__(self, D: DgAlgebra):
        self.D = D
        self.lie = D.lie
        self.n_letters = len(D.letters)

    def layer(self, letter) -> int:
        return len(self.D.letters[letter])

    def letter_deg(self, letter) -> int:
        return self.D.letter_deg[letter]

    def word_deg(self, w) -> int:
        return self.D.word_degree(w)

    def word_mul(self, u: tuple, v: tuple):
        return 1, u + v

    def single(self, a: int) -> tuple:
        return (self.D.letter_index[(a,)],)

    def ad_word(self, a: int, w: tuple) -> dict:
        return self.D._ad_word(a, w)

    def d_word(self, w: tuple) -> dict:
        return self.D._d_word(w)

    def letter_name(self, letter) -> str:
        return self.D.fla.names[letter]


# ---------------------------------------------------------------------------
# arithmetic in Wg (x) U(A')


class WU:
    """Arithmetic on dicts (wkey, word, marker) -> coefficient in Wg (x) U(A')."""

    def __init__(self, W: WeilAlgebra, words, max_layer: int):
        self.W = W
        self.words = words
        self.max_layer = max_layer

    @staticmethod
    def layer(key) -> int:
        return GCAlgebra.deg(key[0])

    def one(self) -> dict:
        return {(((), ()), (), None): ONE}

    def mul(self, X: Mapping, Y: Mapping) -> dict:
        out: dict = {}
        mx = self.max_layer
        alg = self.W.alg
        wd = self.words.word_deg
        wm = self.words.word_mul
        for (w1, u1, m1), x in X.items():
            if m1 is not None:
                raise ValueError("left factor carries a trailing marker")
            l1 = GCAlgebra.deg(w1)
            du1 = wd(u1) & 1
            for (w2, u2, m2), y in Y.items():
                l2 = GCAlgebra.deg(w2)
                if l1 + l2 > mx:
                    continue
                r = alg.mul_keys(w1, w2)
                if r is None:
                    continue
                r2 = wm(u1, u2)
                if r2 is None:
                    continue
                s = r[0] * r2[0]
                if du1 and (l2 & 1):
                    s = -s
                add_term(out, (r[1], r2[1], m2), s * x * y)
        return out

    def truncate(self, X: Mapping, layer: int | None = None) -> dict:
        mx = self.max_layer if layer is None else layer
        return {k: v for k, v in X.items() if GCAlgebra.deg(k[0]) <= mx}

    def inverse(self, X: Mapping) -> dict:
        """Inverse of an element with constant term 1, as the series sum (1 - X)^k."""
        one = self.one()
        if X.get(next(iter(one))) != ONE:
            raise ValueError("element is not invertible: constant term must be 1")
        N = sub(one, X)
        out = dict(one)
        power = dict(one)
        for _ in range(self.max_layer + 1):
            power = self.mul(power, N)
            if not power:
                break
            add_into(out, power)
        return out

    def d(self, X: Mapping) -> dict:
        """d_W (x) 1 + (-1)^|w| 1 (x) d_U, with l and c factors pushed right."""
        out: dict = {}
        mx = self.max_layer
        for (w, u, m), c in X.items():
            if m is not None:
                raise ValueError("cannot differentiate an element with a trailing marker")
            lw = GCAlgebra.deg(w)
            if lw + 1 <= mx:
                for w2, c2 in self.W.d.on_key(w).items():
                    add_term(out, (w2, u, None), c * c2)
            sign = -1 if lw & 1 else 1
            for key, c2 in self.words.d_word(u).items():
                t = key[0]
                if t == "w":
                    add_term(out, (w, key[1], None), sign * c * c2)
                elif t == "lt":
                    add_term(out, (w, key[1], ("l", key[2])), sign * c * c2)
                else:
                    add_term(out, (w, key[1], ("c", key[2])), sign * c * c2)
        return out

    def weil_apply(self, op: Callable, X: Mapping) -> dict:
        """Apply a Weil operator to the coefficients (I_W(x), L_W(x), ...)."""
        out: dict = {}
        for (w, u, m), c in X.items():
            for w2, c2 in op({w: ONE}).items():
                add_term(out, (w2, u, m), c * c2)
        return out

    def ad(self, a: int, X: Mapping) -> dict:
        out: dict = {}
        for (w, u, m), c in X.items():
            for u2, c2 in self.words.ad_word(a, u).items():
                add_term(out, (w, u2, m), c * c2)
        return out

    def coproduct(self, X: Mapping) -> dict:
        """1 (x) Delta on the U factor, keyed (wkey, word1, word2)."""
        out: dict = {}
        wd = self.words.letter_deg
        for (w, u, m), c in X.items():
            n = len(u)
            for r in range(n + 1):
                for S in itertools.combinations(range(n), r):
                    Sc = tuple(i for i in range(n) if i not in S)
                    # Koszul sign of moving the letters in S to the front
                    sign = 1
                    for i in S:
                        if not (wd(u[i]) & 1):
                            continue
                        for j in Sc:
                            if j < i and (wd(u[j]) & 1):
                                sign = -sign
                    add_term(out, (w, tuple(u[i] for i in S), tuple(u[j] for j in Sc)),
                             sign * c)
        return out

    def tensor_square(self, X: Mapping) -> dict:
        """X (x) X over Wg, keyed (wkey, word1, word2), layers <= max_layer."""
        out: dict = {}
        alg = self.W.alg
        wd = self.words.word_deg
        mx = self.max_layer
        for (w1, u1, _), x in X.items():
            l1 = GCAlgebra.deg(w1)
            for (w2, u2, _), y in X.items():
                l2 = GCAlgebra.deg(w2)
                if l1 + l2 > mx:
                    continue
                r = alg.mul_keys(w1, w2)
                if r is None:
                    continue
                s = r[0]
                if (wd(u1) & 1) and (l2 & 1):
                    s = -s
                add_term(out, (r[1], u1, u2), s * x * y)
        return out

    def format(self, X: Mapping) -> str:
        parts = []
        for (w, u, m), c in sorted(X.items(), key=lambda kv: (GCAlgebra.deg(kv[0][0]),
                                                                 repr(kv[0]))):
            word = "".join(self.words.letter_name(i) for i in u) or "1"
            tail = "" if m is None else f"*{m[0]}{m[1]}"
            parts.append(f"({c})*{self.W.alg.name(w)}*{word}{tail}")
        return " + ".join(parts) if parts else "0"


@dataclass
class GroupLikeElement:
    """A truncated degree-zero group-like element of Wg (x) U(A')."""

    ring: WU
    terms: dict
    max_layer: int
    name: str = ""
    notes: dict = field(default_factory=dict)

    def layer_part(self, k: int) -> dict:
        return {key: c for key, c in self.terms.items() if GCAlgebra.deg(key[0]) == k}

    def inverse(self) -> dict:
        return self.ring.inverse(self.terms)

    def maurer_cartan_form(self) -> dict:
        """X^{-1} dX up to the truncation layer."""
        R = self.ring
        return R.truncate(R.mul(self.inverse(), R.d(self.terms)))

    def group_like_residual(self) -> dict:
        R = self.ring
        return sub(R.coproduct(self.terms), R.tensor_square(self.terms))

    def invariance_residual(self) -> tuple | None:
        R = self.ring
        for a in range(R.W.lie.dim):
            r = R.weil_apply(R.W.L[a], self.terms)
            add_into(r, R.ad(a, self.terms))
            if r:
                return a, first_term(r)
        return None

    def counit(self):
        return self.terms.get((((), ()), (), None), ZERO)


def expected_maurer_cartan_form(R: WU) -> dict:
    """-i(t) + l(theta) (or -I(t) + L(theta) for the cone) within the truncation."""
    out: dict = {}
    W = R.W
    words = R.words
    n = W.lie.dim
    if isinstance(words, ConeWords):
        for a in range(n):
            if 2 <= R.max_layer:
                out[(((), (a,)), (a,), None)] = -ONE
    else:
        D = words.D
        for m in D.letters:
            if 2 * len(m) <= R.max_layer:
                out[(((), m), (D.letter_index[m],), None)] = -Q(multiset_mult(m))
    for a in range(n):
        out[(((a,), ()), (), ("l", a))] = ONE
    return out


def _check_identity(G: GroupLikeElement, strict_layers: int | None = None) -> tuple | None:
    got = G.maurer_cartan_form()
    want = expected_maurer_cartan_form(G.ring)
    r = sub(got, want)
    if strict_layers is not None:
        r = {k: v for k, v in r.items() if GCAlgebra.deg(k[0]) <= strict_layers}
    if r:
        k = min(r, key=lambda kk: (GCAlgebra.deg(kk[0]), repr(kk)))
        return GCAlgebra.deg(k[0]), k, r[k]
    return None


def phi_cone(lie: LieData, verify: bool = True) -> GroupLikeElement:
    """phi = exp(-I(theta)) in Wg (x) U(Cg); a finite sum."""
    n = lie.dim
    W = WeilAlgebra(lie, poly_cutoff=2)
    R = WU(W, ConeWords(lie), n + 1)
    a = {(((b,), ()), (b,), None): -ONE for b in range(n)}
    out = R.one()
    power = R.one()
    for k in range(1, n + 1):
        power = R.mul(power, a)
        add_into(out, power, Q(1, _fact(k)))
    G = GroupLikeElement(R, out, n + 1, f"phi({lie.name})")
    if verify:
        bad = _check_identity(G)
        if bad is not None:
            raise AssertionError(f"phi^-1 d phi != -I(t)+L(theta): layer {bad[0]}, {bad[1:]}")
        r = G.group_like_residual()
        if r:
            raise AssertionError(f"phi is not group-like: {first_term(r)}")
    return G


def _fact(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


# ---------------------------------------------------------------------------
# the holonomy construction of Phi


def _ws_mul(alg: GCAlgebra, u: Mapping, v: Mapping) -> dict:
    """Product in Wg[s]; keys (wkey, power of s)."""
    out: dict = {}
    for (w1, p1), x in u.items():
        for (w2, p2), y in v.items():
            r = alg.mul_keys(w1, w2)
            if r is not None:
                add_term(out, (r[1], p1 + p2), r[0] * x * y)
    return out


def connection_form(W: WeilAlgebra, D: DgAlgebra, max_layer: int) -> dict:
    """b(s) = -<d i(s t + (s^2-s)/2 [theta,theta]), theta>, keyed (wkey, word, power of s)."""
    lie = W.lie
    n = lie.dim
    alg = W.alg
    half = Q(1, 2)
    tt = W.bracket_theta_theta()
    xs = []
    for c in range(n):
        v: dict = {(((), (c,)), 1): ONE}
        for wk, coef in tt[c].items():
            add_term(v, (wk, 2), half * coef)
            add_term(v, (wk, 1), -half * coef)
        xs.append(v)
    powers: dict = {(): {(((), ()), 0): ONE}}

    def monomial(m: tuple) -> dict:
        if m in powers:
            return powers[m]
        r = _ws_mul(alg, monomial(m[:-1]), xs[m[-1]])
        powers[m] = r
        return r

    out: dict = {}
    for m in D.letters:
        k = len(m)
        if 2 * k - 1 > max_layer:
            continue
        letter = (D.letter_index[m],)
        mult = Q(multiset_mult(m))
        seen = set()
        for j, c in enumerate(m):
            if c in seen:
                continue
            seen.add(c)
            rest = m[:j] + m[j + 1:]
            cnt = m.count(c)
            term = _ws_mul(alg, monomial(rest), {(((c,), ()), 0): ONE})
            for (wk, sp), v in term.items():
                add_term(out, (wk, letter, sp), -mult * cnt * v)
    return out


def _holonomy(W: WeilAlgebra, words: DgWords, b: Mapping, max_layer: int, right: bool) -> dict:
    """Solve dPhi/ds = Phi b (right) or b Phi (left), Phi(0) = 1, layer by layer; return Phi(1)."""
    alg = W.alg
    wd = words.word_deg
    by_layer: dict[int, dict] = {0: {(((), ()), (), 0): ONE}}
    b_layers: dict[int, dict] = {}
    for key, v in b.items():
        b_layers.setdefault(GCAlgebra.deg(key[0]), {})[key] = v

    def mul(X, Y):
        out: dict = {}
        for (w1, u1, p1), x in X.items():
            du1 = wd(u1) & 1
            for (w2, u2, p2), y in Y.items():
                r = alg.mul_keys(w1, w2)
                if r is None:
                    continue
                s = r[0]
                if du1 and (GCAlgebra.deg(w2) & 1):
                    s = -s
                add_term(out, (r[1], u1 + u2, p1 + p2), s * x * y)
        return out

    for K in range(1, max_layer + 1):
        acc: dict = {}
        for j, bj in b_layers.items():
            if j > K or (K - j) not in by_layer:
                continue
            prev = by_layer[K - j]
            add_into(acc, mul(prev, bj) if right else mul(bj, prev))
        by_layer[K] = {(w, u, p + 1): v / (p + 1) for (w, u, p), v in acc.items()}
    out: dict = {}
    for part in by_layer.values():
        for (w, u, p), v in part.items():
            add_term(out, (w, u, None), v)
    return out


def phi_big(D: DgAlgebra, max_layer: int, verify: bool = True) -> GroupLikeElement:
    """Phi in Wg (x) U(L(S+g)) to the given Weil-degree layer, by parallel transport.

    Both composition orders of the path-ordered exponential are tried; the
    one satisfying Phi^{-1} dPhi = -i(t) + l(theta) is kept and recorded in
    ``notes['orientation']``.
    """
    if max_layer < 2:
        raise CutoffRefused("Phi needs at least two layers")
    if max_layer > D.cutoff:
        raise CutoffRefused(f"layer {max_layer} needs Dg down to degree -{max_layer}, "
                            f"cutoff is -{D.cutoff}")
    W = WeilAlgebra(D.lie, poly_cutoff=max_layer // 2 + 1)
    words = DgWords(D)
    R = WU(W, words, max_layer)
    b = connection_form(W, D, max_layer)
    tried = []
    for right in (True, False):
        terms = _holonomy(W, words, b, max_layer, right)
        G = GroupLikeElement(R, terms, max_layer, f"Phi({D.lie.name})",
                             {"orientation": "dPhi/ds = Phi b" if right else "dPhi/ds = b Phi"})
        if not verify:
            return G
        bad = _check_identity(G)
        if bad is None:
            G.notes["rejected"] = tried
            return G
        tried.append((G.notes["orientation"], bad[0]))
    raise AssertionError(f"no orientation satisfies Phi^-1 dPhi = -i(t)+l(theta): {tried}")


def phi_low_degree_expansion(D: DgAlgebra, R: WU) -> dict:
    """exp(-I(theta)) - I(t theta - 1/6 [theta,theta] theta), layers <= 3."""
    W = R.W
    n = W.lie.dim
    a = {(((b,), ()), (D.letter_index[(b,)],), None): -ONE for b in range(n)}
    out = R.one()
    power = R.one()
    for k in range(1, 4):
        power = R.truncate(R.mul(power, a), 3)
        add_into(out, power, Q(1, _fact(k)))
    # I(t theta) = sum t^a theta^b I(e_a e_b)
    tt = W.bracket_theta_theta()
    for x in range(n):
        for y in range(n):
            m = tuple(sorted((x, y)))
            letter = (D.letter_index[m],)
            r = W.alg.mul_keys(((), (x,)), ((y,), ()))
            add_term(out, (r[1], letter, None), -r[0])
            for wk, c in tt[x].items():
                r = W.alg.mul_keys(wk, ((y,), ()))
                if r is not None:
                    add_term(out, (r[1], letter, None), Q(1, 6) * r[0] * c)
    return out


def project_to_cone(G: GroupLikeElement, lie: LieData) -> dict:
    """Image of an element of Wg (x) T(S+g) in Wg (x) U(Cg): I(x) -> I(x), higher letters -> 0."""
    D = G.ring.words.D
    out: dict = {}
    for (w, u, m), c in G.terms.items():
        lets = []
        ok = True
        for i in u:
            mm = D.letters[i]
            if len(mm) != 1:
                ok = False
                break
            lets.append(mm[0])
        if not ok:
            continue
        word: tuple = ()
        sign = 1
        for a in lets:
            r = _merge_odd(word, (a,))
            if r is None:
                ok = False
                break
            sign *= r[0]
            word = r[1]
        if ok:
            add_term(out, (w, word, m), sign * c)
    return out


# ---------------------------------------------------------------------------
# transgression


def invariant_subspace(ops: Sequence[Callable], basis: Sequence, lie: LieData,
                       weight_of: Callable | None = None) -> list[dict]:
    """Joint kernel of the operators on span(basis); basis vectors are keys."""
    cands = list(basis)
    if weight_of is not None:
        cands = [k for k in cands if weight_of(k) == 0]
    images = []
    for k in cands:
        col: dict = {}
        u = {k: ONE}
        for i, op in enumerate(ops):
            for kk, v in op(u).items():
                col[(i, kk)] = v
        images.append(col)
    out = []
    for vec in kernel(images):
        out.append({cands[j]: c for j, c in sorted(vec.items())})
    return out


def weight_function(lie: LieData) -> Callable | None:
    """Weight of a GCA monomial under the diagonal elements of the adjoint action.

    Every generator with index i is assumed to transform like the dual basis
    vector i mod dim g.  Returns None when no basis element acts diagonally.
    """
    diag = lie.diagonal_elements()
    if not diag:
        return None
    n = lie.dim
    co = []
    for a, eig in diag:
        # coadjoint on dual basis: L(e_a) theta^b = -f^b_{ad} theta^d; diagonal => -eig[b]
        co.append([-e for e in eig])

    def weight(key) -> tuple | int:
        w = []
        for vals in co:
            s = ZERO
            for i in key[0]:
                s += vals[i % n]
            for i in key[1]:
                s += vals[i % n]
            w.append(s)
        return 0 if all(x == 0 for x in w) else tuple(w)
    return weight


@dataclass
class TransgressionChain:
    """e in (Wg)^g of degree 2n-1 with d_W e = sign * p, and eta_p = e(theta, 0)."""

    p: InvariantPolynomial
    e: dict
    sign: int
    method: str
    eta: dict
    notes: dict = field(default_factory=dict)


def _restrict_theta(e: Mapping) -> dict:
    return {k: v for k, v in e.items() if not k[1]}


def transgress_solve(lie: LieData, p: InvariantPolynomial, method: str = "linear_solve",
                     sign: int = 1, full: bool = False) -> TransgressionChain:
    """Find an invariant primitive of sign * p(t,...,t) in the Weil algebra."""
    n = p.degree
    W = WeilAlgebra(lie, poly_cutoff=n + 1)
    target = scaled(W.poly_element(p), sign)
    if method == "linear_solve":
        e = solve_invariant_primitive(W, target, 2 * n - 1)
        if e is None:
            raise AssertionError("no invariant primitive found; p must not be invariant")
        notes = {}
    elif method == "via_phi_p":
        from .dmodel import d_p
        Dp = d_p(lie, p, 2 * n - 1, verify=False)
        e, notes = _e_from_phi_p(Dp, 2 * n - 1, full)
        if sign != 1:
            e = scaled(e, sign)
    else:
        raise ValueError(f"unknown method {method!r}")
    r = sub(W.d(e), target)
    if r:
        raise AssertionError(f"d_W e != sign * p: {first_term(r)}")
    for a in range(lie.dim):
        if W.L[a](e):
            raise AssertionError(f"e is not invariant under L({a})")
    return TransgressionChain(p, e, sign, method, _restrict_theta(e), notes)


def solve_invariant_primitive(W: WeilAlgebra, target: Mapping, degree: int) -> dict | None:
    """y in (Wg^degree)^g with d_W y = target, or None."""
    lie = W.lie
    wf = weight_function(lie)
    inv = invariant_subspace(W.L, W.basis(degree), lie, wf)
    coords = solve_columns([W.d(v) for v in inv], target)
    if coords is None:
        return None
    out: dict = {}
    for j, c in coords.items():
        add_into(out, inv[j], c)
    return out


def phi_single_letters(D: DgAlgebra, layer: int) -> dict:
    """Single-letter part of Phi at one Weil layer, keyed (wkey, word).

    Products in the path-ordered exponential have at least two letters, so
    the single-letter part is the integral of b(s) over [0, 1].
    """
    W = WeilAlgebra(D.lie, poly_cutoff=layer // 2 + 1)
    out: dict = {}
    for (w, u, sp), v in connection_form(W, D, layer).items():
        if GCAlgebra.deg(w) == layer:
            add_term(out, (w, u), v / (sp + 1))
    return out


def _e_from_phi_p(Dp: DgAlgebra, layers: int, full: bool = False) -> tuple[dict, dict]:
    """Read e off Phi_p^{-1} dPhi_p = -i(t) + l(theta) + e (x) c.

    The coefficient of c on the empty word only receives contributions from
    d hitting a single-letter term of Phi_p, since Phi_p^{-1} has no other
    empty-word term than 1.  With ``full`` the whole form is computed and
    its non-central part compared with -i(t) + l(theta) as well.
    """
    notes = {"form": "Phi_p^-1 dPhi_p = -i(t) + l(theta) + e c"}
    if full:
        G = phi_big(Dp, layers, verify=False)
        form = G.maurer_cartan_form()
        e: dict = {}
        rest: dict = {}
        for (w, u, m), c in form.items():
            if m is not None and m[0] == "c":
                if u:
                    raise AssertionError("central term with a nonempty word")
                add_term(e, w, c)
            else:
                rest[(w, u, m)] = c
        r = sub(rest, expected_maurer_cartan_form(G.ring))
        if r:
            raise AssertionError(f"Phi_p^-1 dPhi_p has unexpected non-central part {first_term(r)}")
        notes["orientation"] = G.notes.get("orientation")
        notes["checked"] = "full form"
        return e, notes
    e = {}
    for (w, u), v in phi_single_letters(Dp, layers).items():
        sign = -1 if GCAlgebra.deg(w) & 1 else 1
        for key, c in Dp._d_letter[u[0]].items():
            if key[0] == "c":
                add_term(e, w, sign * v * c)
    notes["checked"] = "central coefficient on the empty word"
    return e, notes


def remark_witness(W: WeilAlgebra, p: InvariantPolynomial) -> dict:
    """-p(t, theta) + 1/6 p(theta, [theta,theta]) for quadratic p."""
    n = W.lie.dim
    out: dict = {}
    for a in range(n):
        for b in range(n):
            v = p.tensor((a, b))
            if not v:
                continue
            r = W.alg.mul_keys(((), (a,)), ((b,), ()))
            add_term(out, r[1], -v * r[0])
    tt = W.bracket_theta_theta()
    for a in range(n):
        for b in range(n):
            v = p.tensor((a, b))
            if not v:
                continue
            for wk, c in tt[b].items():
                r = W.alg.mul_keys(((a,), ()), wk)
                if r is not None:
                    add_term(out, r[1], Q(1, 6) * v * c * r[0])
    return out


def exact_difference(W: WeilAlgebra, e1: Mapping, e2: Mapping, degree: int) -> dict | None:
    """Invariant y with d_W y = e1 - e2 (a certificate that e1, e2 differ by an exact term)."""
    diff = sub(e1, e2)
    if not diff:
        return {}
    return solve_invariant_primitive(W, diff, degree - 1)


# ---------------------------------------------------------------------------
# Dg-modules and the Cartan model


def graded_commutator(A: Callable, dA: int, B: Callable, dB: int) -> Callable:
    s = koszul(dA, dB)

    def op(u):
        out = A(B(u))
        add_into(out, B(A(u)), -s)
        return out
    return op


def _zero_op(u):
    return {}


@dataclass
class DgModuleAction:
    """A complex V with operators l_V(e_a) and i_V(e_m) realizing a map Dg -> End(V).

    ``basis(k)`` lists basis keys of V^k and ``degree_of`` gives the degree of
    a key.  ``i_ops`` maps multisets m to the operator i_V(I(e_m)); missing
    entries act by zero.  ``central`` optionally gives the image of the
    central generator of D_p g.
    """

    lie: LieData
    basis: Callable
    degree_of: Callable
    degrees: tuple
    d: Callable
    l_ops: list
    i_ops: dict
    name: str = "V"
    central: Callable | None = None
    q: dict | None = None

    def i(self, m: tuple) -> Callable:
        return self.i_ops.get(tuple(sorted(m)), _zero_op)

    def max_layer(self) -> int:
        return max((len(m) for m in self.i_ops), default=0)

    def residuals(self, layers: int | None = None):
        """Yield (relation, witness) for failures of the homomorphism equations."""
        lie = self.lie
        n = lie.dim
        top = (self.max_layer() + 1) if layers is None else layers
        vecs = [{k: ONE} for deg in self.degrees for k in self.basis(deg)]
        for u in vecs:
            if self.d(self.d(u)):
                yield "d_V^2 = 0", first_term(u)
                return
        for a in range(n):
            comm = graded_commutator(self.d, 1, self.l_ops[a], 0)
            for u in vecs:
                if comm(u):
                    yield "[d_V, l_V(x)] = 0", (a, first_term(u))
                    return
            for b in range(n):
                comm = graded_commutator(self.l_ops[a], 0, self.l_ops[b], 0)
                for u in vecs:
                    rhs: dict = {}
                    for c, v in lie.bracket_basis(a, b).items():
                        add_into(rhs, self.l_ops[c](u), v)
                    if sub(comm(u), rhs):
                        yield "[l_V(x), l_V(y)] = l_V([x,y])", (a, b, first_term(u))
                        return
        from .dmodel import sub_multisets
        from .liecore import ad_sym
        for k in range(1, top + 1):
            for m in multisets(n, k):
                im = self.i(m)
                deg_i = 1 - 2 * k
                for a in range(n):
                    comm = graded_commutator(self.l_ops[a], 0, im, deg_i)
                    for u in vecs:
                        rhs = {}
                        for m2, v in ad_sym(lie, a, m).items():
                            add_into(rhs, self.i(m2)(u), v)
                        if sub(comm(u), rhs):
                            yield "[l_V(x), i_V(u)] = i_V(ad_x u)", (a, m, first_term(u))
                            return
                comm = graded_commutator(self.d, 1, im, deg_i)
                for u in vecs:
                    rhs = {}
                    if k == 1:
                        rhs = self.l_ops[m[0]](u)
                    else:
                        w = Q(1, multiset_mult(m))
                        for m1, m2 in sub_multisets(m):
                            c = w * multiset_mult(m1) * multiset_mult(m2)
                            add_into(rhs, self.i(m1)(self.i(m2)(u)), c)
                    if self.q and self.central is not None:
                        qv = self.q.get(m)
                        if qv:
                            add_into(rhs, self.central(u), qv)
                    if sub(comm(u), rhs):
                        yield "[d_V, i_V(I(e_m))] = i_V(d I(e_m))", (m, first_term(u))
                        return

    def verify(self, layers: int | None = None) -> tuple[bool, object]:
        bad = next(self.residuals(layers), None)
        return bad is None, bad


def module_via_projection(V: GDifferentialSpace, degree_of: Callable, name: str = "") -> DgModuleAction:
    """A Cg-module pulled back along pi: i_V(I(x)) = I_V(x), higher i_V vanish."""
    n = V.lie.dim
    return DgModuleAction(V.lie, V.basis, degree_of, tuple(V.degrees), V.d, list(V.L),
                          {(a,): V.I[a] for a in range(n)}, name or V.name)


def trivial_module(lie: LieData) -> DgModuleAction:
    basis = lambda k: [("1",)] if k == 0 else []
    return DgModuleAction(lie, basis, lambda key: 0, (0,), _zero_op,
                          [_zero_op] * lie.dim, {}, "trivial")


def ce_module(lie: LieData) -> DgModuleAction:
    C = CeAlgebra(lie)
    return module_via_projection(C.g_space(), lambda key: len(key[0]), f"CE({lie.name})")


def weil_module(lie: LieData, poly_cutoff: int, degrees: Sequence[int]) -> DgModuleAction:
    W = WeilAlgebra(lie, poly_cutoff)
    return module_via_projection(W.g_space(degrees), GCAlgebra.deg, f"W({lie.name})")


class CartanModel:
    """U = Wg (x) V with d_U = d_W + d_V - i_V(t) + l_V(theta), I_U = I_W, L_U = L_W + l_V.

    Keys of U are pairs (wkey, vkey).  An element w' (x) T of Wg (x) End(V)
    acts by (w (x) v) -> (-1)^{|T||w|} w'w (x) T v.
    """

    def __init__(self, V: DgModuleAction, poly_cutoff: int, degrees: Sequence[int]):
        self.V = V
        self.lie = V.lie
        self.W = WeilAlgebra(V.lie, poly_cutoff)
        self.degrees = tuple(degrees)
        n = self.lie.dim
        self.i_terms = []  # (wkey, coef, operator, operator degree)
        for m, op in sorted(V.i_ops.items()):
            self.i_terms.append((((), m), Q(multiset_mult(m)), op, 1 - 2 * len(m)))
        self.I = [self._weil_only(self.W.I[a]) for a in range(n)]
        self.L = [self._lie_derivative(a) for a in range(n)]

    def basis(self, k: int) -> list:
        out = []
        for j in range(0, k + 1 - min(self.V.degrees, default=0) + 1):
            vdeg = k - j
            if vdeg not in self.V.degrees:
                continue
            vb = self.V.basis(vdeg)
            if not vb:
                continue
            for w in self.W.basis(j):
                for v in vb:
                    out.append((w, v))
        return out

    def _weil_only(self, op) -> Callable:
        def f(u):
            out: dict = {}
            for (w, v), c in u.items():
                for w2, c2 in op({w: ONE}).items():
                    add_term(out, (w2, v), c * c2)
            return out
        return f

    def _v_only(self, op, op_deg: int) -> Callable:
        def f(u):
            out: dict = {}
            for (w, v), c in u.items():
                s = koszul(op_deg, GCAlgebra.deg(w))
                for v2, c2 in op({v: ONE}).items():
                    add_term(out, (w, v2), s * c * c2)
            return out
        return f

    def _act(self, wkey, T, T_deg: int, u: Mapping) -> dict:
        out: dict = {}
        alg = self.W.alg
        for (w, v), c in u.items():
            r = alg.mul_keys(wkey, w)
            if r is None:
                continue
            s = r[0] * koszul(T_deg, GCAlgebra.deg(w))
            for v2, c2 in T({v: ONE}).items():
                add_term(out, (r[1], v2), s * c * c2)
        return out

    def _lie_derivative(self, a: int) -> Callable:
        LW = self._weil_only(self.W.L[a])
        lV = self._v_only(self.V.l_ops[a], 0)

        def f(u):
            out = LW(u)
            add_into(out, lV(u))
            return out
        return f

    def d_split(self, u: Mapping) -> dict:
        """d_W + d_V only."""
        out = self._weil_only(self.W.d)(u)
        add_into(out, self._v_only(self.V.d, 1)(u))
        return out

    def d(self, u: Mapping) -> dict:
        out = self.d_split(u)
        for wkey, mult, op, od in self.i_terms:
            add_into(out, self._act(wkey, op, od, u), -mult)
        for a in range(self.lie.dim):
            add_into(out, self._act(((a,), ()), self.V.l_ops[a], 0, u))
        return out

    def g_space(self) -> GDifferentialSpace:
        return GDifferentialSpace(self.lie, self.basis, self.d, self.I, self.L, self.degrees,
                                  f"Cartan({self.V.name})")

    def verify(self) -> tuple[bool, str | None]:
        return check_g_differential_space(self.g_space())


def cartan_model(V: DgModuleAction, poly_cutoff: int = 3,
                 degrees: Sequence[int] = range(0, 3)) -> CartanModel:
    ok, bad = V.verify()
    if not ok:
        raise ValueError(f"{V.name} is not a Dg-module: {bad}")
    U = CartanModel(V, poly_cutoff, degrees)
    ok, bad = U.verify()
    if not ok:
        raise AssertionError(f"Cartan relations fail on {V.name}: {bad}")
    return U


class ModuleImage:
    """Operators on Wg (x) V induced by elements of Wg (x) U(A') through i_V."""

    def __init__(self, U: CartanModel, words):
        self.U = U
        self.words = words

    def _letter_op(self, letter):
        if isinstance(self.words, ConeWords):
            return self.U.V.i((letter,))
        return self.U.V.i(self.words.D.letters[letter])

    def word_op(self, word: tuple) -> Callable:
        ops = [self._letter_op(x) for x in word]

        def f(v):
            for op in reversed(ops):
                v = op(v)
                if not v:
                    return {}
            return v
        return f

    def operator(self, X: Mapping) -> Callable:
        """The operator of an element with keys (wkey, word, None)."""
        terms = [(w, self.word_op(u), self.words.word_deg(u), c) for (w, u, m), c in X.items()]

        def f(u):
            out: dict = {}
            for w, op, od, c in terms:
                add_into(out, self.U._act(w, op, od, u), c)
            return out
        return f


@dataclass
class KalkmanResult:
    d_new: Callable
    I_new: list
    L_new: list
    forward: Callable
    backward: Callable
    Y: list


def kalkman_transform(U: CartanModel, G: GroupLikeElement) -> KalkmanResult:
    """Conjugate the Cartan-model operators by Phi_V: X -> Phi_V X Phi_V^{-1}."""
    R = G.ring
    img = ModuleImage(U, R.words)
    fwd = img.operator(G.terms)
    bwd = img.operator(G.inverse())
    n = U.lie.dim

    def conj(op):
        return lambda u: fwd(op(bwd(u)))

    d_new = conj(U.d)
    I_new = [conj(U.I[a]) for a in range(n)]
    L_new = [conj(U.L[a]) for a in range(n)]
    Y = []
    inv = G.inverse()
    for a in range(n):
        Xa = R.mul(R.weil_apply(R.W.I[a], G.terms), inv)
        Y.append(img.operator(scaled(R.truncate(Xa), -ONE)))
    return KalkmanResult(d_new, I_new, L_new, fwd, bwd, Y)


def kalkman_residuals(U: CartanModel, K: KalkmanResult, degrees: Sequence[int] | None = None):
    """Yield failures of d' = d_W + d_V, I' = I_W + Y_V, L' = L_W + l_V."""
    degs = U.degrees if degrees is None else degrees
    n = U.lie.dim
    for k in degs:
        for key in U.basis(k):
            u = {key: ONE}
            r = sub(K.d_new(u), U.d_split(u))
            if r:
                yield "Phi_V d_U Phi_V^-1 = d_W + d_V", (key, first_term(r))
                return
            r = sub(K.backward(K.forward(u)), u)
            if r:
                yield "Phi_V^-1 Phi_V = 1", (key, first_term(r))
                return
            for a in range(n):
                rhs = U.I[a](u)
                add_into(rhs, K.Y[a](u))
                r = sub(K.I_new[a](u), rhs)
                if r:
                    yield "Phi_V I_U Phi_V^-1 = I_W + Y_V", (a, key, first_term(r))
                    return
                r = sub(K.L_new[a](u), U.L[a](u))
                if r:
                    yield "Phi_V L_U Phi_V^-1 = L_W + l_V", (a, key, first_term(r))
                    return


# ---------------------------------------------------------------------------
# equivariant cohomology of the Weil algebra


class WeilSquare:
    """Wg (x) Wg as one free graded-commutative algebra.

    Odd generators: theta_W (0..n-1), theta_V (n..2n-1); even generators:
    t_W (0..n-1), t_V (n..2n-1).
    """

    def __init__(self, lie: LieData, poly_cutoff: int, model: str):
        if model not in ("weil", "cartan"):
            raise ValueError(f"unknown model {model!r}")
        self.lie = lie
        n = lie.dim
        self.model = model
        self.alg = GCAlgebra(2 * n, 2 * n, poly_cutoff=poly_cutoff)
        alg = self.alg
        f = lie.f
        dodd, deven = [], []
        for block in (0, n):
            for a in range(n):
                img = {((), (block + a,)): ONE}
                for b in range(n):
                    for c in range(b + 1, n):
                        v = f(a, b, c)
                        if v:
                            add_term(img, ((block + b, block + c), ()), -v)
                dodd.append(img)
        for block in (0, n):
            for a in range(n):
                img = {}
                for b in range(n):
                    for c in range(n):
                        v = f(a, b, c)
                        if v:
                            add_term(img, ((block + b,), (block + c,)), -v)
                deven.append(img)
        if model == "cartan":
            # -I_V(t) + L_V(theta) on the second factor
            for a in range(n):
                add_term(dodd[n + a], ((), (a,)), -ONE)
                for c in range(n):
                    for d_ in range(n):
                        v = f(a, c, d_)
                        if v:
                            # theta_W^c L_V(e_c) theta_V^a = -f^a_{c d} theta_W^c theta_V^d
                            add_term(dodd[n + a], ((c, n + d_), ()), -v)
                            kk = alg.mul_keys(((c,), ()), ((), (n + d_,)))
                            add_term(deven[n + a], kk[1], -v * kk[0])
        self.d = Derivation(alg, 1, dodd, deven, f"d_{model}")

        def contraction(a, blocks):
            return Derivation(alg, -1, [{alg.one: ONE} if i in blocks else {}
                                        for i in range(2 * n)],
                              [{}] * (2 * n), f"I({a})")
        self.I = [contraction(a, {a} if model == "cartan" else {a, n + a}) for a in range(n)]
        self.L = []
        for a in range(n):
            co_o, co_e = [], []
            for block in (0, n):
                for b in range(n):
                    o, e = {}, {}
                    for c in range(n):
                        v = f(b, a, c)
                        if v:
                            o[((block + c,), ())] = -v
                            e[((), (block + c,))] = -v
                    co_o.append(o)
                    co_e.append(e)
            self.L.append(Derivation(alg, 0, co_o, co_e, f"L({a})"))

    def basic(self, k: int) -> list[dict]:
        if k < 0:
            return []
        return invariant_subspace(self.I + self.L, self.alg.basis(k), self.lie,
                                  weight_function(self.lie))


def equivariant_cohomology_weil(lie: LieData, degrees: Sequence[int], model: str = "weil",
                                poly_cutoff: int | None = None) -> dict[int, int]:
    """dim H^k of the basic subcomplex of Wg (x) Wg, with a stability check.

    The computation runs at polynomial cutoffs P and P+1 and refuses any
    degree whose dimension differs between them.
    """
    top = max(degrees)
    P = poly_cutoff if poly_cutoff is not None else top // 2 + 1
    first = _basic_cohomology(WeilSquare(lie, P, model), degrees)
    second = _basic_cohomology(WeilSquare(lie, P + 1, model), degrees)
    for k in degrees:
        if first[k] != second[k]:
            raise CutoffRefused(f"H^{k} unstable: {first[k]} at cutoff {P}, "
                                f"{second[k]} at cutoff {P + 1}")
    return first


def _basic_cohomology(S: WeilSquare, degrees: Sequence[int]) -> dict[int, int]:
    cache: dict[int, list] = {}

    def B(k):
        if k not in cache:
            cache[k] = S.basic(k)
        return cache[k]

    out = {}
    for k in degrees:
        d_in = SparseLinearMap.from_operator(S.d, B(k - 1), 1, k - 1)
        d_out = SparseLinearMap.from_operator(S.d, B(k), 1, k)
        out[k] = cohomology_dim(d_in, d_out)
    return out


def basic_dims(lie: LieData, degrees: Sequence[int], model: str, poly_cutoff: int) -> dict:
    S = WeilSquare(lie, poly_cutoff, model)
    return {k: len(S.basic(k)) for k in degrees}


# ---------------------------------------------------------------------------
# twisted actions and the FMS algebra


class SemidirectWeil(Dgla):
    """Cg semidirect B[shift] with B = Wg abelian, twisted by d' = d - [e0, .].

    Keys: ('L', a) in degree 0, ('I', a) in degree -1, ('B', wkey) in degree
    deg(wkey) - shift.
    """

    def __init__(self, W: WeilAlgebra, shift: int, e0: Mapping | None = None):
        self.W = W
        self.lie = W.lie
        self.shift = shift
        self.e0 = {("B", k): v for k, v in (e0 or {}).items()}
        self.name = f"C({self.lie.name}) x W[{shift}]"

    def deg(self, key) -> int:
        if key[0] == "L":
            return 0
        if key[0] == "I":
            return -1
        return GCAlgebra.deg(key[1]) - self.shift

    def _wrap(self, u: Mapping) -> dict:
        return {("B", k): v for k, v in u.items()}

    def bracket_keys(self, a, b) -> dict:
        lie = self.lie
        ta, tb = a[0], b[0]
        if ta == "B" and tb == "B":
            return {}
        if ta == "L" and tb == "L":
            return {("L", c): v for c, v in lie.bracket_basis(a[1], b[1]).items()}
        if ta == "L" and tb == "I":
            return {("I", c): v for c, v in lie.bracket_basis(a[1], b[1]).items()}
        if ta == "I" and tb == "L":
            return {("I", c): -v for c, v in lie.bracket_basis(b[1], a[1]).items()}
        if ta == "I" and tb == "I":
            return {}
        if ta == "L":
            return self._wrap(self.W.L[a[1]]({b[1]: ONE}))
        if ta == "I":
            return self._wrap(self.W.I[a[1]]({b[1]: ONE}))
        # b is in Cg, a in B
        s = -koszul(self.deg(a), self.deg(b))
        return scaled(self.bracket_keys(b, a), s)

    def d_untwisted(self, u: Mapping) -> dict:
        out: dict = {}
        for k, c in u.items():
            if k[0] == "I":
                add_term(out, ("L", k[1]), c)
            elif k[0] == "B":
                add_into(out, self._wrap(self.W.d({k[1]: ONE})), c)
        return out

    def d(self, u: Mapping) -> dict:
        out = self.d_untwisted(u)
        add_into(out, self.bracket(self.e0, u), -ONE)
        return out

    def d_key(self, a) -> dict:
        return self.d({a: ONE})

    def unit(self) -> dict:
        return {("B", self.W.alg.one): ONE}

    def basis(self, degree: int) -> list[dict]:
        n = self.lie.dim
        out = []
        if degree == 0:
            out += [{("L", a): ONE} for a in range(n)]
        if degree == -1:
            out += [{("I", a): ONE} for a in range(n)]
        if degree + self.shift >= 0:
            out += [{("B", k): ONE} for k in self.W.basis(degree + self.shift)]
        return out

    def generators(self) -> list[dict]:
        n = self.lie.dim
        gens = [{("L", a): ONE} for a in range(n)] + [{("I", a): ONE} for a in range(n)]
        return gens


def _split_sym(key, n: int):
    """Split a monomial of Sg* (x) Wg (even indices >= n are Sg*) into (sym multiset, wkey)."""
    odd, even = key
    w_even = tuple(i for i in even if i < n)
    s_even = tuple(i - n for i in even if i >= n)
    return s_even, (odd, w_even)


@dataclass
class TwistData:
    """phi(t) in (Sg* (x) B)^g as {(multiset, bkey): coef} with d_g phi = p (x) 1 + 1 (x) c."""

    phi: dict
    p: InvariantPolynomial | None
    layers: dict = field(default_factory=dict)

    def layer(self, k: int) -> dict:
        return self.layers.get(k, {})

    def e0(self) -> dict:
        return {w: c for (m, w), c in self.phi.items() if not m}


class TwistedAction:
    """A morphism rho: D_p g -> A_phi determined by a twist phi.

    rho(l(x)) = L(x), rho(I(e_m)) = phi_m / mult(m) (plus I(x) on layer 1),
    rho(c) = 1_B.  Lie words are mapped through the Dynkin-Specht-Wever
    projector, which is checked on every element it is applied to.
    """

    def __init__(self, A: SemidirectWeil, twist: TwistData, D: DgAlgebra | None = None):
        self.A = A
        self.twist = twist
        self.D = D
        self.lie = A.lie
        n = self.lie.dim
        self._letter_img: dict[tuple, dict] = {}
        for (m, w), c in twist.phi.items():
            if m:
                add_term(self._letter_img.setdefault(m, {}), ("B", w), c / multiset_mult(m))
        for a in range(n):
            add_term(self._letter_img.setdefault((a,), {}), ("I", a), ONE)
        self._rn_cache: dict = {}

    def letter(self, m: Sequence[int]) -> dict:
        return self._letter_img.get(tuple(sorted(m)), {})

    def _right_normed(self, word: tuple) -> dict:
        if word in self._rn_cache:
            return self._rn_cache[word]
        D = self.D
        x = self.letter(D.letters[word[0]])
        if len(word) == 1:
            out = dict(x)
        else:
            rest = self._right_normed(word[1:])
            out = self.A.bracket(x, rest) if x and rest else {}
        self._rn_cache[word] = out
        return out

    def __call__(self, u: Mapping) -> dict:
        """rho on an element of D_p g."""
        out: dict = {}
        by_len: dict[int, dict] = {}
        for key, c in u.items():
            if key[0] == "l":
                add_term(out, ("L", key[1]), c)
            elif key[0] == "c":
                add_into(out, self.A.unit(), c)
            else:
                by_len.setdefault(len(key[1]), {})[key[1]] = c
        for k, P in by_len.items():
            if _dynkin_check(self.D, P, k):
                raise ValueError("element is not a Lie polynomial")
            for w, c in P.items():
                add_into(out, self._right_normed(w), c / k)
        return out

    def residuals(self, max_layer: int):
        """Yield failures of rho d = d' rho and rho [l, .] = [L, rho .] on generators."""
        from .dmodel import sub_multisets
        from .liecore import ad_sym
        lie, A = self.lie, self.A
        n = lie.dim
        q = {}
        if self.twist.p is not None:
            q = {m: self.twist.p.tensor(m) for m in multisets(n, self.twist.p.degree)}
        for k in range(1, max_layer + 1):
            for m in multisets(n, k):
                img = self.letter(m)
                lhs = A.d(img)
                if k == 1:
                    rhs = {("L", m[0]): ONE}
                else:
                    rhs = {}
                    w = Q(1, 2 * multiset_mult(m))
                    for m1, m2 in sub_multisets(m):
                        c = w * multiset_mult(m1) * multiset_mult(m2)
                        x, y = self.letter(m1), self.letter(m2)
                        if x and y:
                            add_into(rhs, A.bracket(x, y), c)
                qm = q.get(m)
                if qm:
                    add_into(rhs, A.unit(), qm)
                r = sub(lhs, rhs)
                if r:
                    yield "rho(d I(e_m)) = d' rho(I(e_m))", (m, first_term(r))
                    return
                for a in range(n):
                    lhs = A.bracket({("L", a): ONE}, img)
                    rhs = {}
                    for m2, v in ad_sym(lie, a, m).items():
                        add_into(rhs, self.letter(m2), v)
                    r = sub(lhs, rhs)
                    if r:
                        yield "rho([l(x), I(e_m)]) = [L(x), rho(I(e_m))]", (a, m, first_term(r))
                        return

    def verify(self, max_layer: int) -> tuple[bool, object]:
        bad = next(self.residuals(max_layer), None)
        return bad is None, bad


def _dynkin_check(D: DgAlgebra, P: Mapping, k: int) -> dict:
    """r(P) - kP in the tensor algebra, r the right-normed bracketing map."""
    fla = D.fla
    out: dict = {}
    for w, c in P.items():
        v = {(w[-1],): ONE}
        for x in reversed(w[:-1]):
            v = fla.bracket({(x,): ONE}, v)
        add_into(out, v, c)
    add_into(out, P, -Q(k))
    return out


def twist_action(W: WeilAlgebra, twist: TwistData, shift: int, D: DgAlgebra | None = None,
                 max_layer: int | None = None) -> TwistedAction:
    """Build A = Cg x W[shift] with d' = d - [phi(0), .] and the morphism rho."""
    A = SemidirectWeil(W, shift, twist.e0())
    rho = TwistedAction(A, twist, D)
    top = max_layer if max_layer is not None else (twist.p.degree + 1 if twist.p else 2)
    ok, bad = rho.verify(top)
    if not ok:
        raise AssertionError(f"twisted action fails: {bad}")
    return rho


class SymWeil:
    """Sg* (x) Wg with d_g = d_W - t_S^a I_W(a) and the diagonal coadjoint action."""

    def __init__(self, lie: LieData, poly_cutoff: int):
        n = lie.dim
        self.lie = lie
        self.W = WeilAlgebra(lie, poly_cutoff)
        self.alg = GCAlgebra(n, 2 * n, poly_cutoff=poly_cutoff)
        dW = self.W.d
        odd = []
        for a in range(n):
            img = dict(dW.odd_images[a])
            add_term(img, ((), (n + a,)), -ONE)
            odd.append(img)
        even = [dict(dW.even_images[a]) for a in range(n)] + [{} for _ in range(n)]
        self.d = Derivation(self.alg, 1, odd, even, "d_g")
        self.L = []
        f = lie.f
        for a in range(n):
            co_o, co_e = [], []
            for b in range(n):
                o = {((c,), ()): -f(b, a, c) for c in range(n) if f(b, a, c)}
                co_o.append(o)
            for block in (0, n):
                for b in range(n):
                    co_e.append({((), (block + c,)): -f(b, a, c) for c in range(n) if f(b, a, c)})
            self.L.append(Derivation(self.alg, 0, co_o, co_e, f"L({a})"))

    def weight(self, key):
        wf = weight_function(self.lie)
        if wf is None:
            return 0
        n = self.lie.dim
        odd, even = key
        return wf((odd, tuple(i % n for i in even)))


def solve_fms_twist(lie: LieData, p: InvariantPolynomial) -> TwistData:
    """e(t) in (Sg* (x) Wg)^g of degree 2n-1 with d_g e = p (x) 1 - 1 (x) p."""
    n = p.degree
    S = SymWeil(lie, n)
    target = S.W.poly_element(p, even_offset=lie.dim)
    add_into(target, S.W.poly_element(p), -ONE)
    cands = [k for k in S.alg.basis(2 * n - 1) if S.weight(k) == 0]
    inv = invariant_subspace(S.L, cands, lie)
    coords = solve_columns([S.d(v) for v in inv], target)
    if coords is None:
        raise AssertionError("no invariant solution of d_g e = p (x) 1 - 1 (x) p")
    e: dict = {}
    for j, c in coords.items():
        add_into(e, inv[j], c)
    phi: dict = {}
    layers: dict = {}
    for key, c in e.items():
        m, w = _split_sym(key, lie.dim)
        phi[(m, w)] = c
        layers.setdefault(len(m), {})[(m, w)] = c
    return TwistData(phi, p, layers)


@dataclass
class FmsModel:
    rho: TwistedAction
    D: DgAlgebra
    twist: TwistData

    @property
    def A(self) -> SemidirectWeil:
        return self.rho.A

    def image_basis(self, degree: int) -> list[dict]:
        """A basis of rho(D_p^degree)."""
        imgs = [self.rho(u) for u in self.D.basis(degree)]
        return [imgs[i] for i in independent_subset(imgs)]

    def image_dims(self) -> dict[int, int]:
        n = self.twist.p.degree
        return {k: len(self.image_basis(k)) for k in range(0, -(2 * n - 2) - 1, -1)}

    def I_tilde(self, a: int) -> dict:
        return self.rho(self.D.generator((a,)))

    def theta(self, xi: Mapping) -> dict:
        """theta(xi) = xi_a theta^a in the Weil factor."""
        return {("B", ((a,), ())): Q(v) for a, v in xi.items() if v}

    def mu(self, xi: Mapping) -> dict:
        return scaled(self.A.d(self.theta(xi)), -ONE)

    def contract_p(self, *slots: int) -> dict:
        """The covector p(e_{slots}, ., ...) with one free slot."""
        lie = self.twist.p.lie
        out = {}
        for c in range(lie.dim):
            v = self.twist.p.tensor(tuple(sorted(slots + (c,))))
            if v:
                out[c] = v
        return out


def fms_dgla(lie: LieData, p: InvariantPolynomial) -> FmsModel:
    """The FMS twisted model of D_p g inside Cg x Wg[2n-2]."""
    n = p.degree
    from .dmodel import polynomial_extension
    twist = solve_fms_twist(lie, p)
    D = DgAlgebra(lie, 2 * n - 1, polynomial_extension(p))
    W = WeilAlgebra(lie, n)
    rho = twist_action(W, twist, 2 * n - 2, D, max_layer=n + 1)
    return FmsModel(rho, D, twist)


def fms_relations(F: FmsModel):
    """Yield failures of the defining relations among I~, mu, theta and c."""
    lie = F.twist.p.lie
    n = lie.dim
    A = F.A
    unit = A.unit()
    quadratic = F.twist.p.degree == 2
    for x in range(n):
        for y in range(n):
            lhs = A.bracket(F.I_tilde(x), F.I_tilde(y))
            if quadratic:
                rhs = scaled(unit, -2 * F.twist.p.tensor(tuple(sorted((x, y)))))
                name = "[I~(x), I~(y)] = -2 p(x,y) c"
            else:
                rhs = scaled(F.mu(F.contract_p(x, y)), Q(2))
                name = "[I~(x), I~(y)] = 2 mu(p(x,y,.))"
            r = sub(lhs, rhs)
            if r:
                yield name, (x, y, first_term(r))
                return
        for c in range(n):
            lhs = A.bracket(F.I_tilde(x), F.theta({c: ONE}))
            r = sub(lhs, unit if c == x else {})
            if r:
                yield "[I~(x), theta(xi)] = xi(x) c", (x, c, first_term(r))
                return
            # [I~(x), mu(xi)] = theta(xi o ad_x), since mu = -d' theta
            xi_ad = {}
            for b in range(n):
                v = lie.f(c, x, b)
                if v:
                    xi_ad[b] = v
            r = sub(A.bracket(F.I_tilde(x), F.mu({c: ONE})), F.theta(xi_ad))
            if r:
                yield "[I~(x), mu(xi)] = theta(xi o ad_x)", (x, c, first_term(r))
                return


def fms_layer_two_residual(F: FmsModel) -> tuple | None:
    """For cubic p: rho(I(e_m)) = -theta(p(e_m, .)) on every layer-2 letter."""
    if F.twist.p.degree != 3:
        return None
    n = F.twist.p.lie.dim
    for m in multisets(n, 2):
        r = sub(F.rho.letter(m), scaled(F.theta(F.contract_p(*m)), -ONE))
        if r:
            return m, first_term(r)
    return None

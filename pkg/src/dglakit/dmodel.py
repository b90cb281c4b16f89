"""The DGLA Dg = g x| L(S+g), truncated at degree -N, and its central extensions.

Negative-degree elements are Lie elements of the tensor algebra on the
generators e^m (m a multiset of basis indices, the symbol I(e_m) of degree
1 - 2|m|).  They are stored as dicts over keys ('w', word) where a word is a
tuple of letter indices.  Degree 0 is g, with keys ('l', a); central
generators of an extension use ('c', j).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import (ONE, Q, CutoffRefused, Dgla, FreeLieAlgebra, SparseLinearMap,
                   add_into, add_term, cohomology_dim, dgla_residuals, first_term, koszul,
                   sub)
from .coneweil import ConeAlgebra, ConePExtension
from .liecore import InvariantError, InvariantPolynomial, LieData, ad_sym, multiset_mult, multisets


def sub_multisets(m: tuple):
    """All (m1, m2) with m1 + m2 = m, both nonempty, as sorted tuples."""
    cnt = sorted(Counter(m).items())
    keys = [k for k, _ in cnt]
    ranges = [range(c + 1) for _, c in cnt]
    for pick in itertools.product(*ranges):
        s = sum(pick)
        if s == 0 or s == len(m):
            continue
        m1 = tuple(itertools.chain.from_iterable([k] * r for k, r in zip(keys, pick)))
        m2 = tuple(itertools.chain.from_iterable([k] * (c - r) for (k, c), r in zip(cnt, pick)))
        yield m1, m2


@dataclass
class CentralExtensionData:
    """A complex C of central generators with a map q: S+g -> C.

    ``degrees[j]`` is the degree of ('c', j); ``differential[j]`` is d of
    that generator as {j': coef}; ``q`` maps multisets m to {j: coef}, the
    value of the symmetric map on e_m (tensor normalization).
    """

    degrees: Sequence[int]
    q: Mapping
    differential: Mapping = field(default_factory=dict)
    name: str = "C"

    def d_center(self, j) -> dict:
        return dict(self.differential.get(j, {}))

    def validate(self, lie: LieData) -> None:
        for j in range(len(self.degrees)):
            dd: dict = {}
            for jj, v in self.d_center(j).items():
                if self.degrees[jj] != self.degrees[j] + 1:
                    raise ValueError(f"differential of c{j} has the wrong degree")
                add_into(dd, self.d_center(jj), v)
            if dd:
                raise ValueError(f"d^2 != 0 on central generator c{j}")
        by_layer: dict[int, list] = {}
        for m, val in self.q.items():
            for j in val:
                if self.degrees[j] != 2 - 2 * len(m):
                    raise ValueError(f"q(e{m}) has component c{j} of degree {self.degrees[j]}, "
                                     f"expected {2 - 2 * len(m)}")
            by_layer.setdefault(len(m), []).append(m)
        for k in sorted(by_layer):
            for m in by_layer[k]:
                dq: dict = {}
                for j, v in self.q[m].items():
                    add_into(dq, self.d_center(j), v)
                if dq:
                    raise InvariantError(f"dq != 0: d q(e{m}) = {first_term(dq)}")
            for a in range(lie.dim):
                for m in multisets(lie.dim, k):
                    tot: dict = {}
                    for m2, v in ad_sym(lie, a, m).items():
                        add_into(tot, self.q.get(m2, {}), v)
                    if tot:
                        raise InvariantError(f"q is not g-invariant: q(ad(e{a}) e{m}) = "
                                             f"{first_term(tot)}")


def polynomial_extension(p: InvariantPolynomial) -> CentralExtensionData:
    """C = Q[2n-2] with q = p on S^n and zero elsewhere."""
    n = p.degree
    q = {}
    for m in multisets(p.lie.dim, n):
        v = p.tensor(m)
        if v:
            q[m] = {0: v}
    return CentralExtensionData([2 - 2 * n], q, {}, f"Q[{2 * n - 2}]")


class DgAlgebra(Dgla):
    """Dg truncated at degree -N, optionally extended by central data."""

    def __init__(self, lie: LieData, cutoff: int, ext: CentralExtensionData | None = None):
        if cutoff < 1:
            raise CutoffRefused(f"cutoff must be at least 1, got {cutoff}")
        self.lie = lie
        self.cutoff = cutoff
        self.ext = ext
        self.name = f"D({lie.name})" if ext is None else f"D({lie.name}) + {ext.name}"
        self.letters: list[tuple] = []
        for k in range(1, (cutoff + 1) // 2 + 1):
            self.letters.extend(multisets(lie.dim, k))
        self.letter_index = {m: i for i, m in enumerate(self.letters)}
        self.letter_deg = [1 - 2 * len(m) for m in self.letters]
        names = ["I(" + "".join(lie.basis_names[i] for i in m) + ")" for m in self.letters]
        self.fla = FreeLieAlgebra(self.letter_deg, names, cutoff)
        self._ad_letter = [[self._ad_letter_compute(a, i) for i in range(len(self.letters))]
                           for a in range(lie.dim)]
        self._d_letter = [self._d_letter_compute(i) for i in range(len(self.letters))]
        self._d_word_cache: dict = {}
        if ext is not None:
            ext.validate(lie)

    # -- letters ----------------------------------------------------------

    def _ad_letter_compute(self, a: int, i: int) -> dict:
        return {self.letter_index[m]: v for m, v in ad_sym(self.lie, a, self.letters[i]).items()}

    def _d_letter_compute(self, i: int) -> dict:
        """d of a letter of layer >= 2 as words of length 2, plus central terms."""
        m = self.letters[i]
        out: dict = {}
        if len(m) >= 2:
            w = Q(1, multiset_mult(m))
            for m1, m2 in sub_multisets(m):
                c = w * multiset_mult(m1) * multiset_mult(m2)
                add_term(out, ("w", (self.letter_index[m1], self.letter_index[m2])), c)
        if self.ext is not None:
            for j, v in self.ext.q.get(m, {}).items():
                add_term(out, ("c", j), v)
        return out

    def generator(self, m: Sequence[int]) -> dict:
        """The symbol I(e_m) for a multiset m."""
        m = tuple(sorted(m))
        if m not in self.letter_index:
            raise CutoffRefused(f"I(e{m}) has degree {1 - 2 * len(m)}, below -{self.cutoff}")
        return {("w", (self.letter_index[m],)): ONE}

    def l(self, x: Mapping) -> dict:
        return {("l", a): Q(v) for a, v in x.items() if v}

    def i_layer(self, x: Mapping, k: int) -> dict:
        """I(x^k) = sum_m mult(m) x^m I(e_m) for x in g given as {a: coef}."""
        out: dict = {}
        for m in multisets(self.lie.dim, k):
            c = Q(multiset_mult(m))
            for a in m:
                c *= Q(x.get(a, 0))
                if not c:
                    break
            if c:
                add_term(out, ("w", (self.letter_index[m],)), c)
        return out

    # -- degrees and brackets --------------------------------------------

    def word_degree(self, w: tuple) -> int:
        ld = self.letter_deg
        return sum(ld[i] for i in w)

    def deg(self, key) -> int:
        t = key[0]
        if t == "l":
            return 0
        if t == "w":
            return self.word_degree(key[1])
        return self.ext.degrees[key[1]]

    def _ad_word(self, a: int, w: tuple) -> dict:
        out: dict = {}
        ad = self._ad_letter[a]
        for j, letter in enumerate(w):
            for l2, v in ad[letter].items():
                add_term(out, w[:j] + (l2,) + w[j + 1:], v)
        return out

    def bracket_keys(self, a, b) -> dict:
        ta, tb = a[0], b[0]
        if ta == "c" or tb == "c":
            return {}
        if ta == "l":
            if tb == "l":
                return {("l", c): v for c, v in self.lie.bracket_basis(a[1], b[1]).items()}
            return {("w", w): v for w, v in self._ad_word(a[1], b[1]).items()}
        if tb == "l":
            return {("w", w): -v for w, v in self._ad_word(b[1], a[1]).items()}
        u, v = a[1], b[1]
        du, dv = self.word_degree(u), self.word_degree(v)
        if du + dv < -self.cutoff:
            raise CutoffRefused(f"bracket of degree {du + dv} falls below -{self.cutoff}")
        out = {("w", u + v): ONE}
        add_term(out, ("w", v + u), -koszul(du, dv))
        return out

    # -- differential ----------------------------------------------------

    def _d_word(self, w: tuple) -> dict:
        """d of a word in the enveloping algebra, l and c factors pushed right.

        Keys: ('w', word), ('lt', word, a) for word*l(e_a), ('ct', word, j).
        """
        hit = self._d_word_cache.get(w)
        if hit is not None:
            return hit
        out: dict = {}
        for i, letter in enumerate(w):
            sign = -1 if i & 1 else 1
            pre, post = w[:i], w[i + 1:]
            m = self.letters[letter]
            if len(m) == 1:
                a = m[0]
                add_term(out, ("lt", pre + post, a), sign)
                for w2, v in self._ad_word(a, post).items():
                    add_term(out, ("w", pre + w2), sign * v)
            for key, v in self._d_letter[letter].items():
                if key[0] == "w":
                    add_term(out, ("w", pre + key[1] + post), sign * v)
                else:
                    add_term(out, ("ct", pre + post, key[1]), sign * v)
        self._d_word_cache[w] = out
        return out

    def d(self, u: Mapping) -> dict:
        raw: dict = {}
        out: dict = {}
        for key, c in u.items():
            t = key[0]
            if t == "w":
                add_into(raw, self._d_word(key[1]), c)
            elif t == "c":
                for j, v in self.ext.d_center(key[1]).items():
                    add_term(out, ("c", j), c * v)
        for key, c in raw.items():
            t = key[0]
            if t == "w":
                out[key] = c
            elif key[1]:
                raise ValueError(f"input is not a Lie element: d leaves {key} with coefficient {c}")
            elif t == "lt":
                add_term(out, ("l", key[2]), c)
            else:
                add_term(out, ("c", key[2]), c)
        return out

    # -- bases -----------------------------------------------------------

    def basis(self, degree: int) -> list[dict]:
        if degree > 0:
            return []
        if degree < -self.cutoff:
            raise CutoffRefused(f"degree {degree} is below the cutoff -{self.cutoff}")
        out = []
        if degree == 0:
            out = [{("l", a): ONE} for a in range(self.lie.dim)]
        else:
            out = [{("w", w): c for w, c in v.items()} for v in self.fla.component(degree)]
        if self.ext is not None:
            out += [{("c", j): ONE} for j, dg in enumerate(self.ext.degrees) if dg == degree]
        return out

    def dim(self, degree: int) -> int:
        return len(self.basis(degree))

    def dims(self) -> dict[int, int]:
        return {k: self.dim(k) for k in range(0, -self.cutoff - 1, -1)}

    def format(self, u: Mapping) -> str:
        names = self.fla.names
        parts = []
        for key in sorted(u, key=_sort_key):
            c = u[key]
            if key[0] == "l":
                s = f"l({self.lie.basis_names[key[1]]})"
            elif key[0] == "w":
                s = "".join(names[i] for i in key[1])
            else:
                s = f"c{key[1]}"
            parts.append(f"({c})*{s}")
        return " + ".join(parts) if parts else "0"


def _sort_key(key):
    return (key[0], key[1:]) if key[0] != "w" else ("w", (len(key[1]),) + key[1])


def build_dg(lie: LieData, cutoff: int, verify: bool = True) -> DgAlgebra:
    D = DgAlgebra(lie, cutoff)
    if verify:
        bad = next(verify_dg(D), None)
        if bad is not None:
            raise AssertionError(f"Dg relation failed: {bad}")
    return D


def d_p(lie: LieData, p: InvariantPolynomial, cutoff: int, verify: bool = True) -> DgAlgebra:
    """D_p g: Dg extended by one central line of degree 2 - 2n along p."""
    return central_extension(lie, polynomial_extension(p), cutoff, verify)


def central_extension(lie: LieData, ext: CentralExtensionData, cutoff: int,
                      verify: bool = True) -> DgAlgebra:
    D = DgAlgebra(lie, cutoff, ext)
    if verify:
        bad = next(verify_dg(D, jacobi_floor=min(cutoff, 5)), None)
        if bad is not None:
            raise AssertionError(f"extension relation failed: {bad}")
    return D


def all_basis(D: DgAlgebra, floor: int | None = None) -> list[dict]:
    lo = -D.cutoff if floor is None else max(floor, -D.cutoff)
    out = []
    for k in range(0, lo - 1, -1):
        out.extend(D.basis(k))
    return out


def verify_dg(D: DgAlgebra, jacobi_floor: int | None = None):
    """Yield (relation, witness) for every failed defining relation of Dg.

    Checks the generator relations, the generating-function identity for
    d i(x) on a basis-sum test vector, d^2 = 0, graded antisymmetry and the
    Leibniz rule on all basis pairs that stay above the cutoff, and Jacobi on
    basis triples down to ``jacobi_floor`` (default: the cutoff).
    """
    L = D.lie
    n = L.dim
    for a in range(n):
        if D.d(D.generator((a,))) != {("l", a): ONE}:
            yield "dI(x) = l(x)", a
        if D.d({("l", a): ONE}):
            yield "dl(x) = 0", a
        for m in D.letters:
            lhs = D.bracket({("l", a): ONE}, D.generator(m))
            rhs = {("w", (D.letter_index[m2],)): v for m2, v in ad_sym(L, a, m).items()}
            if sub(lhs, rhs):
                yield "[l(x),I(u)] = I(ad_x u)", (a, m)
    for x in _test_vectors(n):
        r = generating_function_residual(D, x)
        if r is not None:
            yield "d i(x) = [i(x),i(x)]/2 + l(x)", r
    floor = -D.cutoff
    elems = all_basis(D)
    degs = [D.degree_of(u) for u in elems]
    for j, u in enumerate(elems):
        r = D.d(D.d(u))
        if r:
            yield "d^2 = 0", (degs[j], first_term(r))
    jf = floor if jacobi_floor is None else -jacobi_floor
    yield from dgla_residuals(D, [u for u, dg in zip(elems, degs) if dg >= max(jf, floor)],
                              degree_floor=floor)


def _test_vectors(n: int) -> list[dict]:
    return [{a: Q(a + 1) for a in range(n)}, {a: Q((-1) ** a, a + 2) for a in range(n)}]


def generating_function_residual(D: DgAlgebra, x: Mapping):
    """Compare d I(x^k) with (1/2) sum_s [I(x^s), I(x^(k-s))] (+ l(x), + q(x^k))."""
    kmax = (D.cutoff + 1) // 2
    layers = {k: D.i_layer(x, k) for k in range(1, kmax + 1)}
    for k in range(1, kmax + 1):
        lhs = D.d(layers[k])
        rhs: dict = {}
        if k == 1:
            rhs = D.l(x)
        for s in range(1, k):
            add_into(rhs, D.bracket(layers[s], layers[k - s]), Q(1, 2))
        if D.ext is not None:
            for m in multisets(D.lie.dim, k):
                qm = D.ext.q.get(m)
                if not qm:
                    continue
                c = Q(multiset_mult(m))
                for a in m:
                    c *= Q(x.get(a, 0))
                for j, v in qm.items():
                    add_term(rhs, ("c", j), c * v)
        r = sub(lhs, rhs)
        if r:
            return k, first_term(r)
    return None


# ---------------------------------------------------------------------------
# cohomology


def _d_map(D: DgAlgebra, k: int) -> SparseLinearMap:
    if k < -D.cutoff:
        return SparseLinearMap((), (), 1, k, D.d, f"d^{k}")
    return SparseLinearMap.from_operator(D.d, D.basis(k), 1, k, name=f"d^{k}")


def acyclicity_report(D: DgAlgebra, k_range: Sequence[int]) -> dict[int, int]:
    """H^k(Dg) for k in k_range; refuses degrees whose computation needs -N-1."""
    out = {}
    for k in k_range:
        if k > 0:
            out[k] = 0
            continue
        if k - 1 < -D.cutoff:
            raise CutoffRefused(f"H^{k} needs degree {k - 1}, below the cutoff -{D.cutoff}; "
                                f"use k >= {1 - D.cutoff}")
    for k in k_range:
        if k > 0:
            continue
        out[k] = cohomology_dim(_d_map(D, k - 1), _d_map(D, k))
    return out


# ---------------------------------------------------------------------------
# projection to the cone


class Projection:
    """pi: Dg -> Cg (or D_p g -> C_p g): l(x) -> L(x), I(x) -> I(x), rest -> 0."""

    def __init__(self, D: DgAlgebra, C: ConeAlgebra):
        self.D = D
        self.C = C

    def __call__(self, u: Mapping) -> dict:
        out: dict = {}
        D = self.D
        for key, c in u.items():
            t = key[0]
            if t == "l":
                add_term(out, ("L", key[1]), c)
            elif t == "w":
                w = key[1]
                if len(w) == 1 and len(D.letters[w[0]]) == 1:
                    add_term(out, ("I", D.letters[w[0]][0]), c)
                elif len(w) == 2 and all(len(D.letters[i]) == 1 for i in w):
                    # Dynkin: the word xy of a Lie element maps to (1/2)[I(x), I(y)]
                    a, b = (D.letters[i][0] for i in w)
                    add_into(out, self.C.bracket_keys(("I", a), ("I", b)), c / 2)
            elif isinstance(self.C, ConePExtension):
                add_term(out, ("c",), c)
        return out

    def residuals(self, elements: Sequence[Mapping] | None = None):
        """Yield witnesses where pi fails to be a chain map or a bracket map."""
        D, C = self.D, self.C
        elems = list(elements) if elements is not None else all_basis(D)
        for j, u in enumerate(elems):
            r = sub(self(D.d(u)), C.d(self(u)))
            if r:
                yield "pi d = d pi", (j, first_term(r))
        degs = [D.degree_of(u) for u in elems]
        for i in range(len(elems)):
            for j in range(i, len(elems)):
                if degs[i] + degs[j] < -D.cutoff:
                    continue
                r = sub(self(D.bracket(elems[i], elems[j])),
                        C.bracket(self(elems[i]), self(elems[j])))
                if r:
                    yield "pi[u,v] = [pi u, pi v]", (i, j, first_term(r))


def projection_pi(D: DgAlgebra, C: ConeAlgebra, verify: bool = True) -> Projection:
    pi = Projection(D, C)
    if verify:
        bad = next(pi.residuals(), None)
        if bad is not None:
            raise AssertionError(f"projection fails: {bad}")
    return pi

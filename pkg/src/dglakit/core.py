"""Exact rational linear algebra on sparse graded vectors.

Vectors are plain dicts mapping hashable, mutually comparable keys to
rationals.  Zero coefficients are never stored.  The helpers below are the
hot path of the whole package, so they work on raw dicts; ``GradedElement``
is the immutable wrapper handed across module boundaries.

Sign convention (used everywhere): the differential is a degree +1
derivation, ``d[a,b] = [da,b] + (-1)^|a| [a,db]``, and brackets satisfy
``[a,b] = -(-1)^(|a||b|) [b,a]``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)


def koszul(a: int, b: int) -> int:
    """The sign (-1)^(a*b)."""
    return -1 if (a & 1) and (b & 1) else 1


def as_rational(value) -> mpq:
    """Parse ints, mpq, Fractions or strings like "3/4" into an exact rational."""
    if isinstance(value, str):
        value = value.strip()
        if "/" in value:
            num, den = value.split("/")
            return mpq(int(num), int(den))
        return mpq(int(value))
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return mpq(int(value.numerator), int(value.denominator))
    return mpq(value)


def format_rational(q) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# raw sparse vectors


def add_into(target: dict, src: Mapping, coef=ONE) -> dict:
    """target += coef * src, in place, dropping zeros."""
    if not coef:
        return target
    for k, v in src.items():
        nv = target.get(k, ZERO) + coef * v
        if nv:
            target[k] = nv
        else:
            target.pop(k, None)
    return target


def add_term(target: dict, key, coef) -> None:
    if not coef:
        return
    nv = target.get(key, ZERO) + coef
    if nv:
        target[key] = nv
    else:
        target.pop(key, None)


def scaled(src: Mapping, coef) -> dict:
    if not coef:
        return {}
    return {k: coef * v for k, v in src.items()}


def lin_comb(pairs: Iterable[tuple]) -> dict:
    """Sum of coef * vector over (coef, vector) pairs."""
    out: dict = {}
    for c, v in pairs:
        add_into(out, v, c)
    return out


def sub(a: Mapping, b: Mapping) -> dict:
    out = dict(a)
    return add_into(out, b, -ONE)


def first_term(v: Mapping):
    """Smallest key and its coefficient, as a failure witness (None if zero)."""
    if not v:
        return None
    k = min(v)
    return k, v[k]


# ---------------------------------------------------------------------------
# typed wrappers


@dataclass(frozen=True, order=True)
class BasisSymbol:
    """A labelled basis vector of fixed degree; ordered by label."""

    label: tuple
    degree: int = field(compare=False)


class GradedElement:
    """Immutable sparse rational combination of basis keys.

    ``degree`` is the declared degree, or None for inhomogeneous or
    undeclared elements.
    """

    __slots__ = ("terms", "degree")

    def __init__(self, terms: Mapping | None = None, degree: int | None = None):
        clean = {k: mpq(v) for k, v in (terms or {}).items() if v}
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "degree", degree)

    def __setattr__(self, name, value):
        raise AttributeError("GradedElement is immutable")

    def __add__(self, other: "GradedElement") -> "GradedElement":
        deg = self.degree if self.degree == other.degree else None
        return GradedElement(add_into(dict(self.terms), other.terms), deg)

    def __sub__(self, other: "GradedElement") -> "GradedElement":
        deg = self.degree if self.degree == other.degree else None
        return GradedElement(sub(self.terms, other.terms), deg)

    def __neg__(self) -> "GradedElement":
        return GradedElement(scaled(self.terms, -ONE), self.degree)

    def __rmul__(self, c) -> "GradedElement":
        return GradedElement(scaled(self.terms, mpq(c)), self.degree)

    def __eq__(self, other) -> bool:
        if isinstance(other, GradedElement):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = [f"{format_rational(self.terms[k])}*{k!r}" for k in sorted(self.terms)]
        return " + ".join(parts)

    def is_homogeneous(self, degree_of: Callable[[Hashable], int]) -> bool:
        degs = {degree_of(k) for k in self.terms}
        if self.degree is None:
            return len(degs) <= 1
        return degs <= {self.degree}


class DegreeMismatch(ValueError):
    pass


class CutoffRefused(ValueError):
    """Raised when an output would fall below an explicit degree cutoff."""


class NotAComplex(ValueError):
    pass


# ---------------------------------------------------------------------------
# elimination


class Echelon:
    """Incremental echelon form with lowest-key pivots.

    Each stored row has its pivot as its smallest key with coefficient 1.
    If ``track`` is set, every row remembers which combination of the
    inserted vectors produced it, which gives kernels and solutions.
    """

    def __init__(self, track: bool = False):
        self.rows: dict = {}
        self.track = track
        self.combos: dict = {}
        self.count = 0

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, v: Mapping, combo: dict | None = None) -> dict:
        v = dict(v)
        rows = self.rows
        heap = [k for k in v if k in rows]
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = heapq.heappop(heap)
            if k in seen:
                continue
            seen.add(k)
            c = v.get(k)
            if not c:
                continue
            row = rows[k]
            for rk, rv in row.items():
                nv = v.get(rk, ZERO) - c * rv
                if nv:
                    if rk not in v and rk in rows and rk not in seen:
                        heapq.heappush(heap, rk)
                    v[rk] = nv
                else:
                    v.pop(rk, None)
            if combo is not None:
                add_into(combo, self.combos[k], -c)
        return v

    def add(self, v: Mapping, label=None) -> bool:
        """Insert v; return True iff it was independent of earlier rows."""
        combo = None
        if self.track:
            combo = {label if label is not None else self.count: ONE}
        self.count += 1
        r = self.reduce(v, combo)
        if not r:
            self.last_kernel = combo
            return False
        p = min(r)
        inv = 1 / r[p]
        if inv != 1:
            r = {k: x * inv for k, x in r.items()}
            if combo is not None:
                combo = {k: x * inv for k, x in combo.items()}
        self.rows[p] = r
        if combo is not None:
            self.combos[p] = combo
        self.last_kernel = None
        return True

    def contains(self, v: Mapping) -> bool:
        return not self.reduce(v)


def rank(vectors: Iterable[Mapping]) -> int:
    e = Echelon()
    for v in vectors:
        e.add(v)
    return len(e)


def independent_subset(vectors: Sequence[Mapping]) -> list[int]:
    """Indices of the vectors kept by greedy elimination in the given order."""
    e = Echelon()
    return [i for i, v in enumerate(vectors) if e.add(v)]


def kernel(images: Sequence[Mapping]) -> list[dict]:
    """Basis of {x : sum_j x_j images[j] = 0}, as dicts over column indices."""
    e = Echelon(track=True)
    out = []
    for j, v in enumerate(images):
        if not e.add(v, j):
            out.append(e.last_kernel)
    return out


def solve_columns(images: Sequence[Mapping], target: Mapping) -> dict | None:
    """Some x with sum_j x_j images[j] = target, or None."""
    e = Echelon(track=True)
    for j, v in enumerate(images):
        e.add(v, j)
    combo: dict = {}
    rest = e.reduce(target, combo)
    if rest:
        return None
    return scaled(combo, -ONE)


# ---------------------------------------------------------------------------
# linear maps between finite graded pieces


@dataclass(frozen=True)
class SparseLinearMap:
    """A linear map restricted to a finite graded piece.

    ``domain`` lists basis vectors of the source piece (in ambient
    coordinates); ``images`` their images.  ``op`` is the underlying
    operator on arbitrary vectors, needed to compose maps.
    """

    domain: tuple
    images: tuple
    degree_shift: int
    domain_degree: int | None = None
    op: Callable[[Mapping], dict] | None = None
    name: str = ""

    @classmethod
    def from_operator(cls, op, domain: Sequence[Mapping], degree_shift: int,
                      domain_degree: int | None = None,
                      degree_of: Callable | None = None, name: str = ""):
        dom = tuple(dict(v) for v in domain)
        imgs = tuple(op(v) for v in dom)
        if degree_of is not None and domain_degree is not None:
            want = domain_degree + degree_shift
            for v, w in zip(dom, imgs):
                for k in w:
                    if degree_of(k) != want:
                        raise DegreeMismatch(
                            f"{name}: image term {k!r} has degree {degree_of(k)}, expected {want}")
        return cls(dom, imgs, degree_shift, domain_degree, op, name)

    @classmethod
    def identity(cls, basis_keys: Sequence, degree: int | None = None):
        dom = tuple({k: ONE} for k in basis_keys)
        return cls(dom, dom, 0, degree, lambda v: dict(v), "id")

    @property
    def dim_domain(self) -> int:
        return len(self.domain)

    def apply(self, x: Mapping) -> dict:
        """Apply to coordinates x over domain indices."""
        out: dict = {}
        for j, c in x.items():
            add_into(out, self.images[j], c)
        return out

    def rank(self) -> int:
        return rank(self.images)


def solve_linear(lmap: SparseLinearMap, target: GradedElement | Mapping):
    """Solve lmap(x) = target.

    Returns a GradedElement in ambient domain coordinates, or None when the
    system is unsolvable.  Pivots are chosen lowest-key first, so the
    answer is deterministic.
    """
    if isinstance(target, GradedElement):
        tdeg, terms = target.degree, target.terms
    else:
        tdeg, terms = None, dict(target)
    if tdeg is not None and lmap.domain_degree is not None:
        want = lmap.domain_degree + lmap.degree_shift
        if tdeg != want:
            raise DegreeMismatch(
                f"target has degree {tdeg}, map sends degree {lmap.domain_degree} to {want}")
    coords = solve_columns(lmap.images, terms)
    if coords is None:
        return None
    vec = lin_comb((c, lmap.domain[j]) for j, c in coords.items())
    return GradedElement(vec, lmap.domain_degree)


def _check_composite(d_in: SparseLinearMap, d_out: SparseLinearMap) -> None:
    if d_out.op is None:
        raise ValueError("d_out needs an operator to check d_out o d_in = 0")
    for j, img in enumerate(d_in.images):
        res = d_out.op(img)
        if res:
            raise NotAComplex(
                f"d_out o d_in != 0 on domain vector #{j} {first_term(d_in.domain[j])}: "
                f"first residual term {first_term(res)}")


def cohomology_dim(d_in: SparseLinearMap, d_out: SparseLinearMap) -> int:
    """dim ker(d_out) - rank(d_in) on the middle piece.

    The domain vectors of ``d_out`` must form a basis of the middle piece and
    contain the image of ``d_in``; both conditions and d_out o d_in = 0 are
    checked first.
    """
    if (d_in.domain_degree is not None and d_out.domain_degree is not None
            and d_in.domain_degree + d_in.degree_shift != d_out.domain_degree):
        raise DegreeMismatch("d_in does not land in the domain of d_out")
    _check_composite(d_in, d_out)
    e = Echelon()
    for v in d_out.domain:
        if not e.add(v):
            raise ValueError("domain vectors of d_out are linearly dependent")
    for j, img in enumerate(d_in.images):
        if not e.contains(img):
            raise ValueError(f"image of d_in vector #{j} leaves the domain of d_out")
    return d_out.dim_domain - d_out.rank() - d_in.rank()


# ---------------------------------------------------------------------------
# tensor algebra words and free graded Lie algebras


def word_mul(u: Mapping, v: Mapping) -> dict:
    out: dict = {}
    for a, x in u.items():
        for b, y in v.items():
            add_term(out, a + b, x * y)
    return out


class FreeLieAlgebra:
    """Free graded Lie algebra on generators of negative degree, inside T(V).

    Words are tuples of generator indices.  A component is spanned by
    brackets [g, b] with g a generator and b a basis element of a higher
    component (equivalently the left-normed brackets), then reduced by rank.
    """

    def __init__(self, gen_degrees: Sequence[int], names: Sequence[str] | None = None,
                 cutoff: int | None = None):
        if any(d >= 0 for d in gen_degrees):
            raise ValueError("free Lie generators must have negative degree")
        self.gen_degrees = tuple(gen_degrees)
        self.names = tuple(names) if names else tuple(f"x{i}" for i in range(len(gen_degrees)))
        self.cutoff = cutoff
        self._components: dict[int, list[dict]] = {}

    def word_degree(self, w: tuple) -> int:
        gd = self.gen_degrees
        return sum(gd[i] for i in w)

    def bracket(self, u: Mapping, v: Mapping) -> dict:
        """Graded commutator of homogeneous tensors."""
        if not u or not v:
            return {}
        du = self.word_degree(next(iter(u)))
        dv = self.word_degree(next(iter(v)))
        out = word_mul(u, v)
        add_into(out, word_mul(v, u), -koszul(du, dv))
        return out

    def component(self, degree: int) -> list[dict]:
        if degree >= 0:
            raise ValueError("components live in negative degrees")
        if self.cutoff is not None and degree < -self.cutoff:
            raise CutoffRefused(f"degree {degree} is below the cutoff -{self.cutoff}")
        if degree in self._components:
            return self._components[degree]
        e = Echelon()
        basis = []
        for i, gd in enumerate(self.gen_degrees):
            if gd == degree:
                v = {(i,): ONE}
                e.add(v)
                basis.append(v)
        for i, gd in enumerate(self.gen_degrees):
            rest = degree - gd
            if rest >= 0 or gd <= degree:
                continue
            for b in self.component(rest):
                v = self.bracket({(i,): ONE}, b)
                if v and e.add(v):
                    basis.append(v)
        self._components[degree] = basis
        return basis

    def dim(self, degree: int) -> int:
        return len(self.component(degree))


def free_lie_component(generators: Sequence[BasisSymbol], target_degree: int,
                       cutoff: int | None = None) -> list[GradedElement]:
    """Ordered basis of the free graded Lie algebra on ``generators`` in one degree.

    Basis elements live in the tensor algebra; their keys are tuples of
    generator labels.
    """
    gens = sorted(generators)
    if any(g.degree >= 0 for g in gens):
        raise ValueError("all generator degrees must be negative")
    if target_degree >= 0:
        raise ValueError("target degree must be negative")
    if cutoff is not None and target_degree < -cutoff:
        raise CutoffRefused(f"degree {target_degree} is below the cutoff -{cutoff}")
    fla = FreeLieAlgebra([g.degree for g in gens])
    labels = [g.label for g in gens]
    out = []
    for v in fla.component(target_degree):
        out.append(GradedElement({tuple(labels[i] for i in w): c for w, c in v.items()},
                                 target_degree))
    return out


# ---------------------------------------------------------------------------
# DGLAs given by bracket and differential on basis keys


class Dgla:
    """Base class: subclasses define deg, bracket_keys and d_key.

    Elements are sparse dicts over basis keys.  ``d`` may be overridden when
    the differential is only defined on whole Lie elements.
    """

    name = "dgla"

    def deg(self, key) -> int:
        raise NotImplementedError

    def bracket_keys(self, a, b) -> dict:
        raise NotImplementedError

    def d_key(self, a) -> dict:
        raise NotImplementedError

    def d(self, u: Mapping) -> dict:
        out: dict = {}
        for k, c in u.items():
            add_into(out, self.d_key(k), c)
        return out

    def bracket(self, u: Mapping, v: Mapping) -> dict:
        out: dict = {}
        for a, x in u.items():
            for b, y in v.items():
                r = self.bracket_keys(a, b)
                if r:
                    add_into(out, r, x * y)
        return out

    def degree_of(self, u: Mapping) -> int | None:
        degs = {self.deg(k) for k in u}
        return degs.pop() if len(degs) == 1 else None


def dgla_residuals(A: Dgla, elements: Sequence[Mapping], degree_floor: int | None = None,
                   jacobi: bool = True):
    """Check the DGLA axioms on a list of homogeneous elements.

    Yields (axiom name, witness) for every failure.  Pairs or triples whose
    total degree would drop below ``degree_floor`` are skipped.
    """
    degs = [A.degree_of(u) for u in elements]
    n = len(elements)
    for i in range(n):
        u = elements[i]
        du = A.d(u)
        if A.d(du):
            yield "d^2=0", (i, first_term(A.d(du)))
        for j in range(i, n):
            v = elements[j]
            if degree_floor is not None and degs[i] + degs[j] < degree_floor:
                continue
            uv = A.bracket(u, v)
            vu = A.bracket(v, u)
            if add_into(dict(uv), vu, koszul(degs[i], degs[j])):
                yield "antisymmetry", (i, j)
            lhs = A.d(uv)
            rhs = A.bracket(du, v)
            add_into(rhs, A.bracket(u, A.d(v)), -ONE if degs[i] & 1 else ONE)
            if sub(lhs, rhs):
                yield "leibniz", (i, j)
    if not jacobi:
        return
    for i in range(n):
        for j in range(i, n):
            if degree_floor is not None and degs[i] + degs[j] < degree_floor:
                continue
            for k in range(j, n):
                if degree_floor is not None and degs[i] + degs[j] + degs[k] < degree_floor:
                    continue
                r = jacobi_residual(A, elements[i], elements[j], elements[k],
                                    degs[i], degs[j], degs[k])
                if r:
                    yield "jacobi", (i, j, k)


def jacobi_residual(A: Dgla, x, y, z, dx, dy, dz) -> dict:
    """[x,[y,z]] - [[x,y],z] - (-1)^{|x||y|}[y,[x,z]]."""
    out = A.bracket(x, A.bracket(y, z))
    add_into(out, A.bracket(A.bracket(x, y), z), -ONE)
    add_into(out, A.bracket(y, A.bracket(x, z)), -koszul(dx, dy))
    return out

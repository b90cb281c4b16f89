"""Finite-dimensional Lie algebras given by rational structure constants."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path
from typing import Mapping, Sequence

from .core import ONE, ZERO, Q, add_into, add_term, as_rational, format_rational, kernel


def multiset_mult(m: Sequence[int]) -> int:
    """Number of distinct orderings of a sorted multiset."""
    out = factorial(len(m))
    for _, grp in itertools.groupby(m):
        out //= factorial(len(list(grp)))
    return out


def multisets(dim: int, k: int) -> list[tuple]:
    return list(itertools.combinations_with_replacement(range(dim), k))


class LieValidationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LieData:
    """A Lie algebra with basis e_0..e_{dim-1} and [e_a, e_b] = f^c_ab e_c.

    ``constants`` maps (a, b) with a < b to {c: f^c_ab}; the other order
    is filled in by antisymmetry.  ``rep`` optionally holds matrices of a
    faithful representation (used for trace forms).
    """

    name: str
    dim: int
    basis_names: tuple
    constants: Mapping
    rep: tuple | None = None
    _table: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        table = {}
        for (a, b), col in self.constants.items():
            col = {c: Q(v) for c, v in col.items() if v}
            if a == b:
                if col:
                    raise LieValidationError(f"[e{a},e{a}] must vanish")
                continue
            table[(a, b)] = col
            table[(b, a)] = {c: -v for c, v in col.items()}
        object.__setattr__(self, "_table", table)

    def bracket_basis(self, a: int, b: int) -> dict:
        return self._table.get((a, b), {})

    def bracket(self, x: Mapping, y: Mapping) -> dict:
        out: dict = {}
        for a, xa in x.items():
            for b, yb in y.items():
                col = self._table.get((a, b))
                if col:
                    add_into(out, col, xa * yb)
        return out

    def f(self, c: int, a: int, b: int):
        """The structure constant f^c_ab."""
        return self._table.get((a, b), {}).get(c, ZERO)

    def is_abelian(self) -> bool:
        return not self._table

    def ad_matrix(self, a: int) -> dict:
        """ad(e_a) as {(row c, col b): f^c_ab}."""
        out = {}
        for b in range(self.dim):
            for c, v in self.bracket_basis(a, b).items():
                out[(c, b)] = v
        return out

    def diagonal_elements(self) -> list[tuple[int, list]]:
        """Basis elements acting diagonally in the adjoint representation.

        Returns (a, eigenvalues) pairs; used to prefilter invariant
        computations by weight.
        """
        out = []
        for a in range(self.dim):
            eig = [ZERO] * self.dim
            ok = True
            for b in range(self.dim):
                col = self.bracket_basis(a, b)
                if any(c != b for c in col):
                    ok = False
                    break
                eig[b] = col.get(b, ZERO)
            if ok and any(eig):
                out.append((a, eig))
        return out

    def killing(self, a: int, b: int):
        """tr(ad e_a ad e_b)."""
        tot = ZERO
        for c in range(self.dim):
            for d, v in self.bracket_basis(b, c).items():
                tot += self.f(c, a, d) * v
        return tot


def check_jacobi(L: LieData) -> tuple[bool, tuple | None]:
    """True iff Jacobi holds on every basis triple; otherwise the first failing triple."""
    for a, b, c in itertools.combinations(range(L.dim), 3):
        tot: dict = {}
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            add_into(tot, L.bracket({x: ONE}, L.bracket_basis(y, z)))
        if tot:
            return False, (a, b, c)
    return True, None


def check_antisymmetry(constants: Mapping) -> tuple[bool, tuple | None]:
    for (a, b), col in constants.items():
        other = constants.get((b, a))
        if other is None:
            continue
        for c in set(col) | set(other):
            if Q(col.get(c, 0)) + Q(other.get(c, 0)):
                return False, (a, b, c)
    return True, None


def make_lie(name: str, basis_names: Sequence[str], constants: Mapping, rep=None,
             validate: bool = True) -> LieData:
    ok, w = check_antisymmetry(constants)
    if not ok:
        raise LieValidationError(f"{name}: constants not antisymmetric at {w}")
    # keep one orientation per pair
    canon = {}
    for (a, b), col in constants.items():
        if a < b:
            canon[(a, b)] = dict(col)
        elif (b, a) not in constants and a != b:
            canon[(b, a)] = {c: -Q(v) for c, v in col.items()}
    L = LieData(name, len(basis_names), tuple(basis_names), canon, rep)
    if validate:
        ok, w = check_jacobi(L)
        if not ok:
            raise LieValidationError(f"{name}: Jacobi fails on basis triple {w}")
    return L


def _from_matrices(name: str, names: Sequence[str], mats: Sequence) -> LieData:
    n = len(mats)
    size = len(mats[0])
    flat = [[Q(x) for row in m for x in row] for m in mats]
    images = [{i: v for i, v in enumerate(f) if v} for f in flat]

    def mul(x, y):
        return [[sum((x[i][k] * y[k][j] for k in range(size)), ZERO) for j in range(size)]
                for i in range(size)]

    def coords(m):
        vec = {i: v for i, v in enumerate(x for row in m for x in row) if v}
        from .core import solve_columns
        sol = solve_columns(images, vec)
        if sol is None:
            raise LieValidationError("matrix basis not closed under commutators")
        return sol

    qm = [[[Q(x) for x in row] for row in m] for m in mats]
    consts = {}
    for a in range(n):
        for b in range(a + 1, n):
            p, r = mul(qm[a], qm[b]), mul(qm[b], qm[a])
            comm = [[p[i][j] - r[i][j] for j in range(size)] for i in range(size)]
            col = coords(comm)
            if col:
                consts[(a, b)] = col
    return make_lie(name, names, consts, rep=tuple(tuple(tuple(r) for r in m) for m in qm))


def _unit(i, j, n=3):
    return [[1 if (r, c) == (i, j) else 0 for c in range(n)] for r in range(n)]


def _sl2() -> LieData:
    e = [[0, 1], [0, 0]]
    h = [[1, 0], [0, -1]]
    f = [[0, 0], [1, 0]]
    return _from_matrices("sl2", ("e", "h", "f"), (e, h, f))


def _sl3() -> LieData:
    E = _unit
    h1 = [[1, 0, 0], [0, -1, 0], [0, 0, 0]]
    h2 = [[0, 0, 0], [0, 1, 0], [0, 0, -1]]
    mats = (E(0, 1), E(0, 2), E(1, 2), h1, h2, E(1, 0), E(2, 0), E(2, 1))
    names = ("e12", "e13", "e23", "h1", "h2", "e21", "e31", "e32")
    return _from_matrices("sl3", names, mats)


def _so3() -> LieData:
    consts = {(0, 1): {2: 1}, (1, 2): {0: 1}, (0, 2): {1: -1}}
    return make_lie("so3", ("e1", "e2", "e3"), consts)


def builtin(name: str) -> LieData:
    """One of abelian_<n>, sl2, so3, sl3."""
    if name == "sl2":
        return _sl2()
    if name == "sl3":
        return _sl3()
    if name == "so3":
        return _so3()
    if name.startswith("abelian_"):
        try:
            n = int(name.split("_", 1)[1])
        except ValueError:
            n = 0
        if n >= 1:
            return make_lie(name, tuple(f"x{i}" for i in range(n)), {})
    raise KeyError(f"unknown Lie algebra {name!r}")


BUILTIN_NAMES = ("abelian_1", "abelian_2", "abelian_3", "sl2", "so3", "sl3")


# ---------------------------------------------------------------------------
# definition files


def load_lie_file(path) -> LieData:
    """Read a JSON definition: name, dim, basis names, nonzero brackets.

    ``brackets`` is a list of [a, b, {c: "num/den"}] entries using basis
    names; only one ordering of each pair is needed.
    """
    raw = json.loads(Path(path).read_text())
    names = list(raw["basis"])
    if int(raw["dim"]) != len(names):
        raise LieValidationError("dim does not match the number of basis names")
    idx = {n: i for i, n in enumerate(names)}
    consts: dict = {}
    for a, b, col in raw.get("brackets", []):
        key = (idx[a], idx[b])
        consts[key] = {idx[c]: as_rational(v) for c, v in col.items()}
    return make_lie(raw.get("name", Path(path).stem), names, consts)


def dump_lie(L: LieData) -> str:
    br = []
    for (a, b), col in sorted(L.constants.items()):
        if col:
            br.append([L.basis_names[a], L.basis_names[b],
                       {L.basis_names[c]: format_rational(v) for c, v in sorted(col.items())}])
    doc = {"name": L.name, "dim": L.dim, "basis": list(L.basis_names), "brackets": br}
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# symmetric powers and invariant polynomials


def ad_sym(L: LieData, a: int, m: tuple) -> dict:
    """ad(e_a) acting on the monomial e^m of S^k g (m a sorted multiset)."""
    out: dict = {}
    for j, b in enumerate(m):
        rest = m[:j] + m[j + 1:]
        for c, v in L.bracket_basis(a, b).items():
            add_term(out, tuple(sorted(rest + (c,))), v)
    return out


class InvariantError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InvariantPolynomial:
    """A symmetric n-form on g, stored as the polynomial P(y) = p(y,...,y).

    ``coeffs`` maps sorted multisets m to the coefficient of y^m, so the
    symmetric tensor value is p(e_m) = coeffs[m] / mult(m).
    """

    lie: LieData
    degree: int
    coeffs: Mapping

    def tensor(self, idx: Sequence[int]):
        m = tuple(sorted(idx))
        c = self.coeffs.get(m, ZERO)
        return c / multiset_mult(m) if c else ZERO

    def __call__(self, *vectors: Mapping):
        """Multilinear evaluation on vectors given as {basis index: coef}."""
        if len(vectors) != self.degree:
            raise ValueError(f"expected {self.degree} arguments")
        tot = ZERO
        for combo in itertools.product(*(v.items() for v in vectors)):
            w = ONE
            for _, c in combo:
                w *= c
            tot += w * self.tensor([i for i, _ in combo])
        return tot

    def scaled(self, c) -> "InvariantPolynomial":
        return InvariantPolynomial(self.lie, self.degree,
                                   {m: Q(c) * v for m, v in self.coeffs.items() if v})

    def is_zero(self) -> bool:
        return not any(self.coeffs.values())

    def invariance_residual(self) -> tuple | None:
        """First (basis x, monomial, coefficient) where invariance fails, or None."""
        for a in range(self.lie.dim):
            r = _poly_derivation(self.lie, a, self.coeffs)
            if r:
                m = min(r)
                return a, m, r[m]
        return None


def _poly_derivation(L: LieData, a: int, poly: Mapping) -> dict:
    """Apply y^j -> sum_b f^j_ab y^b as a derivation of Q[y]."""
    out: dict = {}
    for m, c in poly.items():
        for j, b in enumerate(m):
            if j and m[j - 1] == b:
                continue
            mult = m.count(b)
            rest = m[:j] + m[j + 1:]
            for d in range(L.dim):
                v = L.f(b, a, d)
                if v:
                    add_term(out, tuple(sorted(rest + (d,))), c * mult * v)
    return out


def invariant_polynomials(L: LieData, n: int) -> list[InvariantPolynomial]:
    """Ordered basis of (S^n g*)^g from the linear ad-invariance system."""
    if n < 1:
        raise ValueError("n must be positive")
    mons = multisets(L.dim, n)
    images = []
    for m in mons:
        col: dict = {}
        for a in range(L.dim):
            for k, v in _poly_derivation(L, a, {m: ONE}).items():
                col[(a, k)] = v
        images.append(col)
    out = []
    for vec in kernel(images):
        out.append(InvariantPolynomial(L, n, {mons[j]: c for j, c in sorted(vec.items())}))
    return out


def from_tensor(L: LieData, n: int, fn) -> InvariantPolynomial:
    """Build from a symmetric tensor callable fn(i_1..i_n), checking invariance."""
    coeffs = {}
    for m in multisets(L.dim, n):
        v = Q(fn(*m))
        if v:
            coeffs[m] = v * multiset_mult(m)
    p = InvariantPolynomial(L, n, coeffs)
    r = p.invariance_residual()
    if r is not None:
        raise InvariantError(f"polynomial is not ad-invariant: residual at {r}")
    return p


def killing_form(L: LieData) -> InvariantPolynomial:
    """The quadratic trace form of the adjoint representation (p(h,h)=8 on sl2)."""
    return from_tensor(L, 2, L.killing)


def trace_cubic(L: LieData) -> InvariantPolynomial:
    """Symmetrized tr(xyz) in the stored representation."""
    if L.rep is None:
        raise ValueError(f"{L.name} carries no matrix representation")
    mats = L.rep
    size = len(mats[0])

    def tr3(a, b, c):
        tot = ZERO
        A, B, C = mats[a], mats[b], mats[c]
        for i in range(size):
            for j in range(size):
                if not A[i][j]:
                    continue
                for k in range(size):
                    if B[j][k] and C[k][i]:
                        tot += A[i][j] * B[j][k] * C[k][i]
        return tot

    return from_tensor(L, 3, lambda a, b, c: (tr3(a, b, c) + tr3(a, c, b)) / 2)


def quadratic_from_tensor(L: LieData, table: Mapping) -> InvariantPolynomial:
    """Quadratic form from {(a,b): value}, symmetrized; rejects non-invariant input."""
    return from_tensor(L, 2, lambda a, b: (Q(table.get((a, b), 0)) + Q(table.get((b, a), 0))) / 2)


def builtin_polynomial(L: LieData, selector: str | int = 0) -> InvariantPolynomial:
    """Named invariant: "killing", "cubic", or an index "n:i" into invariant_polynomials."""
    if selector in ("killing", 0, "0"):
        return killing_form(L)
    if selector == "cubic":
        return trace_cubic(L)
    if isinstance(selector, str) and ":" in selector:
        n, i = (int(x) for x in selector.split(":"))
        return invariant_polynomials(L, n)[i]
    raise KeyError(f"unknown polynomial selector {selector!r}")

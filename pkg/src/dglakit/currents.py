"""Form models, the tensor DGLA Omega(M) (x) A, derived brackets and current cocycles.

Forms and DGLA elements are sparse dicts.  A key of Omega(M) (x) A is a pair
(form key, A key); the bracket is (w1 a1, w2 a2) -> (-1)^{|a1||w2|} w1 w2 [a1, a2]
and d(w a) = dw a + (-1)^{|w|} w da.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .coneweil import CeAlgebra, ConeAlgebra, _merge_odd
from .core import (ONE, ZERO, Q, Dgla, SparseLinearMap, add_into, add_term,
                   format_rational, koszul, rank, scaled, solve_columns, sub)
from .dmodel import DgAlgebra, polynomial_extension
from .liecore import InvariantError, InvariantPolynomial, LieData, ad_sym

COORDS = ("u", "v", "w")


# ---------------------------------------------------------------------------
# form models


class FormModel:
    """A graded-commutative differential algebra of forms with sparse elements."""

    name = "forms"
    dimension = 0

    def deg(self, key) -> int:
        raise NotImplementedError

    def mul_keys(self, a, b) -> dict:
        raise NotImplementedError

    def d_key(self, key) -> dict:
        raise NotImplementedError

    def one(self) -> dict:
        raise NotImplementedError

    def candidates(self, degree: int, support: Sequence) -> list:
        """Basis keys of the given degree that d can connect with ``support``."""
        raise NotImplementedError

    def integrate(self, u: Mapping) -> Q:
        raise ValueError(f"{self.name} has no integration functional")

    def random_element(self, rng: random.Random, degree: int, terms: int = 2) -> dict:
        raise NotImplementedError

    def mul(self, u: Mapping, v: Mapping) -> dict:
        out: dict = {}
        for a, x in u.items():
            for b, y in v.items():
                add_into(out, self.mul_keys(a, b), x * y)
        return out

    def d(self, u: Mapping) -> dict:
        out: dict = {}
        for k, c in u.items():
            add_into(out, self.d_key(k), c)
        return out

    def format(self, u: Mapping) -> str:
        if not u:
            return "0"
        return " + ".join(f"({format_rational(c)})*{self.key_name(k)}" for k, c in sorted(u.items()))

    def key_name(self, key) -> str:
        return str(key)


def _trig_mul1(a: tuple, b: tuple) -> list:
    """Product of two one-variable modes (kind, k) via product-to-sum."""
    (ka, na), (kb, nb) = a, b
    half = Q(1, 2)
    if ka == "c" and kb == "c":
        raw = [("c", na - nb, half), ("c", na + nb, half)]
    elif ka == "s" and kb == "s":
        raw = [("c", na - nb, half), ("c", na + nb, -half)]
    elif ka == "s":
        raw = [("s", na + nb, half), ("s", na - nb, half)]
    else:
        raw = [("s", na + nb, half), ("s", nb - na, half)]
    out: dict = {}
    for kind, k, c in raw:
        if kind == "s":
            if k == 0:
                continue
            if k < 0:
                k, c = -k, -c
        else:
            k = abs(k)
        add_term(out, (kind, k), c)
    return list(out.items())


class TrigModel(FormModel):
    """Trigonometric-polynomial forms on the torus T^dim, coordinates u, v, w.

    A key is (modes, dirs): modes holds one (kind, k) per coordinate with kind
    'c' (cos k) or 's' (sin k, k >= 1); dirs is the increasing tuple of
    coordinates in the wedge of differentials.  The integral is the constant
    Fourier coefficient of the top-degree part, so the total volume is 1.
    """

    def __init__(self, dimension: int):
        if dimension not in (1, 2, 3):
            raise ValueError("trigonometric models exist for dimensions 1, 2, 3")
        self.dimension = dimension
        self.name = "S1" if dimension == 1 else f"T{dimension}"
        self.const = tuple(("c", 0) for _ in range(dimension))

    def deg(self, key) -> int:
        return len(key[1])

    def one(self) -> dict:
        return {(self.const, ()): ONE}

    def mul_keys(self, a, b) -> dict:
        r = _merge_odd(a[1], b[1])
        if r is None:
            return {}
        sign, dirs = r
        partial = [((), Q(sign))]
        for i in range(self.dimension):
            nxt = []
            for modes, c in partial:
                for m, v in _trig_mul1(a[0][i], b[0][i]):
                    nxt.append((modes + (m,), c * v))
            partial = nxt
        out: dict = {}
        for modes, c in partial:
            add_term(out, (modes, dirs), c)
        return out

    def d_key(self, key) -> dict:
        modes, dirs = key
        out: dict = {}
        for j in range(self.dimension):
            if j in dirs:
                continue
            kind, k = modes[j]
            if k == 0:
                continue
            new = ("s", k) if kind == "c" else ("c", k)
            coef = Q(-k) if kind == "c" else Q(k)
            sign = -1 if sum(1 for i in dirs if i < j) % 2 else 1
            nm = modes[:j] + (new,) + modes[j + 1:]
            add_term(out, (nm, tuple(sorted(dirs + (j,)))), sign * coef)
        return out

    def integrate(self, u: Mapping) -> Q:
        top = tuple(range(self.dimension))
        total = ZERO
        for (modes, dirs), c in u.items():
            if dirs != top:
                raise ValueError("integration needs a top-degree form")
            if modes == self.const:
                total += c
        return total

    def _block(self, key) -> tuple:
        return tuple(k for _, k in key[0])

    def candidates(self, degree: int, support: Sequence) -> list:
        import itertools
        blocks = sorted({self._block(k) for k in support})
        out = []
        for freq in blocks:
            per = [[("c", 0)] if k == 0 else [("c", k), ("s", k)] for k in freq]
            for modes in itertools.product(*per):
                for dirs in itertools.combinations(range(self.dimension), degree):
                    out.append((tuple(modes), dirs))
        return out

    def block_basis(self, freq: tuple, degree: int) -> list:
        return self.candidates(degree, [((tuple(("c", k) for k in freq)), ())])

    def function(self, text: str) -> dict:
        return parse_trig(text, self.dimension)

    def form(self, text: str, dirs: str = "") -> dict:
        idx = tuple(sorted(COORDS.index(ch) for ch in dirs))
        if len(set(idx)) != len(idx) or any(i >= self.dimension for i in idx):
            raise ValueError(f"bad differential directions {dirs!r} for {self.name}")
        return {(modes, idx): c for (modes, _), c in self.function(text).items()}

    def random_element(self, rng: random.Random, degree: int, terms: int = 2, max_mode: int = 2) -> dict:
        import itertools
        out: dict = {}
        dirs_all = list(itertools.combinations(range(self.dimension), degree))
        if not dirs_all:
            return out
        for _ in range(terms):
            modes = []
            for _ in range(self.dimension):
                k = rng.randint(0, max_mode)
                modes.append(("c", 0) if k == 0 else (rng.choice("cs"), k))
            add_term(out, (tuple(modes), rng.choice(dirs_all)), Q(rng.randint(-3, 3)))
        return out

    def key_name(self, key) -> str:
        modes, dirs = key
        parts = []
        for i, (kind, k) in enumerate(modes):
            if k:
                arg = COORDS[i] if k == 1 else f"{k}{COORDS[i]}"
                parts.append(f"{'cos' if kind == 'c' else 'sin'}({arg})")
        s = "*".join(parts) or "1"
        if dirs:
            s += "*" + "^".join("d" + COORDS[i] for i in dirs)
        return s


_TERM = re.compile(r"\s*([+-]?)\s*([^+-]+)")
_FACTOR = re.compile(r"^(cos|sin)\((\d*)\*?([uvw])\)$")


def parse_trig(text: str, dimension: int) -> dict:
    """Parse sums of products like '2*cos(u)*sin(2w) - 1/2' into a TrigModel function."""
    M = TrigModel(dimension)
    s = text.replace(" ", "")
    if s in ("cos", "sin"):
        s += "(u)"
    if not s:
        raise ValueError("empty trig polynomial")
    out: dict = {}
    pos = 0
    for m in _TERM.finditer(s):
        if m.start() != pos:
            raise ValueError(f"cannot parse {text!r}")
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        term = {(M.const, ()): Q(sign)}
        for fac in m.group(2).split("*"):
            if not fac:
                raise ValueError(f"cannot parse {text!r}")
            fm = _FACTOR.match(fac)
            if fm:
                i = COORDS.index(fm.group(3))
                if i >= dimension:
                    raise ValueError(f"coordinate {fm.group(3)} not on {M.name}")
                k = int(fm.group(2) or 1)
                modes = list(M.const)
                modes[i] = ("c" if fm.group(1) == "cos" else "s", k)
                if modes[i] == ("s", 0):
                    term = {}
                    break
                term = M.mul(term, {(tuple(modes), ()): ONE})
            else:
                try:
                    c = Fraction(fac)
                except ValueError:
                    raise ValueError(f"unknown factor {fac!r} in {text!r}") from None
                term = scaled(term, Q(c.numerator, c.denominator))
        add_into(out, term)
    if pos != len(s):
        raise ValueError(f"cannot parse {text!r}")
    return out


class ExteriorModel(FormModel):
    """The CE algebra of g as a form model (invariant forms on the group)."""

    def __init__(self, lie: LieData):
        self.ce = CeAlgebra(lie)
        self.lie = lie
        self.dimension = lie.dim
        self.name = f"CE({lie.name})"

    def deg(self, key) -> int:
        return len(key[0])

    def one(self) -> dict:
        return {self.ce.alg.one: ONE}

    def mul_keys(self, a, b) -> dict:
        r = self.ce.alg.mul_keys(a, b)
        return {} if r is None else {r[1]: Q(r[0])}

    def d_key(self, key) -> dict:
        return self.ce.d({key: ONE})

    def integrate(self, u: Mapping) -> Q:
        top = (tuple(range(self.dimension)), ())
        for k in u:
            if len(k[0]) != self.dimension:
                raise ValueError("integration needs a top-degree form")
        return u.get(top, ZERO)

    def candidates(self, degree: int, support: Sequence) -> list:
        return self.ce.basis(degree) if 0 <= degree <= self.dimension else []

    def random_element(self, rng: random.Random, degree: int, terms: int = 2) -> dict:
        basis = self.candidates(degree, [])
        out: dict = {}
        for _ in range(terms if basis else 0):
            add_term(out, rng.choice(basis), Q(rng.randint(-3, 3)))
        return out

    def key_name(self, key) -> str:
        return self.ce.alg.name(key)


class TableModel(FormModel):
    """A finite form model given by basis labels, a product table and a differential."""

    def __init__(self, labels, degrees, products, differential, integral=None, name="table",
                 dimension=0):
        self.labels = list(labels)
        self.degrees = dict(zip(self.labels, degrees))
        self.products = products
        self.diff = differential
        self.integral = integral
        self.name = name
        self.dimension = dimension
        self.unit = next((l for l in self.labels if self.degrees[l] == 0 and
                          all(self.products.get((l, b)) == {b: ONE} for b in self.labels)), None)
        if self.unit is None:
            raise ValueError("the product table has no unit")

    def deg(self, key) -> int:
        return self.degrees[key]

    def one(self) -> dict:
        return {self.unit: ONE}

    def mul_keys(self, a, b) -> dict:
        return dict(self.products.get((a, b), {}))

    def d_key(self, key) -> dict:
        return dict(self.diff.get(key, {}))

    def integrate(self, u: Mapping) -> Q:
        if self.integral is None:
            raise ValueError(f"{self.name} has no integration functional")
        return sum((c * self.integral.get(k, ZERO) for k, c in u.items()), ZERO)

    def candidates(self, degree: int, support: Sequence) -> list:
        return [l for l in self.labels if self.degrees[l] == degree]

    def random_element(self, rng: random.Random, degree: int, terms: int = 2) -> dict:
        basis = self.candidates(degree, [])
        out: dict = {}
        for _ in range(terms if basis else 0):
            add_term(out, rng.choice(basis), Q(rng.randint(-3, 3)))
        return out

    def key_name(self, key) -> str:
        return str(key)


def point_model() -> TableModel:
    return TableModel(["1"], [0], {("1", "1"): {"1": ONE}}, {}, {"1": ONE}, "point", 0)


def circle_model() -> TrigModel:
    return TrigModel(1)


def torus_model(dimension: int) -> TrigModel:
    return TrigModel(dimension)


def check_form_model(M: FormModel, keys: Sequence) -> tuple[bool, str | None]:
    """d^2 = 0, Leibniz and graded commutativity on the given keys."""
    for a in keys:
        if M.d(M.d_key(a)):
            return False, f"d^2 != 0 on {M.key_name(a)}"
        for b in keys:
            ab = M.mul_keys(a, b)
            ba = M.mul_keys(b, a)
            if sub(ab, scaled(ba, koszul(M.deg(a), M.deg(b)))):
                return False, f"not graded commutative on {M.key_name(a)}, {M.key_name(b)}"
            lhs = M.d(ab)
            rhs = M.mul(M.d_key(a), {b: ONE})
            add_into(rhs, M.mul({a: ONE}, M.d_key(b)), koszul(M.deg(a), 1))
            if sub(lhs, rhs):
                return False, f"Leibniz fails on {M.key_name(a)}, {M.key_name(b)}"
    return True, None


def load_form_file(path: str) -> FormModel:
    """Read a form model: {"rule": "trig", "dimension": d}, {"rule": "exterior",
    "algebra": name} or {"rule": "table", "basis": [{"label", "degree"}],
    "products": [[a, b, {c: "num/den"}]], "differential": {a: {b: coef}},
    "integral": {a: coef} | null}."""
    from .liecore import builtin
    with open(path) as fh:
        data = json.load(fh)
    rule = data.get("rule")
    if rule == "trig":
        return TrigModel(int(data["dimension"]))
    if rule == "exterior":
        return ExteriorModel(builtin(data["algebra"]))
    if rule == "table":
        labels = [b["label"] for b in data["basis"]]
        degrees = [int(b["degree"]) for b in data["basis"]]
        rat = lambda s: Q(Fraction(str(s)).numerator, Fraction(str(s)).denominator)
        products = {}
        for a, b, res in data["products"]:
            products[(a, b)] = {k: rat(v) for k, v in res.items() if rat(v)}
        diff = {a: {b: rat(v) for b, v in img.items() if rat(v)}
                for a, img in data.get("differential", {}).items()}
        integral = data.get("integral")
        if integral is not None:
            integral = {k: rat(v) for k, v in integral.items()}
        M = TableModel(labels, degrees, products, diff, integral, data.get("name", path),
                       int(data.get("dimension", 0)))
        ok, bad = check_form_model(M, labels)
        if not ok:
            raise ValueError(f"{path}: {bad}")
        return M
    raise ValueError(f"{path}: unknown rule {rule!r}")


# ---------------------------------------------------------------------------
# Omega(M) (x) A


class TensorForms(Dgla):
    """Omega(M) (x) A for a form model M and a DGLA A with a ``basis(degree)`` method."""

    def __init__(self, M: FormModel, A: Dgla, a_basis: Callable | None = None):
        self.M = M
        self.A = A
        self.a_basis = a_basis or A.basis
        self.name = f"{M.name} (x) {A.name}"

    def deg(self, key) -> int:
        return self.M.deg(key[0]) + self.A.deg(key[1])

    def bracket(self, u: Mapping, v: Mapping) -> dict:
        M, A = self.M, self.A
        out: dict = {}
        for (w1, a1), x in u.items():
            da1 = A.deg(a1)
            for (w2, a2), y in v.items():
                ww = M.mul_keys(w1, w2)
                if not ww:
                    continue
                aa = A.bracket({a1: ONE}, {a2: ONE})
                if not aa:
                    continue
                c = x * y * koszul(da1, M.deg(w2))
                for wk, wc in ww.items():
                    for ak, ac in aa.items():
                        add_term(out, (wk, ak), c * wc * ac)
        return out

    def bracket_keys(self, a, b) -> dict:
        return self.bracket({a: ONE}, {b: ONE})

    def d(self, u: Mapping) -> dict:
        M, A = self.M, self.A
        out: dict = {}
        by_form: dict = {}
        for (w, a), c in u.items():
            for wk, wc in M.d_key(w).items():
                add_term(out, (wk, a), c * wc)
            by_form.setdefault(w, {})[a] = c
        # A.d may only accept whole Lie elements, so apply it per form key
        for w, a_part in by_form.items():
            s = koszul(M.deg(w), 1)
            for ak, ac in A.d(a_part).items():
                add_term(out, (w, ak), s * ac)
        return out

    def d_key(self, a) -> dict:
        return self.d({a: ONE})

    def tensor(self, form: Mapping, a: Mapping) -> dict:
        out: dict = {}
        for w, x in form.items():
            for k, y in a.items():
                add_term(out, (w, k), x * y)
        return out

    def candidates(self, degree: int, support: Sequence) -> list[dict]:
        """A spanning set of the finitely supported part of degree ``degree``
        that d can connect with the form keys in ``support``."""
        out = []
        forms = [k[0] for k in support]
        for j in range(0, self.M.dimension + 1):
            fkeys = self.M.candidates(j, forms)
            if not fkeys:
                continue
            # a truncated A raises CutoffRefused here instead of dropping terms
            abasis = self.a_basis(degree - j)
            for w in fkeys:
                for a in abasis:
                    out.append({(w, k): c for k, c in a.items()})
        return out

    def primitive(self, X: Mapping) -> dict | None:
        """Y of degree deg(X) - 1 with dY = X in the finitely supported span, or None."""
        if not X:
            return {}
        deg = self.deg(next(iter(X)))
        cands = self.candidates(deg - 1, list(X))
        coords = solve_columns([self.d(c) for c in cands], X)
        if coords is None:
            return None
        out: dict = {}
        for j, c in coords.items():
            add_into(out, cands[j], c)
        return out

    def random_element(self, rng: random.Random, degree: int, terms: int = 2) -> dict:
        out: dict = {}
        for _ in range(terms):
            j = rng.randint(0, self.M.dimension)
            basis = self.a_basis(degree - j)
            form = self.M.random_element(rng, j, 1)
            if not basis or not form:
                continue
            add_into(out, self.tensor(form, rng.choice(basis)), Q(rng.choice([-2, -1, 1, 2])))
        return out


@dataclass
class CurrentElement:
    """A degree -1 element of Omega(M) (x) A taken modulo exact elements."""

    T: TensorForms
    rep: dict

    def equals(self, other: "CurrentElement | Mapping") -> dict | None:
        """A primitive Y with dY = self - other, or None when the classes differ."""
        o = other.rep if isinstance(other, CurrentElement) else other
        return self.T.primitive(sub(self.rep, o))

    def is_zero(self) -> bool:
        return self.T.primitive(self.rep) is not None


def derived_bracket(T: TensorForms, alpha: Mapping, beta: Mapping) -> CurrentElement:
    """{alpha, beta} = [alpha, d beta] for degree -1 elements."""
    for x in (alpha, beta):
        for k in x:
            if T.deg(k) != -1:
                raise ValueError("derived brackets take degree -1 elements")
    return CurrentElement(T, T.bracket(alpha, T.d(beta)))


def leibniz_residual(T: TensorForms, a: Mapping, b: Mapping, c: Mapping) -> dict:
    """{{a,b},c} - {a,{b,c}} - {{a,c},b}; zero exactly for {a,b} = [a, db]."""
    br = lambda x, y: derived_bracket(T, x, y).rep
    out = br(br(a, b), c)
    add_into(out, br(a, br(b, c)), -ONE)
    add_into(out, br(br(a, c), b), -ONE)
    return out


def left_leibniz_defect(T: TensorForms, a: Mapping, b: Mapping, c: Mapping) -> tuple[dict, dict]:
    """(defect, primitive): {a,{b,c}} - {{a,b},c} - {b,{a,c}} and [b, [a, dc]].

    The left form of the Jacobi identity holds modulo exact elements: the
    defect equals d of the returned primitive.
    """
    br = lambda x, y: derived_bracket(T, x, y).rep
    out = br(a, br(b, c))
    add_into(out, br(br(a, b), c), -ONE)
    add_into(out, br(b, br(a, c)), -ONE)
    return out, T.bracket(b, T.bracket(a, T.d(c)))


def symmetric_part_primitive(T: TensorForms, a: Mapping, b: Mapping) -> tuple[dict | None, dict]:
    """(primitive found by linear solve, expected primitive -[a, b]) of {a,b} + {b,a}."""
    s = derived_bracket(T, a, b).rep
    add_into(s, derived_bracket(T, b, a).rep)
    return T.primitive(s), scaled(T.bracket(a, b), -ONE)


def differential_residual(T: TensorForms, a: Mapping, b: Mapping) -> dict:
    """d{a, b} - [da, db]."""
    return sub(T.d(derived_bracket(T, a, b).rep), T.bracket(T.d(a), T.d(b)))


# ---------------------------------------------------------------------------
# cocycles


@dataclass
class CocycleReport:
    kind: str
    inputs: dict
    pointwise: dict
    cocycle: dict
    value: Q | None = None
    symbolic: str | None = None
    certificate: dict | None = None
    checks: dict = field(default_factory=dict)

    def to_record(self, T: TensorForms | None = None) -> dict:
        fmt = (lambda u: _format_tensor(T, u)) if T is not None else str
        rec = {"kind": self.kind, "inputs": self.inputs,
               "pointwise": fmt(self.pointwise), "cocycle": fmt(self.cocycle),
               "value": None if self.value is None else format_rational(self.value),
               "checks": self.checks}
        if self.symbolic is not None:
            rec["symbolic"] = self.symbolic
        return rec


def _format_tensor(T: TensorForms, u: Mapping) -> str:
    if not u:
        return "0"
    parts = []
    for (w, a), c in sorted(u.items(), key=repr):
        parts.append(f"({format_rational(c)})*{T.M.key_name(w)}(x){a}")
    return " + ".join(parts)


def _part(u: Mapping, pred: Callable) -> dict:
    return {k: c for k, c in u.items() if pred(k)}


def _vec(x) -> dict:
    if isinstance(x, Mapping):
        return {a: Q(v) for a, v in x.items() if v}
    return {int(x): ONE}


def _p2(p: InvariantPolynomial, x: Mapping, y: Mapping) -> Q:
    total = ZERO
    for a, u in x.items():
        for b, v in y.items():
            total += u * v * p.tensor(tuple(sorted((a, b))))
    return total


def km_cocycle(f: Mapping, g: Mapping, x, y, p: InvariantPolynomial, M: TrigModel | None = None,
               lie_bracket_check: bool = True) -> CocycleReport:
    """The central term of {f (x) I(x), g (x) I(y)} in CA(S^1, D_p g).

    The bracket is reduced modulo exact elements to the normal form
    Omega^0 (x) I(g) + Omega^1 (x) c; the reported value is -(integral of the
    c-coefficient), which equals -2 p(x,y) times the integral of f dg.
    """
    if p.degree != 2:
        raise InvariantError("the Kac-Moody cocycle needs a quadratic invariant")
    M = M or circle_model()
    if M.dimension != 1:
        raise ValueError("the Kac-Moody cocycle lives on the circle")
    lie = p.lie
    D = DgAlgebra(lie, 3, polynomial_extension(p))
    T = TensorForms(M, D)
    xv, yv = _vec(x), _vec(y)
    alpha = T.tensor(f, D.i_layer(xv, 1))
    beta = T.tensor(g, D.i_layer(yv, 1))
    N, Y, honest = _km_reduce(T, alpha, beta)
    pointwise = _part(N, lambda k: k[1][0] != "c")
    checks = {}
    fdg = M.mul(f, M.d(g))
    checks["closed form"] = (-honest == -2 * _p2(p, xv, yv) * M.integrate(fdg)) if fdg else (honest == 0)
    if lie_bracket_check:
        xy = {}
        for a, u in xv.items():
            for b, v in yv.items():
                add_into(xy, lie.bracket_basis(a, b), u * v)
        expect = T.tensor(M.mul(f, g), D.i_layer(xy, 1))
        checks["pointwise = fg (x) I([x,y])"] = T.primitive(sub(pointwise, expect)) is not None
    return CocycleReport("km", {"x": _fmt_vec(xv), "y": _fmt_vec(yv)}, pointwise,
                         _part(N, lambda k: k[1][0] == "c"), -honest, certificate=Y,
                         checks=checks)


def _km_reduce(T: TensorForms, alpha: Mapping, beta: Mapping) -> tuple[dict, dict, Q]:
    """Normal form of {alpha, beta} and the integral of its central part."""
    M = T.M
    B = derived_bracket(T, alpha, beta).rep

    def allowed(key):
        w, a = key
        if a[0] == "c":
            return M.deg(w) == 1
        return M.deg(w) == 0 and a[0] == "w" and len(a[1]) == 1

    Y = _normal_form(T, B, allowed) if B else {}
    if Y is None:
        raise AssertionError("bracket does not reduce to the normal form")
    N = sub(B, T.d(Y))
    central = {w: c for (w, a), c in N.items() if a[0] == "c"}
    return N, Y, (M.integrate(central) if central else ZERO)


class LoopCocycle:
    """The Kac-Moody 2-cocycle on loop elements sum_i f_i (x) x_i.

    A loop element is a list of (function, vector) pairs.  Values are computed
    through the derived bracket in CA(S^1, D_p g), reported with the same sign
    as km_cocycle.
    """

    def __init__(self, p: InvariantPolynomial, M: TrigModel | None = None):
        if p.degree != 2:
            raise InvariantError("the Kac-Moody cocycle needs a quadratic invariant")
        self.p = p
        self.M = M or circle_model()
        self.D = DgAlgebra(p.lie, 3, polynomial_extension(p))
        self.T = TensorForms(self.M, self.D)

    def lift(self, X: Sequence) -> dict:
        out: dict = {}
        for f, x in X:
            add_into(out, self.T.tensor(f, self.D.i_layer(_vec(x), 1)))
        return out

    def __call__(self, X: Sequence, Y: Sequence) -> Q:
        return -_km_reduce(self.T, self.lift(X), self.lift(Y))[2]

    def loop_bracket(self, X: Sequence, Y: Sequence) -> list:
        lie = self.p.lie
        out = []
        for f, x in X:
            for g, y in Y:
                xy: dict = {}
                for a, u in _vec(x).items():
                    for b, v in _vec(y).items():
                        add_into(xy, lie.bracket_basis(a, b), u * v)
                fg = self.M.mul(f, g)
                if xy and fg:
                    out.append((fg, xy))
        return out

    def closed_form(self, X: Sequence, Y: Sequence) -> Q:
        total = ZERO
        for f, x in X:
            for g, y in Y:
                fdg = self.M.mul(f, self.M.d(g))
                if fdg:
                    total += -2 * _p2(self.p, _vec(x), _vec(y)) * self.M.integrate(fdg)
        return total


def _fmt_vec(v: Mapping) -> str:
    return " + ".join(f"({format_rational(c)})e{a}" for a, c in sorted(v.items())) or "0"


def _normal_form(T: TensorForms, X: Mapping, allowed: Callable) -> dict | None:
    """Y with X - dY supported on allowed keys."""
    deg = T.deg(next(iter(X))) if X else -1
    cands = T.candidates(deg - 1, list(X))
    cols = [{k: v for k, v in T.d(c).items() if not allowed(k)} for c in cands]
    target = {k: v for k, v in X.items() if not allowed(k)}
    coords = solve_columns(cols, target)
    if coords is None:
        return None
    out: dict = {}
    for j, c in coords.items():
        add_into(out, cands[j], c)
    return out


def n3_cocycle(alpha: Mapping, f: Mapping, x: int, y: int, z: int, p: InvariantPolynomial,
               M: TrigModel | None = None) -> CocycleReport:
    """The central term of {alpha (x) I(xy), f (x) I(z)} in CA(T^3, D_p g) for cubic p.

    [I(xy), I(z)] is split as K + S with S = (1/3)([I(xy),I(z)] + [I(xz),I(y)]
    + [I(yz),I(x)]) = d I(xyz) - p(xyz) c and K in the kernel of
    symmetrization; alpha^df (x) d I(xyz) is exact, leaving the central term.
    The reported value is -(c-coefficient integrated), i.e. -p(xyz) times the
    integral of alpha^df.
    """
    M = M or torus_model(3)
    if M.dimension != 3:
        raise ValueError("the n = 3 cocycle needs a 3-dimensional model")
    if p.degree != 3:
        raise InvariantError("the n = 3 cocycle needs a cubic invariant")
    for k in alpha:
        if M.deg(k) != 2:
            raise ValueError("alpha must be a 2-form")
    lie = p.lie
    D = DgAlgebra(lie, 5, polynomial_extension(p))
    T = TensorForms(M, D)
    gen = lambda *m: D.generator(m)
    a = T.tensor(alpha, gen(x, y))
    b = T.tensor(f, gen(z))
    B = derived_bracket(T, a, b).rep

    # the decomposition of [I(xy), I(z)]
    br = lambda u, v: D.bracket(u, v)
    full = br(gen(x, y), gen(z))
    S = scaled(full, Q(1, 3))
    add_into(S, br(gen(x, z), gen(y)), Q(1, 3))
    add_into(S, br(gen(y, z), gen(x)), Q(1, 3))
    K = sub(full, S)
    checks = {}
    mxyz = tuple(sorted((x, y, z)))
    dI = D.d(gen(*mxyz))
    S_expected = sub(dI, {("c", 0): p.tensor(mxyz)})
    checks["S = d I(xyz) - p(xyz) c"] = not sub(S, S_expected)
    checks["K symmetrizes to zero"] = not _symmetrize_pairs(D, K)

    adf = M.mul(alpha, M.d(f))
    pointwise = {}
    for m2, v in ad_sym(lie, z, (x, y) if x <= y else (y, x)).items():
        add_into(pointwise, T.tensor(M.mul(f, alpha), D.generator(m2)), -v)
    kernel_part = scaled(T.tensor(adf, K), -ONE)
    Y = T.tensor(adf, gen(*mxyz))
    N = sub(B, T.d(Y))
    central = {w: c for (w, k), c in N.items() if k[0] == "c"}
    rest = _part(N, lambda k: k[1][0] != "c")
    expect_rest = dict(pointwise)
    add_into(expect_rest, kernel_part)
    checks["bracket = pointwise + kernel + dY + central"] = not sub(rest, expect_rest)
    honest = M.integrate(central) if central else ZERO
    checks["closed form"] = (-honest == -p.tensor(mxyz) * (M.integrate(adf) if adf else ZERO))
    return CocycleReport("n3", {"x": x, "y": y, "z": z}, rest,
                         _part(N, lambda k: k[1][0] == "c"), -honest, certificate=Y,
                         checks=checks)


def _symmetrize_pairs(D: DgAlgebra, u: Mapping) -> dict:
    """Image of a sum of length-2 words under g (x) S^2 g -> S^3 g (letters as multisets)."""
    out: dict = {}
    for key, c in u.items():
        if key[0] != "w" or len(key[1]) != 2:
            raise ValueError("expected length-2 words")
        m = tuple(sorted(D.letters[key[1][0]] + D.letters[key[1][1]]))
        add_term(out, m, c)
    return out


def fms_cocycle(f: Mapping, g: Mapping, x: int, y: int, F, M: FormModel | None = None) -> CocycleReport:
    """{f (x) I(x), g (x) I(y)} in CA(M, A_FMS), split into its Cg part and its
    Wg[2n-2]-valued cocycle part -fg (x) I_W(x) I_W(y) e(0)."""
    M = M or torus_model(2)
    A = F.A
    T = TensorForms(M, A)
    a = T.tensor(f, {("I", x): ONE})
    b = T.tensor(g, {("I", y): ONE})
    B = derived_bracket(T, a, b).rep
    pointwise = _part(B, lambda k: k[1][0] != "B")
    cocycle = _part(B, lambda k: k[1][0] == "B")
    W = A.W
    e0 = F.twist.e0()
    iie = W.I[x](W.I[y](e0))
    fg = M.mul(f, g)
    checks = {}
    checks["cocycle = -fg (x) I_W(x) I_W(y) e(0)"] = not sub(
        cocycle, scaled(T.tensor(fg, {("B", k): v for k, v in iie.items()}), -ONE))
    lie = F.twist.p.lie
    expect_pw = T.tensor(fg, {("I", c): v for c, v in lie.bracket_basis(x, y).items()})
    checks["pointwise = fg (x) I([x,y])"] = not sub(pointwise, expect_pw)
    symbolic = None
    if F.twist.p.degree == 2:
        lam = fms_n2_factor(F)
        checks["I_W(x) I_W(y) e(0) is proportional to p([x,y], theta)"] = lam is not None
        if lam is not None:
            c = -lam
            lead = "" if c == 1 else "-" if c == -1 else f"{format_rational(c)}*"
            symbolic = f"{lead}f*g (x) p([x,y],.)"
    return CocycleReport("fms", {"x": x, "y": y}, pointwise, cocycle, None, symbolic,
                         checks=checks)


def fms_n2_factor(F) -> Q | None:
    """lam with I_W(x) I_W(y) e(0) = lam p([x,y], theta) for all x, y (None if no such lam)."""
    p = F.twist.p
    lie = p.lie
    W = F.A.W
    e0 = F.twist.e0()
    lam = None
    for x in range(lie.dim):
        for y in range(lie.dim):
            lhs = W.I[x](W.I[y](e0))
            rhs: dict = {}
            for c, v in lie.bracket_basis(x, y).items():
                for a in range(lie.dim):
                    w = p.tensor(tuple(sorted((c, a))))
                    if w:
                        add_term(rhs, ((a,), ()), v * w)
            if not rhs:
                if lhs:
                    return None
                continue
            k = next(iter(rhs))
            ratio = lhs.get(k, ZERO) / rhs[k]
            if lam is None:
                lam = ratio
            if ratio != lam or sub(lhs, scaled(rhs, lam)):
                return None
    return lam if lam is not None else ONE


def truncated_fms_cocycle(f: Mapping, g: Mapping, x: int, y: int, F,
                          M: FormModel | None = None) -> CocycleReport:
    """{f (x) I~(x), g (x) I~(y)} in CA(M, B_FMS) compared with
    fg (x) I~([x,y]) + 2 df^dg (x) theta(p(x,y,.)) modulo exact elements of B_FMS."""
    M = M or torus_model(3)
    A = F.A
    T = TensorForms(M, A, F.image_basis)
    a = T.tensor(f, F.I_tilde(x))
    b = T.tensor(g, F.I_tilde(y))
    B = derived_bracket(T, a, b).rep
    lie = F.twist.p.lie
    xy = {}
    for c, v in lie.bracket_basis(x, y).items():
        add_into(xy, F.I_tilde(c), v)
    pointwise = T.tensor(M.mul(f, g), xy)
    cocycle = T.tensor(M.mul(M.d(f), M.d(g)), F.theta(F.contract_p(x, y)))
    cocycle = scaled(cocycle, Q(2))
    rest = sub(B, pointwise)
    Y = T.primitive(sub(rest, cocycle))
    checks = {"bracket = fg (x) I~([x,y]) + 2 df^dg (x) theta(p(x,y,.)) mod exact": Y is not None}
    return CocycleReport("fms-truncated", {"x": x, "y": y}, pointwise, cocycle, None,
                         "2 df^dg (x) theta(p(x,y,.))", certificate=Y, checks=checks)


# ---------------------------------------------------------------------------
# cone reduction and the exact sequence


def cone_section(T: TensorForms, v: Mapping) -> dict:
    """(Omega (x) g)^0 -> SA(M, Cg): alpha (x) x -> d(alpha (x) I(x))."""
    lift = {(w, ("I", a)): c for (w, a), c in v.items()}
    return T.d(lift)


def cone_reduction(T: TensorForms, X: Mapping) -> dict:
    """SA(M, Cg) -> (Omega (x) g)^0: keep the alpha (x) L(x) part."""
    if not isinstance(T.A, ConeAlgebra) or type(T.A) is not ConeAlgebra:
        raise ValueError("cone reduction is implemented for A = Cg only")
    for k in X:
        if T.deg(k) != 0:
            raise ValueError("expected a degree 0 element")
    if T.d(X):
        raise ValueError("expected a closed element")
    return {(w, a[1]): c for (w, a), c in X.items() if a[0] == "L"}


@dataclass
class ExactnessReport:
    h_minus1: int
    ca: int
    sa: int
    h0: int
    exact: bool
    iso: bool

    def as_dict(self) -> dict:
        return {"H^-1": self.h_minus1, "CA": self.ca, "SA": self.sa, "H^0": self.h0,
                "exact": self.exact, "CA = SA": self.iso}


def _degree_span(T: TensorForms, degree: int, forms_of: Callable) -> list[dict]:
    out = []
    for j in range(0, T.M.dimension + 1):
        for w in forms_of(j):
            for a in T.a_basis(degree - j):
                out.append({(w, k): c for k, c in a.items()})
    return out


def exactness_check(A: Dgla, M: FormModel, block: tuple | None = None) -> ExactnessReport:
    """Dimensions along 0 -> H^-1 -> CA -> SA -> H^0 -> 0 on one finite subcomplex.

    For trig models the subcomplex is a frequency block (default: constants);
    finite models use all forms.
    """
    T = TensorForms(M, A)
    if isinstance(M, TrigModel):
        freq = block if block is not None else tuple(0 for _ in range(M.dimension))
        forms_of = lambda j: M.block_basis(freq, j)
    else:
        forms_of = lambda j: M.candidates(j, [])
    C = {k: _degree_span(T, k, forms_of) for k in (-2, -1, 0, 1)}
    d = {k: SparseLinearMap.from_operator(T.d, C[k], 1, k) for k in (-2, -1, 0)}
    r = {k: d[k].rank() for k in d}
    dim = {k: rank(C[k]) for k in C}
    h_m1 = dim[-1] - r[-1] - r[-2]
    h_0 = dim[0] - r[0] - r[-1]
    ca = dim[-1] - r[-2]
    sa = dim[0] - r[0]
    # In the sequence the map CA -> SA has kernel H^-1 and cokernel H^0.
    exact = (ca - h_m1) == r[-1] and (sa - h_0) == r[-1]
    return ExactnessReport(h_m1, ca, sa, h_0, exact, ca == sa)


def zero_differential_dgla(A: Dgla) -> Dgla:
    """A copy of A with the differential set to zero (brackets unchanged)."""

    class Flat(Dgla):
        name = f"{A.name} with d = 0"

        def deg(self, key):
            return A.deg(key)

        def bracket_keys(self, a, b):
            return A.bracket_keys(a, b)

        def bracket(self, u, v):
            return A.bracket(u, v)

        def d(self, u):
            return {}

        def basis(self, degree):
            return A.basis(degree)

    return Flat()


def random_loop(rng: random.Random, M: TrigModel, dim: int, terms: int = 2, max_mode: int = 2) -> list:
    """A random loop element: a short list of (trig monomial, basis vector) pairs."""
    out = []
    for _ in range(terms):
        k = rng.randint(0, max_mode)
        kind = "cos" if k == 0 else rng.choice(("cos", "sin"))
        coef = rng.choice((-3, -2, -1, 1, 2, 3))
        text = str(coef) if k == 0 else f"{coef}*{kind}({k}u)"
        vec = {rng.randrange(dim): rng.choice((1, 2, -1))}
        out.append((M.function(text), vec))
    return out

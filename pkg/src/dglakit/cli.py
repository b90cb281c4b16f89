"""Command-line front end: verification suites, dimension tables, cohomology,
transgression chains and current cocycles.

Exit status: 0 when every check passes, 1 when a check fails or is refused by
a cutoff, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

from .core import CutoffRefused, dgla_residuals, first_term, format_rational, sub
from .liecore import InvariantError, builtin, builtin_polynomial, load_lie_file

SUITES = ("cone", "weil", "dg", "phi", "transgression", "kalkman", "currents")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    algebra: str = "sl2"
    algebra_file: str | None = None
    cutoff: int = 5
    poly_cutoff: int = 4
    poly: str | None = None
    model: str = "weil"
    fmt: str = "human"
    seed: int = 0
    timing: bool = False

    def lie(self):
        if self.algebra_file:
            return load_lie_file(self.algebra_file)
        try:
            return builtin(self.algebra)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None

    def polynomial(self, lie):
        sel = self.poly
        if sel is None:
            sel = "cubic" if lie.name == "sl3" else "killing"
        try:
            return builtin_polynomial(lie, sel)
        except (KeyError, IndexError, InvariantError) as exc:
            msg = exc.args[0] if exc.args else type(exc).__name__
            raise UsageError(f"polynomial {sel!r}: {msg}") from None


@dataclass
class Record:
    id: str
    anchor: str
    status: str
    witness: str | None
    micros: int

    def as_dict(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "status": self.status,
                "witness": self.witness, "micros": self.micros}


@dataclass
class Report:
    timing: bool
    records: list = field(default_factory=list)

    def check(self, ident: str, anchor: str, fn: Callable[[], object]) -> None:
        """Run fn; a return value of None (or True) passes, anything else is the witness."""
        t0 = time.perf_counter()
        try:
            w = fn()
            status = "pass" if w is None or w is True else "fail"
            witness = None if status == "pass" else _render(w)
        except CutoffRefused as exc:
            status, witness = "refused-by-cutoff", str(exc)
        except AssertionError as exc:
            status, witness = "fail", str(exc) or "assertion failed"
        micros = int((time.perf_counter() - t0) * 1e6) if self.timing else 0
        self.records.append(Record(ident, anchor, status, witness, micros))

    def refuse_all(self, ids: list, reason: str) -> None:
        for ident, anchor in ids:
            self.records.append(Record(ident, anchor, "refused-by-cutoff", reason, 0))

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    def emit(self, fmt: str, out=None) -> None:
        out = out or sys.stdout
        if fmt == "structured":
            for r in self.records:
                out.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")
            return
        width = max((len(r.id) for r in self.records), default=0)
        for r in self.records:
            line = f"{r.status:<18} {r.id:<{width}}  {r.anchor}"
            if r.witness:
                line += f"  [{r.witness}]"
            if self.timing:
                line += f"  ({r.micros} us)"
            out.write(line + "\n")
        passed = sum(r.status == "pass" for r in self.records)
        out.write(f"{passed}/{len(self.records)} checks passed\n")


def _render(w) -> str:
    if isinstance(w, str):
        return w
    if isinstance(w, dict):
        return repr(sorted((repr(k), format_rational(v) if hasattr(v, "denominator") else repr(v))
                           for k, v in w.items())[:3])
    return repr(w)


# ---------------------------------------------------------------------------
# suites


def suite_cone(cfg: RunConfig, rep: Report) -> None:
    from .coneweil import build_cone, build_cone_p, cone_cohomology
    L = cfg.lie()
    C = build_cone(L)
    elems = C.basis(0) + C.basis(-1)
    rep.check("cone.axioms", "d^2 = 0, antisymmetry, Leibniz, Jacobi on Cg",
              lambda: next(dgla_residuals(C, elems), None))
    rep.check("cone.cohomology", "H(Cg) = 0",
              lambda: None if all(v == 0 for v in cone_cohomology(C).values())
              else cone_cohomology(C))
    p = cfg.polynomial(L)
    if p.degree == 2:
        Cp = build_cone_p(L, p)
        rep.check("cone_p.axioms", "[I(x), I(y)] = -2 p(x,y) c is a DGLA",
                  lambda: next(dgla_residuals(Cp, Cp.basis(0) + Cp.basis(-1) + Cp.basis(-2)),
                               None))


def suite_weil(cfg: RunConfig, rep: Report) -> None:
    from .coneweil import CeAlgebra, WeilAlgebra, build_cone, check_g_differential_space
    from .kalkman import TensorDgla, cone_mc_element, mc_check, phi_cone
    L = cfg.lie()
    W = WeilAlgebra(L, cfg.poly_cutoff)
    for name, ok, wit in W.verify():
        rep.check("weil." + re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_"), name, lambda ok=ok, wit=wit: None if ok else wit)
    CE = CeAlgebra(L)
    rep.check("ce.relations", "Cartan relations on the CE algebra",
              lambda: (lambda r: None if r[0] else r[1])(check_g_differential_space(CE.g_space())))
    T = TensorDgla(W, build_cone(L), 2 * cfg.poly_cutoff)
    rep.check("weil.mc", "d(I(t) - L(theta)) = 1/2 [I(t) - L(theta), I(t) - L(theta)]",
              lambda: (lambda r: None if r[0] else r[1])(mc_check(T, cone_mc_element(W))))
    rep.check("weil.phi", "phi^-1 d phi = -I(t) + L(theta), phi group-like and invariant",
              lambda: phi_cone(L, verify=True) and None)


def _dg(cfg: RunConfig, lie, ext=None):
    from .dmodel import DgAlgebra
    return DgAlgebra(lie, cfg.cutoff, ext)


DG_CHECKS = [("dg.axioms", "d^2 = 0, antisymmetry, Leibniz, Jacobi on Dg"),
             ("dg.acyclicity", "H^k(Dg) = 0"),
             ("dg.projection", "pi: Dg -> Cg is a DGLA morphism"),
             ("dg.generating", "d i(x) = 1/2 [i(x), i(x)] + l(x)"),
             ("dg.mc", "d(i(t) - l(theta)) = 1/2 [i(t) - l(theta), i(t) - l(theta)]")]


def suite_dg(cfg: RunConfig, rep: Report) -> None:
    from .coneweil import WeilAlgebra, build_cone
    from .dmodel import (_test_vectors, acyclicity_report, generating_function_residual,
                         projection_pi, verify_dg)
    from .kalkman import TensorDgla, dg_mc_element, mc_check
    L = cfg.lie()
    try:
        D = _dg(cfg, L)
    except CutoffRefused as exc:
        rep.refuse_all(DG_CHECKS, str(exc))
        return
    rep.check("dg.axioms", DG_CHECKS[0][1], lambda: next(verify_dg(D), None))
    lo = -(cfg.cutoff - 1)
    rep.check("dg.acyclicity", f"H^k(Dg) = 0 for {lo} <= k <= 0",
              lambda: (lambda h: None if not any(h.values()) else h)(
                  acyclicity_report(D, range(lo, 1))))
    rep.check("dg.projection", DG_CHECKS[2][1],
              lambda: next(projection_pi(D, build_cone(L), verify=False).residuals(), None))
    rep.check("dg.generating", DG_CHECKS[3][1],
              lambda: next((r for x in _test_vectors(L.dim)
                            for r in [generating_function_residual(D, x)] if r), None))
    deg = min(8, 2 * cfg.poly_cutoff)
    W = WeilAlgebra(L, cfg.poly_cutoff)
    rep.check("dg.mc", DG_CHECKS[4][1],
              lambda: (lambda r: None if r[0] else r[1])(
                  mc_check(TensorDgla(W, D, deg), dg_mc_element(W, D, deg))))


def suite_phi(cfg: RunConfig, rep: Report) -> None:
    from .kalkman import phi_big, phi_low_degree_expansion
    L = cfg.lie()
    try:
        D = _dg(cfg, L)
    except CutoffRefused as exc:
        rep.refuse_all([("phi.identity", "Phi^-1 d Phi = -i(t) + l(theta)")], str(exc))
        return
    holder = {}

    def build():
        holder["G"] = phi_big(D, cfg.cutoff, verify=True)
    rep.check("phi.identity", "Phi^-1 d Phi = -i(t) + l(theta), Phi group-like and invariant",
              build)
    G = holder.get("G")
    if G is None:
        return
    R = G.ring

    def low():
        expect = phi_low_degree_expansion(D, R)
        got = R.truncate(G.terms, min(3, cfg.cutoff))
        r = sub(got, R.truncate(expect, min(3, cfg.cutoff)))
        return first_term(r) if r else None
    rep.check("phi.low_degree",
              "Phi = exp(-I(theta)) - I(t theta - 1/6 [theta,theta] theta) + (degree >= 4)", low)


def suite_transgression(cfg: RunConfig, rep: Report) -> None:
    from .coneweil import WeilAlgebra
    from .core import sub as _sub
    from .kalkman import exact_difference, remark_witness, transgress_solve
    L = cfg.lie()
    p = cfg.polynomial(L)
    n = p.degree
    res = {}

    def solve(method):
        res[method] = transgress_solve(L, p, method)
    rep.check("transgression.linear_solve", "d_W e = p(t), e invariant",
              lambda: solve("linear_solve"))
    rep.check("transgression.via_phi_p", "d_W e = p(t) from Phi_p^-1 d Phi_p",
              lambda: solve("via_phi_p"))
    if len(res) == 2:
        W = WeilAlgebra(L, n + 1)
        rep.check("transgression.agree", "e_solve - e_phi = d_W y with y invariant",
                  lambda: None if exact_difference(W, res["linear_solve"].e,
                                                   res["via_phi_p"].e, 2 * n - 1) is not None
                  else "no invariant primitive of the difference")
    if n == 2:
        W = WeilAlgebra(L, 3)

        def witness():
            w = remark_witness(W, p)
            r = _sub(W.d(w), {k: -v for k, v in W.poly_element(p).items()})
            return first_term(r) if r else None
        rep.check("transgression.witness",
                  "d(-p(t,theta) + 1/6 p(theta,[theta,theta])) = -p(t,t)", witness)


def suite_kalkman(cfg: RunConfig, rep: Report) -> None:
    from .kalkman import (cartan_model, ce_module, fms_dgla,
                          fms_relations, kalkman_residuals, kalkman_transform, phi_big,
                          trivial_module, weil_module)
    from .dmodel import DgAlgebra
    L = cfg.lie()
    small = L.dim <= 3
    degs = range(0, 4) if small else range(0, 3)
    layer = 4 if small else 3
    poly = cfg.poly_cutoff if small else min(cfg.poly_cutoff, 2)
    G = phi_big(DgAlgebra(L, layer), layer)
    modules = [("trivial", trivial_module(L)), ("ce", ce_module(L))]
    if small:
        modules.append(("weil", weil_module(L, poly, degs)))
    for name, V in modules:
        holder = {}

        def module(V=V, holder=holder):
            holder["U"] = cartan_model(V, poly, degs)
        rep.check(f"kalkman.{name}.cartan",
                  "Cartan relations for d_U = d_W + d_V - i_V(t) + l_V(theta)", module)
        if "U" in holder:
            U = holder["U"]
            rep.check(f"kalkman.{name}.conjugation",
                      "Phi_V d_U Phi_V^-1 = d_W + d_V, I -> I_W + Y_V, L -> L_W + l_V",
                      lambda U=U: next(kalkman_residuals(U, kalkman_transform(U, G)), None))
    top = min(max(0, cfg.cutoff), 8 if small else 4)
    for model in ("weil", "cartan"):
        rep.check(f"kalkman.equivariant.{model}",
                  "H_g(Wg) = (Sg*)^g",
                  lambda model=model: _equivariant_witness(L, top, model, cfg.poly_cutoff))
    p = cfg.polynomial(L)
    holder = {}

    def fms():
        holder["F"] = fms_dgla(L, p)
    rep.check("kalkman.fms.morphism", "rho: D_p g -> (Cg x Wg[2n-2])_(e(0)) is a DGLA map", fms)
    if "F" in holder:
        rep.check("kalkman.fms.relations", "[I~(x), I~(y)], [I~(x), theta(xi)] relations",
                  lambda: next(fms_relations(holder["F"]), None))


def _equivariant_witness(L, top: int, model: str, poly_cutoff: int):
    from .kalkman import equivariant_cohomology_weil
    from .liecore import invariant_polynomials
    got = equivariant_cohomology_weil(L, range(0, top + 1), model)
    expect = {k: (len(invariant_polynomials(L, k // 2)) if k % 2 == 0 else 0) if k else 1
              for k in range(0, top + 1)}
    return None if got == expect else {"computed": got, "invariants": expect}


def suite_currents(cfg: RunConfig, rep: Report) -> None:
    from .coneweil import build_cone
    from .currents import (ExteriorModel, LoopCocycle, TensorForms, circle_model, derived_bracket,
                           differential_residual, fms_cocycle, km_cocycle, leibniz_residual,
                           left_leibniz_defect, n3_cocycle, symmetric_part_primitive,
                           random_loop, torus_model, truncated_fms_cocycle)
    from .dmodel import DgAlgebra, polynomial_extension
    L = cfg.lie()
    p = cfg.polynomial(L)
    rng = random.Random(cfg.seed)
    pairs = [(circle_model(), build_cone(L)), (torus_model(2), DgAlgebra(L, 4)),
             (ExteriorModel(L) if L.dim <= 3 else torus_model(3), build_cone(L))]
    if p.degree == 2:
        pairs.append((circle_model(), DgAlgebra(L, 3, polynomial_extension(p))))
    for M, A in pairs:
        T = TensorForms(M, A)
        triples = [[T.random_element(rng, -1, 2) for _ in range(3)] for _ in range(20)]

        def laws(T=T, triples=triples):
            for a, b, c in triples:
                r = leibniz_residual(T, a, b, c)
                if r:
                    return f"Leibniz: {first_term(r)}"
                dfc, prim = left_leibniz_defect(T, a, b, c)
                if sub(dfc, T.d(prim)):
                    return "left Leibniz defect is not d[b,[a,dc]]"
                found, expect = symmetric_part_primitive(T, a, b)
                s = derived_bracket(T, a, b).rep
                for k, v in derived_bracket(T, b, a).rep.items():
                    s[k] = s.get(k, 0) + v
                s = {k: v for k, v in s.items() if v}
                if found is None or sub(T.d(expect), s):
                    return "symmetric part not exact"
                r = differential_residual(T, a, b)
                if r:
                    return f"d{{a,b}} != [da,db]: {first_term(r)}"
            return None
        rep.check(f"currents.laws.{M.name}.{A.name}",
                  "{a,b} = [a,db]: Leibniz, exact symmetric part, d{a,b} = [da,db]", laws)
    if p.degree == 2:
        S1 = circle_model()
        f, g = S1.function("cos(u)"), S1.function("sin(u)")

        def km():
            for x in range(L.dim):
                for y in range(L.dim):
                    r = km_cocycle(f, g, x, y, p)
                    if r.value != -p.tensor(tuple(sorted((x, y)))) or not all(r.checks.values()):
                        return (x, y, format_rational(r.value), r.checks)
            C = LoopCocycle(p, S1)
            for _ in range(20):
                X, Y, Z = (random_loop(rng, S1, L.dim) for _ in range(3))
                if C(X, Y) != -C(Y, X) or C(X, Y) != C.closed_form(X, Y):
                    return "antisymmetry or closed form"
                cyc = (C(C.loop_bracket(X, Y), Z) + C(C.loop_bracket(Y, Z), X)
                       + C(C.loop_bracket(Z, X), Y))
                if cyc:
                    return f"cocycle identity: {format_rational(cyc)}"
            return None
        rep.check("currents.km", "-2 p(x,y) int f dg = -p(x,y) for f = cos, g = sin; 2-cocycle on loops", km)

        def fms2():
            from .kalkman import fms_dgla
            F = fms_dgla(L, p)
            T2 = torus_model(2)
            r = fms_cocycle(T2.function("cos(u)"), T2.function("sin(v)"), 0, 1 % L.dim, F, T2)
            return None if all(r.checks.values()) else r.checks
        rep.check("currents.fms_n2", "{f I~(x), g I~(y)} = -fg (x) I_W(x) I_W(y) e(0)", fms2)
    if p.degree == 3:
        T3 = torus_model(3)

        def n3():
            alpha = T3.form("cos(w)", "uv")
            f = T3.function("sin(w)")
            x, y, z = 0, 1, 2 % L.dim
            r = n3_cocycle(alpha, f, x, y, z, p, T3)
            expect = -p.tensor(tuple(sorted((x, y, z)))) * T3.integrate(
                T3.mul(alpha, T3.d(f)))
            return None if r.value == expect and all(r.checks.values()) else r.checks
        rep.check("currents.n3", "-p(xyz) int alpha ^ df", n3)

        def truncated():
            from .kalkman import fms_dgla
            F = fms_dgla(L, p)
            r = truncated_fms_cocycle(T3.function("cos(u)*sin(v)"), T3.function("sin(w)"),
                                      0, 1 % L.dim, F, T3)
            return None if all(r.checks.values()) else r.checks
        rep.check("currents.fms_truncated", "2 df ^ dg (x) theta(p(x,y,.))", truncated)


SUITE_FUNCS = {"cone": suite_cone, "weil": suite_weil, "dg": suite_dg, "phi": suite_phi,
               "transgression": suite_transgression, "kalkman": suite_kalkman,
               "currents": suite_currents}


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, suite: str, out=None) -> int:
    out = out or sys.stdout
    rep = Report(cfg.timing)
    names = SUITES if suite == "all" else (suite,)
    for s in names:
        SUITE_FUNCS[s](cfg, rep)
    rep.emit(cfg.fmt, out)
    return 0 if rep.ok else 1


def cmd_dims(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    from .dmodel import DgAlgebra, polynomial_extension
    L = cfg.lie()
    ext = polynomial_extension(cfg.polynomial(L)) if cfg.poly else None
    try:
        D = DgAlgebra(L, cfg.cutoff, ext)
    except CutoffRefused as exc:
        _emit_rows(cfg, [{"status": "refused-by-cutoff", "witness": str(exc)}], out)
        return 1
    rows = [{"algebra": D.name, "degree": k, "dim": v} for k, v in D.dims().items()]
    _emit_rows(cfg, rows, out)
    return 0


def _emit_rows(cfg: RunConfig, rows: list, out) -> None:
    if cfg.fmt == "structured":
        for r in rows:
            out.write(json.dumps(r, sort_keys=True) + "\n")
        return
    for r in rows:
        out.write("  ".join(f"{k}={v}" for k, v in r.items()) + "\n")


def cmd_cohomology(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    L = cfg.lie()
    if cfg.model in ("weil", "cartan"):
        from .kalkman import equivariant_cohomology_weil
        top = cfg.cutoff
        try:
            h = equivariant_cohomology_weil(L, range(0, top + 1), cfg.model)
        except CutoffRefused as exc:
            _emit_rows(cfg, [{"status": "refused-by-cutoff", "witness": str(exc)}], out)
            return 1
        rows = [{"space": f"H_g(W{L.name}), {cfg.model} model", "degree": k, "dim": v}
                for k, v in h.items()]
    elif cfg.model == "ce":
        from .coneweil import CeAlgebra
        rows = [{"space": f"H(CE({L.name}))", "degree": k, "dim": v}
                for k, v in enumerate(CeAlgebra(L).cohomology())]
    elif cfg.model == "dg":
        from .dmodel import acyclicity_report
        try:
            D = _dg(cfg, L)
            h = acyclicity_report(D, range(-(cfg.cutoff - 1), 1))
        except CutoffRefused as exc:
            _emit_rows(cfg, [{"status": "refused-by-cutoff", "witness": str(exc)}], out)
            return 1
        rows = [{"space": D.name, "degree": k, "dim": v} for k, v in sorted(h.items())]
    else:
        raise UsageError(f"unknown model {cfg.model!r} (weil, cartan, ce, dg)")
    _emit_rows(cfg, rows, out)
    return 0


def cmd_transgress(cfg: RunConfig, method: str, out=None) -> int:
    out = out or sys.stdout
    from .coneweil import WeilAlgebra
    from .kalkman import transgress_solve
    L = cfg.lie()
    p = cfg.polynomial(L)
    ch = transgress_solve(L, p, method)
    W = WeilAlgebra(L, p.degree + 1)
    rows = [{"method": method, "sign": ch.sign, "e": W.alg.format(ch.e),
             "eta": W.alg.format(ch.eta)}]
    _emit_rows(cfg, rows, out)
    return 0


def _basis_index(L, token: str) -> int:
    if token in L.basis_names:
        return list(L.basis_names).index(token)
    try:
        i = int(token)
    except ValueError:
        raise UsageError(f"unknown basis element {token!r}; use one of {list(L.basis_names)}")
    if not 0 <= i < L.dim:
        raise UsageError(f"basis index {i} out of range")
    return i


def cmd_cocycle(cfg: RunConfig, args, out=None) -> int:
    out = out or sys.stdout
    from .currents import (circle_model, fms_cocycle, km_cocycle, n3_cocycle, torus_model,
                           truncated_fms_cocycle)
    L = cfg.lie()
    p = cfg.polynomial(L)
    x = _basis_index(L, args.x)
    y = _basis_index(L, args.y)
    try:
        if args.kind == "km":
            M = circle_model()
            r = km_cocycle(M.function(args.f), M.function(args.g), x, y, p, M)
        elif args.kind == "n3":
            M = torus_model(3)
            z = _basis_index(L, args.z)
            r = n3_cocycle(M.form(args.alpha, args.alpha_dirs), M.function(args.f), x, y, z, p, M)
        elif args.kind == "fms":
            from .kalkman import fms_dgla
            dim = 2 * p.degree - 3 if p.degree > 2 else 2
            M = torus_model(min(3, max(1, dim)))
            r = fms_cocycle(M.function(args.f), M.function(args.g), x, y, fms_dgla(L, p), M)
        else:
            from .kalkman import fms_dgla
            M = torus_model(3)
            r = truncated_fms_cocycle(M.function(args.f), M.function(args.g), x, y,
                                      fms_dgla(L, p), M)
    except (InvariantError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    rec = r.to_record()
    names = {k: getattr(args, k) for k in ("x", "y", "z") if k in r.inputs or k in ("x", "y")}
    if args.kind == "n3":
        names.update(alpha=f"{args.alpha} d{args.alpha_dirs}", f=args.f, z=args.z)
    else:
        names.update(f=args.f, g=args.g)
    rec["inputs"] = dict(sorted(names.items()))
    rec.pop("pointwise")
    rec.pop("cocycle")
    if cfg.fmt == "structured":
        out.write(json.dumps(rec, sort_keys=True) + "\n")
    else:
        for k in ("kind", "inputs", "value", "symbolic", "checks"):
            if k in rec:
                out.write(f"{k}: {rec[k]}\n")
    return 0 if all(r.checks.values()) else 1


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--algebra", default="sl2", help="builtin Lie algebra (sl2, so3, sl3, abelian_n)")
    c.add_argument("--algebra-file", help="Lie algebra definition file (JSON)")
    c.add_argument("--cutoff", type=int, default=5, help="degree cutoff N (or top degree)")
    c.add_argument("--poly-cutoff", type=int, default=4, help="polynomial cutoff of the Weil algebra")
    c.add_argument("--poly", help="invariant polynomial: killing, cubic or n:i")
    c.add_argument("--model", default="weil", help="weil, cartan, ce or dg")
    c.add_argument("--format", dest="fmt", choices=("human", "structured"), default="human")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--timing", action="store_true", help="record wall-clock micros per check")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="dglakit", description=__doc__.splitlines()[0])
    sp = ap.add_subparsers(dest="command", required=True)
    v = sp.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=SUITES + ("all",), required=True)
    sp.add_parser("dims", parents=[common], help="graded dimensions of Dg or D_p g")
    sp.add_parser("cohomology", parents=[common], help="cohomology tables")
    t = sp.add_parser("transgress", parents=[common], help="transgression chain of p")
    t.add_argument("--method", choices=("linear_solve", "via_phi_p"), default="linear_solve")
    c = sp.add_parser("cocycle", parents=[common], help="evaluate a current cocycle")
    c.add_argument("kind", choices=("km", "n3", "fms", "fms-truncated"))
    c.add_argument("--f", default="cos(u)")
    c.add_argument("--g", default="sin(u)")
    c.add_argument("--alpha", default="cos(w)")
    c.add_argument("--alpha-dirs", default="uv")
    c.add_argument("--x", default="0")
    c.add_argument("--y", default="1")
    c.add_argument("--z", default="2")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    cfg = RunConfig(args.algebra, args.algebra_file, args.cutoff, args.poly_cutoff, args.poly,
                    args.model, args.fmt, args.seed, args.timing)
    try:
        if args.poly_cutoff < 1:
            raise UsageError("--poly-cutoff must be positive")
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "dims":
            return cmd_dims(cfg)
        if args.command == "cohomology":
            return cmd_cohomology(cfg)
        if args.command == "transgress":
            return cmd_transgress(cfg, args.method)
        return cmd_cocycle(cfg, args)
    except UsageError as exc:
        sys.stderr.write(f"dglakit: error: {exc}\n")
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"dglakit: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

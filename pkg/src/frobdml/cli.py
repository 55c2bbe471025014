"""Command-line surface.

One command per invocation; instance files supply the field context and named
objects, flags select what to do with them.  Exit codes: 0 success, 1
mathematical negative (the computation ran and the answer is "no"), 2
validation or parse failure, 3 a configured resource bound was hit.

All output is deterministic: identical inputs produce byte-identical stdout.
The --seed flag is accepted for reproducibility plumbing in batch runs; the
shipped commands are fully deterministic and do not consume it.  The symbolic
term bound for compositions can be overridden with FROBDML_TERM_BOUND.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from .dynamics import (DmlMap, GeneralMap, NotInForm, apply_map, check_conditions,
                       iterate_map, orbit, recognize_dml_form)
from .errors import FrobdmlError, ParseError, ValidationFailure
from .field import format_element, parse_element
from .geometry import ProjPoint, Subvariety, format_poly, reduce_point
from .instances import Instance, parse_instance, parse_twist_file
from .lifting import SigmaFixedLift, critical_witness, minimal_period, sigma_fixed_lift
from .returns import (NO_DECOMPOSITION, APDecomposition, ReturnSet, ap_decompose,
                      default_threshold, return_set)
from .series import AtPrecisionZero, TruncSeries, format_series, parse_series
from .twist import TwistSolution, normalize_conjugate, solve_twist

RETURNS_NOTE = ("membership is precision-qualified (generator valuation >= "
                "threshold) and horizon-qualified (n <= horizon); nothing is "
                "claimed beyond the horizon")


# ---------------------------------------------------------------------------
# report plumbing: every command builds one Report, emitted once
# ---------------------------------------------------------------------------

class Report:
    def __init__(self, text: List[str], obj: dict,
                 csv: Optional[List[List[str]]] = None):
        self.text = text
        self.obj = obj
        self.csv = csv

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.obj, indent=2) + "\n"
        if fmt == "csv":
            rows = self.csv if self.csv is not None else _kv_rows(self.obj)
            return "".join(",".join(row) + "\n" for row in rows)
        return "".join(line + "\n" for line in self.text)


def _kv_rows(obj: dict) -> List[List[str]]:
    rows = [["key", "value"]]
    for k, v in obj.items():
        if isinstance(v, (str, int, bool)) or v is None:
            rows.append([k, _scalar(v)])
        else:
            rows.append([k, json.dumps(v)])
    return rows


def _scalar(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _point_strs(P: ProjPoint) -> List[str]:
    return [format_series(c) for c in P.coords]


def _fmt_point(P: ProjPoint) -> str:
    return "[" + ", ".join(_point_strs(P)) + "]"


def _fmt_row(row: Sequence[TruncSeries]) -> str:
    return "[" + ", ".join(format_series(s) for s in row) + "]"


def _val_str(v) -> str:
    return f">={v.prec}" if isinstance(v, AtPrecisionZero) else str(v)


# ---------------------------------------------------------------------------
# name / literal resolution against an instance
# ---------------------------------------------------------------------------

def _split_tuple(text: str) -> List[str]:
    s = text.strip()
    if len(s) >= 2 and s[0] in "([" and s[-1] in ")]":
        s = s[1:-1]
    parts = [x.strip() for x in s.split(",")]
    if len(parts) < 2 or any(not x for x in parts):
        raise ParseError(f"cannot read {text!r} as a coordinate tuple")
    return parts


def _unknown_point(inst: Instance, text: str) -> ParseError:
    known = ", ".join(inst.points) or "(none)"
    return ParseError(f"unknown point {text!r}; instance defines: {known}")


def _residue_point(inst: Instance, text: str) -> Tuple:
    if text in inst.points:
        P = inst.points[text]
        return reduce_point(P) if isinstance(P, ProjPoint) else P
    if "," not in text:
        raise _unknown_point(inst, text)
    return tuple(parse_element(inst.field, s) for s in _split_tuple(text))


def _proj_point(inst: Instance, text: str, prec: Optional[int]) -> ProjPoint:
    if text in inst.points:
        P = inst.points[text]
        if isinstance(P, ProjPoint):
            return P
        if prec is None:
            raise ParseError(
                f"point {text!r} is a residue point; a working precision is "
                f"needed (--prec or parameters.prec)")
        return ProjPoint(inst.field,
                         [TruncSeries.from_constant(c, prec) for c in P])
    if "," not in text:
        raise _unknown_point(inst, text)
    return ProjPoint(inst.field,
                     [parse_series(inst.field, s, default_prec=prec)
                      for s in _split_tuple(text)])


def _named_variety(inst: Instance, name: str) -> Subvariety:
    if name not in inst.varieties:
        known = ", ".join(inst.varieties) or "(none)"
        raise ParseError(f"unknown variety {name!r}; instance defines: {known}")
    return inst.varieties[name]


def _need(value, flag: str, param: str):
    if value is None:
        raise ParseError(f"missing {flag} (no {param} in the instance parameters)")
    return value


def _load(args) -> Instance:
    path = args.map if getattr(args, "map", None) else args.instance
    if path is None:
        raise ParseError("an instance file is required (positional or --map)")
    return parse_instance(path)


def _dml_only(f, command: str) -> DmlMap:
    if not isinstance(f, DmlMap):
        raise ParseError(f"{command} needs a structured map (A and G blocks), "
                         f"not general coordinates")
    return f


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        inst = _load(args)
    except ValidationFailure as ex:
        lines = ["invalid"] + [str(d) for d in ex.diagnostics]
        obj = {"valid": False, "diagnostics": [str(d) for d in ex.diagnostics]}
        sys.stdout.write(Report(lines, obj).render(args.format))
        return 2
    rep = check_conditions(inst.map)
    label = inst.label or "(unlabeled)"
    lines = [f"valid: {label}",
             f"map: {inst.map!r}",
             f"zero_differential: {_scalar(rep.zero_differential)}",
             f"special_fiber_is_frobenius: {_scalar(rep.special_fiber_is_frobenius)}",
             f"frobenius_power: {_scalar(rep.frobenius_power)}"]
    obj = {"valid": True, "label": inst.label, "map": repr(inst.map),
           "zero_differential": rep.zero_differential,
           "special_fiber_is_frobenius": rep.special_fiber_is_frobenius,
           "frobenius_power": rep.frobenius_power}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def cmd_check_conditions(args) -> int:
    inst = _load(args)
    rep = check_conditions(inst.map)
    lines = [f"zero_differential: {_scalar(rep.zero_differential)}",
             f"special_fiber_is_frobenius: {_scalar(rep.special_fiber_is_frobenius)}",
             f"frobenius_power: {_scalar(rep.frobenius_power)}"]
    obj = {"zero_differential": rep.zero_differential,
           "special_fiber_is_frobenius": rep.special_fiber_is_frobenius,
           "frobenius_power": rep.frobenius_power}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def cmd_orbit(args) -> int:
    inst = _load(args)
    prec = args.prec if args.prec is not None else inst.parameters.prec
    P = _proj_point(inst, args.point, prec)
    H = _need(args.horizon if args.horizon is not None else inst.parameters.H,
              "--horizon", "H")
    pts = orbit(inst.map, P, H)
    lines = [f"{n}: {_fmt_point(Q)}" for n, Q in enumerate(pts)]
    obj = {"horizon": H, "orbit": [_point_strs(Q) for Q in pts]}
    csv = [["n"] + [f"x{i}" for i in range(P.N + 1)]]
    csv += [[str(n)] + _point_strs(Q) for n, Q in enumerate(pts)]
    sys.stdout.write(Report(lines, obj, csv).render(args.format))
    return 0


def cmd_lift(args) -> int:
    inst = _load(args)
    f = _dml_only(inst.map, "lift")
    P0 = _residue_point(inst, args.point0)
    prec = _need(args.prec if args.prec is not None else inst.parameters.prec,
                 "--prec", "prec")
    L = sigma_fixed_lift(f, P0, prec)
    verification = f"f(P~) - σ(P~) = 0 mod t^{prec}"
    lines = [f"P~ = {_fmt_point(L.lift)}",
             verification,
             f"residue_degree: {_scalar(L.residue_degree)}"]
    obj = {"lift": _point_strs(L.lift), "prec": prec,
           "verification": verification,
           "residue_degree": L.residue_degree}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def _twist_matrix_strs(sol: TwistSolution, rows) -> List[List[str]]:
    if sol.field is not None:
        return [[format_element(x) for x in row] for row in rows]
    return [[x for x in row] for row in rows]


def cmd_twist(args) -> int:
    field, A, q = parse_twist_file(args.matrix)
    sol = solve_twist(A, q, args.rmax)
    basis = _twist_matrix_strs(sol, sol.basis)
    B = _twist_matrix_strs(sol, sol.B)
    residue = [[sol.entry_str(x) for x in row] for row in sol.residue()]
    lines = [f"r = {sol.r}"]
    lines += [f"basis[{i}] = [{', '.join(v)}]" for i, v in enumerate(basis)]
    lines += [f"B[{i}] = [{', '.join(row)}]" for i, row in enumerate(B)]
    lines += [f"residue[{i}] = [{', '.join(row)}]" for i, row in enumerate(residue)]
    obj = {"q": q, "r": sol.r, "basis": basis, "B": B, "residue": residue}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def cmd_normalize(args) -> int:
    inst = _load(args)
    f = _dml_only(inst.map, "normalize")
    rmax = args.rmax if args.rmax is not None else inst.parameters.R_max
    sol, fprime = normalize_conjugate(f, rmax)
    B = _twist_matrix_strs(sol, sol.B)
    lines = [f"r = {sol.r}"]
    lines += [f"B[{i}] = [{', '.join(row)}]" for i, row in enumerate(B)]
    lines.append("conjugated matrix part: identity")
    gstrs = [format_poly(g, "y") if not g.is_zero() else "0" for g in fprime.G]
    lines += [f"G'[{i}] = {s}" for i, s in enumerate(gstrs)]
    obj = {"r": sol.r, "B": B, "A_prime": "identity", "G_prime": gstrs}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def cmd_returns(args) -> int:
    inst = _load(args)
    P = _proj_point(inst, args.point, inst.parameters.prec)
    V = _named_variety(inst, args.variety)
    H = _need(args.horizon if args.horizon is not None else inst.parameters.H,
              "--horizon", "H")
    tau = args.threshold if args.threshold is not None else inst.parameters.tau
    if tau is None:
        tau = default_threshold(P.prec)
    M = args.max_period if args.max_period is not None else inst.parameters.M_max
    rs = return_set(inst.map, P, V, H, tau)
    dec = ap_decompose(rs, M)
    prog_strs = [f"{r} mod {m}" for r, m in dec.progressions]
    lines = [f"horizon: {H}",
             f"threshold: {tau}",
             "hits: " + (" ".join(str(n) for n in rs.hits) if rs.hits else "(none)"),
             f"status: {dec.status}",
             f"n0: {_scalar(dec.n0)}",
             "sporadic: " + (" ".join(str(n) for n in dec.sporadic)
                             if dec.sporadic else "(none)"),
             "progressions: " + ("; ".join(prog_strs) if prog_strs else "(none)"),
             f"note: {RETURNS_NOTE}"]
    obj = {"horizon": H, "threshold": tau, "hits": list(rs.hits),
           "valuations": [[_val_str(v) for v in vals] for vals in rs.valuations],
           "decomposition": {"status": dec.status, "n0": dec.n0,
                             "sporadic": list(dec.sporadic),
                             "progressions": [list(pr) for pr in dec.progressions]},
           "note": RETURNS_NOTE}
    ngen = len(V.generators)
    csv = [["n", "member"] + [f"val{i}" for i in range(ngen)]]
    hitset = set(rs.hits)
    for n, vals in enumerate(rs.valuations):
        csv.append([str(n), "1" if n in hitset else "0"]
                   + [_val_str(v) for v in vals])
    sys.stdout.write(Report(lines, obj, csv).render(args.format))
    return 0 if dec.status != NO_DECOMPOSITION else 1


def cmd_compose(args) -> int:
    inst = _load(args)
    if args.times < 1:
        raise ParseError("--times must be >= 1")
    fk = iterate_map(inst.map, args.times)
    lines = [f"f^{args.times}[{i}] = {format_poly(h, 'x')}"
             for i, h in enumerate(fk.coords)]
    obj: Dict[str, object] = {
        "times": args.times,
        "coordinates": [format_poly(h, "x") for h in fk.coords]}
    code = 0
    if args.recognize is not None:
        p = inst.field.p
        qv, e = args.recognize, 0
        while qv > 1 and qv % p == 0:
            qv //= p
            e += 1
        if qv != 1 or e < 1:
            raise ParseError(
                f"--recognize value {args.recognize} is not a positive power "
                f"of the characteristic {p}")
        rec = recognize_dml_form(fk, p, e)
        if isinstance(rec, NotInForm):
            lines.append(f"not in form: {rec}")
            obj["recognized"] = None
            obj["not_in_form"] = str(rec)
            code = 1
        else:
            lines.append(f"recognized: q = {rec.q}")
            lines += [f"A[{i}] = {_fmt_row(row)}" for i, row in enumerate(rec.A)]
            gstrs = [format_poly(g, "y") if not g.is_zero() else "0"
                     for g in rec.G]
            lines += [f"G[{i}] = {s}" for i, s in enumerate(gstrs)]
            obj["recognized"] = {
                "q": rec.q,
                "A": [[format_series(s) for s in row] for row in rec.A],
                "G": gstrs}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return code


def cmd_witness(args) -> int:
    inst = _load(args)
    f = _dml_only(inst.map, "witness")
    P0 = _residue_point(inst, args.point0)
    prec = _need(args.prec if args.prec is not None else inst.parameters.prec,
                 "--prec", "prec")
    L = sigma_fixed_lift(f, P0, prec)
    Q = critical_witness(f, L, args.index)
    lines = [f"Q = σ^(-{args.index})(P~) = {_fmt_point(Q)}",
             f"f^{args.index}(Q) = P~ (verified exactly)"]
    obj = {"index": args.index, "witness": _point_strs(Q),
           "lift": _point_strs(L.lift), "verified": True}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


def cmd_period(args) -> int:
    inst = _load(args)
    f = _dml_only(inst.map, "period")
    P0 = _residue_point(inst, args.point0)
    prec = _need(args.prec if args.prec is not None else inst.parameters.prec,
                 "--prec", "prec")
    L = sigma_fixed_lift(f, P0, prec)
    d = minimal_period(f, L)
    lines = [f"residue_degree: {_scalar(L.residue_degree)}",
             f"minimal_period: {d}"]
    obj = {"residue_degree": L.residue_degree, "minimal_period": d}
    sys.stdout.write(Report(lines, obj).render(args.format))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "csv", "json"),
                        default="text", help="output format (default text)")
    common.add_argument("--seed", type=int, default=0, metavar="N",
                        help="seed for randomized batch operations; shipped "
                             "commands are deterministic and ignore it")

    parser = argparse.ArgumentParser(
        prog="frobdml",
        description="Exact arithmetic for Frobenius-lifting self-maps of "
                    "projective space over F_q[[t]]: structural validation, "
                    "sigma-fixed lifts, twist normalization, and return-set "
                    "decompositions.",
        epilog="Set FROBDML_TERM_BOUND to override the symbolic term bound "
               "used by compose/recognize.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext, instance=True):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if instance:
            sp.add_argument("instance", nargs="?", help="instance file (JSON)")
            sp.add_argument("--map", metavar="FILE",
                            help="instance file (alias for the positional)")
        sp.set_defaults(fn=fn)
        return sp

    sp = add("validate", cmd_validate,
             "parse an instance, run structural validation, report conditions")

    sp = add("check-conditions", cmd_check_conditions,
             "report the structural conditions of the map")

    sp = add("orbit", cmd_orbit, "print the orbit of a point")
    sp.add_argument("--point", required=True, help="point name or coordinate tuple")
    sp.add_argument("--horizon", type=int, help="number of steps")
    sp.add_argument("--prec", type=int, help="working precision for literal points")

    sp = add("lift", cmd_lift, "compute the sigma-fixed lift of a residue point")
    sp.add_argument("--point0", required=True,
                    help="residue point name or element tuple, e.g. '(1,a)'")
    sp.add_argument("--prec", type=int, help="target precision")

    sp = add("twist", cmd_twist,
             "solve B^(q) = A*B for a matrix file", instance=False)
    sp.add_argument("matrix", help="matrix file (JSON: q, field, A)")
    sp.add_argument("--rmax", type=int, default=64,
                    help="largest extension degree searched (default 64)")

    sp = add("normalize", cmd_normalize,
             "conjugate the map so its matrix part becomes the identity")
    sp.add_argument("--rmax", type=int, help="largest extension degree searched")

    sp = add("returns", cmd_returns,
             "compute a return set and decompose it into progressions")
    sp.add_argument("--point", required=True, help="point name or coordinate tuple")
    sp.add_argument("--variety", required=True, help="variety name")
    sp.add_argument("--horizon", type=int, help="largest iterate checked")
    sp.add_argument("--threshold", type=int, help="valuation threshold")
    sp.add_argument("--max-period", type=int, dest="max_period",
                    help="largest progression modulus tried")

    sp = add("compose", cmd_compose, "iterate the map symbolically")
    sp.add_argument("--times", type=int, required=True, help="iteration count")
    sp.add_argument("--recognize", type=int, metavar="Q",
                    help="recognize the result in structured form at degree Q")

    sp = add("witness", cmd_witness,
             "produce the n-fold preimage witness sigma^(-n)(P~)")
    sp.add_argument("--point0", required=True,
                    help="residue point name or element tuple")
    sp.add_argument("--index", type=int, required=True, help="iterate index n")
    sp.add_argument("--prec", type=int, help="target precision")

    sp = add("period", cmd_period,
             "residue degree and minimal period of the sigma-fixed lift")
    sp.add_argument("--point0", required=True,
                    help="residue point name or element tuple")
    sp.add_argument("--prec", type=int, help="target precision")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationFailure as ex:
        for d in ex.diagnostics:
            sys.stderr.write(f"{d}\n")
        return 2
    except FrobdmlError as ex:
        sys.stderr.write(f"error: {type(ex).__name__}: {ex}\n")
        return ex.exit_code


if __name__ == "__main__":
    sys.exit(main())

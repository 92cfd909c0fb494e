"""Command-line front end: ``polycrit <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or domain error, 2 numerical
non-convergence, 3 file I/O or malformed JSON.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from ._validation import parse_angle
from .classify import (capacity_threshold, classify_measure_on_polyhedron, classify_removability,
                       cube_polyhedron, polyhedron_from_dict)
from .errors import ConvergenceError, DomainError, InputError, SchemeViolationError
from .exponents import StratumSpec, build_exponent_table, classify_q_regime
from .io import decode, dumps, read_json, write_text
from .measures import KernelParams, admissibility_integral, lifted_integral, measure_from_dict
from .profile import NonlinearProfileProblem, solve_omega
from .sector import (BoundaryData, SectorDomain, discrete_residual, harnack_ratio_check,
                     keller_osserman_constant, omega_profile, solve_semilinear,
                     strong_singularity_experiment, weak_singularity_experiment)
from .spectral import (Arc, BoxProduct, Cap, IntervalFactor, cross_section_eigen, default_mesh,
                       opening_from_dict)

EXIT_DOMAIN, EXIT_CONVERGENCE, EXIT_IO = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the domain-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _emit(text, output):
    if output:
        write_text(output, text)
    else:
        print(text)


def _parse_box(text):
    factors = []
    for idx, item in enumerate(text.split(",")):
        item = item.strip()
        if item == "full":
            factors.append(IntervalFactor.whole(innermost=idx == 0))
            continue
        try:
            lo, hi = item.split(":")
        except ValueError:
            raise DomainError(f"box factor {item!r} is not 'lower:upper' or 'full'") from None
        factors.append(IntervalFactor(parse_angle(lo), parse_angle(hi)))
    return BoxProduct(tuple(factors))


def _opening_from_args(args):
    if getattr(args, "arc", None) is not None:
        return Arc(parse_angle(args.arc))
    if getattr(args, "cap", None) is not None:
        dim, theta0 = args.cap
        return Cap(int(dim), parse_angle(theta0))
    if getattr(args, "box", None) is not None:
        return _parse_box(args.box)
    return None


# --- subcommands ------------------------------------------------------------

def cmd_exponents(args):
    spec = StratumSpec(args.N, args.k, opening=_opening_from_args(args), gamma=args.gamma,
                       lambda_A=args.lambda_A, mesh=args.mesh)
    table = build_exponent_table(spec)
    out = table.to_dict()
    extra = {"N": table.N, "k": table.k, "gamma_error": table.gamma_error}
    if args.q:
        extra["at_q"] = [{"q": q, "s": table.s(q), "lambda_Nq": table.lambda_Nq(q),
                          "regime": classify_q_regime(table, q).value} for q in args.q]
    if args.format == "table":
        lines = [f"{k:<14} {v!r}" for k, v in out.items()]
        for row in extra.get("at_q", []):
            lines.append(f"q = {row['q']:g}: s = {row['s']:.10g}, lambda_Nq = {row['lambda_Nq']:.10g}, {row['regime']}")
        _emit("\n".join(lines), args.output)
    else:
        out.update(extra)
        _emit(dumps(out), args.output)
    return 0


def cmd_profile(args):
    opening = _opening_from_args(args)
    if opening is None:
        raise DomainError("profile needs --arc or --cap")
    if args.linear:
        res = cross_section_eigen(opening, args.mesh or default_mesh())
        prof, header = res.layers[-1].profile, ("theta", "phi")
        info = {"eigenvalue": res.eigenvalue, "error_estimate": res.error_estimate}
    else:
        if args.q is None:
            raise DomainError("profile needs --q unless --linear is given")
        prob = NonlinearProfileProblem(args.N, args.q, opening, args.mesh or 1024)
        res = solve_omega(prob)
        if not res.exists:
            cert = {"exists": False, "lambda_S": res.lambda_S, "lambda_Nq": res.lambda_Nq,
                    "boundary_case": res.boundary_case, "decays": res.decays}
            print(dumps(cert))
            return 0
        prof, header = res.profile, ("theta", "omega")
        info = {"exists": True, "max": res.max, "residual": res.residual, "lambda_S": res.lambda_S,
                "lambda_Nq": prob.lambda_Nq}
    if args.output:
        try:
            prof.to_csv(args.output, header=header)
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc.strerror or exc}") from None
        print(dumps(info))
    else:
        lines = [",".join(header)] + [f"{t!r},{v!r}" for t, v in zip(prof.nodes.tolist(), prof.values.tolist())]
        print("\n".join(lines))
    return 0


def _data_spec(dom, spec):
    """Boundary data from ``{"inner", "outer", "ray0", "ray1"}`` entries.

    Each entry is a number (constant), ``{"sin": A}`` on arcs for
    ``A sin(pi theta / alpha)`` or ``{"bump": A}`` on rays for a parabola of
    height ``A`` vanishing at both ends.
    """
    spec = spec or {}
    a = math.pi / dom.alpha
    width = dom.r_max - dom.r_min

    def arc(v):
        if isinstance(v, dict) and "sin" in v:
            return lambda th: float(v["sin"]) * np.sin(a * th)
        return float(v)

    def ray(v):
        if isinstance(v, dict) and "bump" in v:
            return lambda r: float(v["bump"]) * 4.0 * (r - dom.r_min) * (dom.r_max - r) / width ** 2
        return float(v)
    unknown = set(spec) - {"inner", "outer", "ray0", "ray1"}
    if unknown:
        raise DomainError(f"unknown boundary entries {sorted(unknown)}")
    return BoundaryData.build(dom, inner=arc(spec.get("inner", 0.0)), outer=arc(spec.get("outer", 0.0)),
                              ray0=ray(spec.get("ray0", 0.0)), ray1=ray(spec.get("ray1", 0.0)))


def _domain(exp):
    alpha = parse_angle(exp.get("alpha", math.pi))
    return SectorDomain.graded(alpha, float(exp.get("r_min", 1e-4)), float(exp.get("r_max", 1.0)),
                               int(exp.get("cells_per_decade", 64)), int(exp.get("n_theta", 64)))


def run_experiment(exp, field_csv=None):
    """Run one sector experiment described by a JSON dictionary."""
    kind = exp.get("experiment")
    q = exp.get("q")
    q = None if q is None else float(q)
    if kind == "weak":
        dom = _domain(exp)
        masses = exp.get("k", [1.0])
        masses = masses if isinstance(masses, list) else [masses]
        fits = [weak_singularity_experiment(dom, q, float(k)) for k in masses]
        out = {"experiment": "weak", "fits": [f.to_dict() for f in fits]}
        if len(fits) > 1:
            out["amplitude_ratios"] = [f.amplitude / fits[0].amplitude for f in fits]
        return out
    if kind == "strong":
        dom = _domain(exp)
        window = exp.get("window")
        fit = strong_singularity_experiment(dom, q, int(exp.get("ladder", 12)),
                                            None if window is None else tuple(map(float, window)))
        return {"experiment": "strong", **fit.to_dict()}
    if kind == "harnack":
        dom = _domain(exp)
        rep = harnack_ratio_check(dom, q, _data_spec(dom, exp.get("data1")), _data_spec(dom, exp.get("data2")),
                                  radius=float(exp.get("radius", 0.2)))
        return {"experiment": "harnack", "sup_ratio": rep.sup_ratio, "nodes": rep.nodes, "radius": rep.radius}
    if kind == "keller_osserman":
        dom = _domain(exp)
        rows = []
        for M in exp.get("M", [1e2, 1e4, 1e6]):
            fld = solve_semilinear(dom, q, BoundaryData.build(dom, inner=float(M)))
            rows.append({"M": float(M), "C": keller_osserman_constant(fld, float(exp.get("min_dist", 0.05)))})
        return {"experiment": "keller_osserman", "rows": rows}
    if kind == "exact":
        alpha = parse_angle(exp.get("alpha", "3pi/4"))
        beta = 2.0 / (q - 1.0)
        omega = omega_profile(alpha, q)
        rows = []
        for nr, nt in exp.get("grids", [[32, 16], [64, 32], [128, 64], [256, 128]]):
            dom = SectorDomain(alpha, float(exp.get("r_min", 0.1)), float(exp.get("r_max", 1.0)), nr, nt)
            U = dom.r[:, None] ** (-beta) * omega(dom.theta)[None, :]
            res = discrete_residual(dom, q, U) * dom.r[1:-1, None] ** beta
            rows.append({"n_r": nr, "n_theta": nt, "scaled_residual": float(np.max(np.abs(res)))})
        orders = [math.log2(a["scaled_residual"] / b["scaled_residual"]) for a, b in zip(rows, rows[1:])]
        return {"experiment": "exact", "rows": rows, "orders": orders}
    if kind == "solve":
        dom = _domain(exp)
        fld = solve_semilinear(dom, q, _data_spec(dom, exp.get("data")))
        if field_csv:
            try:
                fld.to_csv(field_csv)
            except OSError as exc:
                raise InputError(f"cannot write {field_csv}: {exc.strerror or exc}") from None
        return {"experiment": "solve", "residual": fld.residual, "iterations": fld.iterations,
                "max": float(fld.values.max()), "min": float(fld.values.min())}
    raise DomainError(f"unknown experiment {kind!r}; expected weak, strong, harnack, keller_osserman, exact or solve")


def cmd_simulate(args):
    exp = decode(read_json(args.experiment))
    if not isinstance(exp, dict):
        raise InputError("experiment file must hold a JSON object")
    _emit(dumps(run_experiment(exp, args.field_csv)), args.output)
    return 0


def _table_from_doc(doc):
    opening = doc.get("opening")
    spec = StratumSpec(doc["N"], doc["k"], opening=opening_from_dict(opening) if opening else None,
                       gamma=doc.get("gamma"), lambda_A=doc.get("lambda_A"))
    return build_exponent_table(spec)


def cmd_admissibility(args):
    doc = decode(read_json(args.measure))
    try:
        table = _table_from_doc(doc)
        qs = args.q or doc.get("q")
        qs = qs if isinstance(qs, list) else [qs]
        mu = measure_from_dict(doc["measure"], m=table.edge_dim)
    except KeyError as exc:
        raise DomainError(f"measure document lacks {exc}") from None
    if qs == [None]:
        raise DomainError("no exponent given (use --q or a 'q' entry)")
    R = float(args.R if args.R is not None else doc.get("R", 1.0))
    rows = []
    for q in qs:
        params = KernelParams.from_table(table, float(q))
        row = {"q": float(q), "s": params.s, "nu": params.nu, "R": R}
        row.update(admissibility_integral(params, mu, R).to_dict())
        lift = doc.get("lifted")
        if lift:
            row["lifted"] = lifted_integral(params, mu, float(lift["sigma"]), int(lift["j"]))
        rows.append(row)
    _emit(dumps({"table": table.to_dict(), "results": rows}), args.output)
    return 0


def _classify_payload(poly, q):
    rep = classify_measure_on_polyhedron(poly.strata, q, poly.measure)
    out = rep.to_dict()
    if poly.removable_set:
        out["removability"] = classify_removability(poly.strata, q, poly.removable_set).to_dict()
    return rep, out


def cmd_classify(args):
    doc = decode(read_json(args.polyhedron))
    poly = polyhedron_from_dict(doc, args.mesh)
    q = args.q if args.q is not None else poly.q
    if q is None:
        raise DomainError("no exponent given (use --q or a 'q' entry)")
    rep, out = _classify_payload(poly, q)
    if args.format == "table":
        text = rep.table()
        if "removability" in out:
            text += f"\nremovability of the given set: {out['removability']['verdict']}"
        _emit(text, args.output)
    else:
        _emit(dumps(out), args.output)
    return 0


def showcase(mesh=None):
    """Cube showcase: exponent tables, vertex eigenvalue and verdicts at three exponents."""
    poly = cube_polyhedron()
    mesh = mesh or 4096
    octant = BoxProduct((IntervalFactor(0.0, math.pi / 2), IntervalFactor(0.0, math.pi / 2)))
    vertex = cross_section_eigen(octant, mesh)
    vertex_table = build_exponent_table(StratumSpec(3, 3, gamma=vertex.eigenvalue))
    bundle = {
        "tables": {s.id: s.table.to_dict() for s in poly.strata},
        "vertex_spectral": {"mesh": mesh, "gamma": vertex.eigenvalue, "error_estimate": vertex.error_estimate,
                            "q_c": vertex_table.q_c},
        "classifications": {},
        "removability": {},
    }
    edge = poly.tables["edge"]
    for q in (1.4, 1.9, 2.5):
        rep = classify_measure_on_polyhedron(poly.strata, q, poly.measure)
        bundle["classifications"][repr(q)] = rep.to_dict()
    sets = {"edge_point": (1.9, [("edge", 0)]), "full_edge": (1.9, [("edge", 1)]),
            "vertex": (1.5, [("vertex", 0)])}
    for name, (q, pieces) in sets.items():
        bundle["removability"][name] = classify_removability(poly.strata, q, pieces).to_dict()
    bundle["edge_threshold_q1.9"] = capacity_threshold(edge, 1.9).d_crit
    return bundle


def cmd_report(args):
    _emit(dumps(showcase(args.mesh)), args.output)
    return 0


# --- parser -----------------------------------------------------------------

def _add_opening(p, cap=True, box=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--arc", help="arc opening angle in radians, e.g. pi/2")
    if cap:
        g.add_argument("--cap", nargs=2, metavar=("DIM", "HALF_ANGLE"), help="cap of S^DIM with the given half-angle")
    if box:
        g.add_argument("--box", help="box factors innermost first, e.g. '0:pi/2,0:pi/2' or '0:pi/2,full'")
    return g


def build_parser():
    parser = _Parser(prog="polycrit", description="Critical exponents and boundary singularities of -Lu + u^q = 0.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("exponents", help="exponent table of a stratum")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    g = _add_opening(p)
    g.add_argument("--gamma", type=float)
    g.add_argument("--lambda-A", dest="lambda_A", type=float)
    p.add_argument("--q", type=float, action="append", help="also report s, lambda_Nq and the regime (repeatable)")
    p.add_argument("--mesh", type=int)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("profile", help="nonlinear profile omega_S (or eigenfunction) as CSV")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--q", type=float)
    _add_opening(p, box=False)
    p.add_argument("--linear", action="store_true", help="write the first eigenfunction instead")
    p.add_argument("--mesh", type=int)
    p.add_argument("-o", "--output", help="CSV path (default: CSV on standard output)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="run a sector experiment from a JSON file")
    p.add_argument("experiment")
    p.add_argument("--field-csv", help="write the solved field (experiment 'solve')")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("admissibility", help="admissibility integral of an edge measure")
    p.add_argument("measure")
    p.add_argument("--q", type=float, action="append")
    p.add_argument("--R", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_admissibility)

    p = sub.add_parser("classify", help="classify a measure on a polyhedron")
    p.add_argument("polyhedron")
    p.add_argument("--q", type=float)
    p.add_argument("--mesh", type=int)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="cube showcase bundle")
    p.add_argument("--mesh", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("polycrit: error: a subcommand is required", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        if getattr(args, "mesh", None) is None and args.command in ("exponents", "classify"):
            args.mesh = default_mesh()
        return args.func(args)
    except InputError as exc:
        print(f"polycrit {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, SchemeViolationError) as exc:
        print(f"polycrit {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, NotImplementedError, ValueError, TypeError) as exc:
        print(f"polycrit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

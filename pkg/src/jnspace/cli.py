"""``jnspace`` command line: thin wrappers that read JSON, call the library and write JSON/CSV.

Exit codes: 0 success, 1 precondition violation (bad input or flags),
2 a checked invariant or bound failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import construct, duality, extend, monotone, norms, reports
from .funcs import CubeFamily, StepFunction, load_function

EXIT_OK, EXIT_PRECONDITION, EXIT_INVARIANT = 0, 1, 2


class InvariantFailure(Exception):
    pass


def _exponent(text: str) -> float:
    return duality._parse_exponent(text)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _read_json(path: str):
    return json.loads(Path(path).read_text())


# --- commands ---------------------------------------------------------------


def cmd_construct(a) -> int:
    if a.kind == "dyadic":
        f = construct.dyadic_counterexample(a.p, a.depth)
    else:
        tree = construct.HatTree(a.depth)
        f = construct.counterexample(a.p, a.depth, tree)
        if a.tree:
            Path(a.tree).write_text(_json(tree.to_json()))
    _emit(_json(f.to_json()), a.out)
    return EXIT_OK


def cmd_norms(a) -> int:
    f = load_function(a.input)
    q = a.q if a.q is not None else a.p
    out = {"p": a.p, "q": q, "lp": norms.lp_norm(f, a.p), "weakLp": norms.weak_lp_norm(f, a.p),
           "lorentz": norms.lorentz_norm(f, a.p, q)}
    _emit(_json(out), a.out)
    return EXIT_OK


def cmd_jnp(a) -> int:
    f = load_function(a.input)
    if a.dyadic or a.method == "dyadic":
        est = norms.jnp_dyadic(f, a.p, a.q)
    else:
        est = norms.jnp_lower_bound(f, a.p, a.q, a.refine)
    out = est.to_json()
    if a.emit_family:
        Path(a.emit_family).write_text(_json(out["family"]))
    _emit(_json(out), a.out)
    return EXIT_OK


def cmd_monotone(a) -> int:
    f = load_function(a.input)
    if not isinstance(f, StepFunction):
        f = f.to_step()
    if a.normalize:
        f = monotone.normalize(f, a.p)
    run = monotone.monotone_family(f, a.p)
    rep = monotone.monotone_lower_bound_check(f, a.p)
    violations = monotone.trace_violations(f, run)
    out = rep.to_json()
    out["stop"] = run.stop
    out["steps"] = [{"lambda": s.lam, "tag": s.tag, "A": s.A.as_list(),
                     "B": s.B.as_list() if s.B else None, "C": s.C.as_list() if s.C else None,
                     "I": s.I.as_list()} for s in run.steps]
    out["violations"] = violations
    _emit(_json(out), a.report or a.out)
    if violations or rep.ok is False:
        raise InvariantFailure("; ".join(violations) or "ratio below the frozen constant")
    return EXIT_OK


def cmd_duality_cz(a) -> int:
    f = load_function(a.input)
    if isinstance(f, StepFunction):
        f = duality._grid_of(f)
    lam = None if a.lam == "auto" else float(a.lam)
    dec = duality.cz_decompose(f, lam, a.C)
    out = dec.to_json()
    out["violations"] = duality.cz_violations(f, dec)
    _emit(_json(out), a.out)
    if out["violations"]:
        raise InvariantFailure("; ".join(out["violations"]))
    return EXIT_OK


def _load_polymers(path: str) -> list[duality.Polymer]:
    obj = _read_json(path)
    if isinstance(obj, list):
        return [duality.Polymer.from_json(o) for o in obj]
    if "polymers" in obj:
        return [duality.Polymer.from_json(o) for o in obj["polymers"]]
    return [duality.Polymer.from_json(obj)]


def cmd_duality_flatten(a) -> int:
    (g,) = _load_polymers(a.input)
    parts = duality.flatten_polymer(g, a.C)
    out = {"sizes": [duality.polymer_size(p) for p in parts], "inputSize": duality.polymer_size(g),
           "ratio": duality.flattening_ratio(g, parts), "polymers": [p.to_json() for p in parts]}
    _emit(_json(out), a.out)
    return EXIT_OK


def cmd_duality_pair(a) -> int:
    f = load_function(a.f)
    gs = _load_polymers(a.g)
    out = {"pairing": duality.pairing(f, gs)}
    if a.truncate is not None:
        out["truncated"] = duality.pairing(duality.truncate(f, a.truncate), gs)
    _emit(_json(out), a.out)
    return EXIT_OK


def cmd_duality_nearopt(a) -> int:
    f = load_function(a.f)
    cubes = CubeFamily.from_json(_read_json(a.cubes))
    P = duality.near_optimal_polymer(f, cubes, a.r, a.s)
    value = duality.dual_value(f, cubes, a.r, a.s)
    attained = duality.pairing(f, P)
    out = {"dualValue": value, "pairing": attained, "attainment": attained / value,
           "size": duality.polymer_size(P), "polymer": P.to_json()}
    _emit(_json(out), a.out)
    return EXIT_OK


def cmd_extend(a) -> int:
    f = load_function(a.input)
    rep = extend.extension_report(f, a.p, a.level)
    _emit(_json(rep.to_json()), a.report or a.out)
    if not (rep.lower_ok and rep.upper_ok):
        raise InvariantFailure("extension bounds violated")
    return EXIT_OK


def cmd_report_counterexample(a) -> int:
    q = a.q if a.q is not None else a.p
    rows = reports.counterexample_rows(a.p, a.gmax, a.refine, q, a.threads)
    header = {"report": "counterexample", "p": a.p, "q": q, "gmax": a.gmax, "refine": a.refine}
    _emit(reports.to_csv(rows, reports.COUNTEREXAMPLE_COLUMNS, header), a.out)
    return EXIT_OK


def cmd_report_duality(a) -> int:
    rows = reports.duality_rows(a.seed, a.r, a.s, a.C, a.trials, a.threads)
    header = {"report": "duality", "seed": a.seed, "r": a.r, "s": a.s, "C": a.C or "default",
              "trials": a.trials}
    _emit(reports.to_csv(rows, reports.DUALITY_COLUMNS, header), a.out)
    return EXIT_OK


def cmd_report_monotone(a) -> int:
    rows = reports.monotone_rows(a.seed, a.p, a.trials, a.threads)
    header = {"report": "monotone", "seed": a.seed, "p": a.p, "trials": a.trials}
    _emit(reports.to_csv(rows, reports.MONOTONE_COLUMNS, header), a.out)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _p_exponent(text: str) -> float:
    p = float(text)
    if not 1 < p < math.inf:
        raise argparse.ArgumentTypeError("p must lie in (1, inf)")
    return p


class _Parser(argparse.ArgumentParser):
    """Usage errors are precondition violations (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PRECONDITION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="PRNG seed for randomized suites")
    common.add_argument("--threads", type=int, default=1, help="worker threads (speed only)")
    common.add_argument("--out", help="output file (default: stdout)")

    parser = _Parser(prog="jnspace", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common], help="build a counterexample")
    c.add_argument("--kind", choices=["dyadic", "full"], default="full")
    c.add_argument("--p", type=_p_exponent, required=True)
    c.add_argument("--depth", type=int, required=True, help="K for dyadic, G for full")
    c.add_argument("--tree", help="also write the hat tree JSON here")
    c.set_defaults(func=cmd_construct)

    n = sub.add_parser("norms", parents=[common], help="L^p, weak L^p and Lorentz norms")
    n.add_argument("--input", required=True)
    n.add_argument("--p", type=_p_exponent, required=True)
    n.add_argument("--q", type=float)
    n.set_defaults(func=cmd_norms)

    j = sub.add_parser("jnp", parents=[common], help="JN_{p,q} estimate by family optimization")
    j.add_argument("--input", required=True)
    j.add_argument("--p", type=_p_exponent, required=True)
    j.add_argument("--q", type=float, default=1.0)
    j.add_argument("--method", choices=["dyadic", "grid"], default="grid")
    j.add_argument("--refine", type=int, default=1)
    j.add_argument("--dyadic", action="store_true", help="same as --method dyadic")
    j.add_argument("--emit-family", help="write the optimizing family JSON here")
    j.set_defaults(func=cmd_jnp)

    m = sub.add_parser("monotone", parents=[common], help="interval selection for monotone f")
    m.add_argument("--input", required=True)
    m.add_argument("--p", type=_p_exponent, required=True)
    m.add_argument("--report")
    m.add_argument("--normalize", action="store_true", help="subtract the mean and orient f first")
    m.set_defaults(func=cmd_monotone)

    d = sub.add_parser("duality", help="atoms, polymers and the pairing")
    dsub = d.add_subparsers(dest="action", required=True)
    cz = dsub.add_parser("cz", parents=[common], help="Calderon-Zygmund decomposition")
    cz.add_argument("--input", required=True)
    cz.add_argument("--C", type=float)
    cz.add_argument("--lambda", dest="lam", default="auto")
    cz.set_defaults(func=cmd_duality_cz)
    fl = dsub.add_parser("flatten", parents=[common], help="(r,s) polymer -> (r,inf) polymers")
    fl.add_argument("--input", required=True)
    fl.add_argument("--C", type=float)
    fl.set_defaults(func=cmd_duality_flatten)
    pr = dsub.add_parser("pair", parents=[common], help="pairing of f with polymers")
    pr.add_argument("--f", required=True)
    pr.add_argument("--g", required=True)
    pr.add_argument("--truncate", type=float, help="also pair the truncation f_N")
    pr.set_defaults(func=cmd_duality_pair)
    no = dsub.add_parser("nearopt", parents=[common], help="near-optimal polymer for a cube family")
    no.add_argument("--f", required=True)
    no.add_argument("--cubes", required=True)
    no.add_argument("--r", type=float, required=True)
    no.add_argument("--s", type=_exponent, required=True)
    no.set_defaults(func=cmd_duality_nearopt)
    dr = dsub.add_parser("report", parents=[common], help="randomized duality table (CSV)")
    _duality_report_args(dr)

    e = sub.add_parser("extend", parents=[common], help="trivial extension to the unit square")
    e.add_argument("--input", required=True)
    e.add_argument("--level", type=int)
    e.add_argument("--p", type=_p_exponent, required=True)
    e.add_argument("--report")
    e.set_defaults(func=cmd_extend)

    r = sub.add_parser("report", help="CSV tables")
    rsub = r.add_subparsers(dest="table", required=True)
    rc = rsub.add_parser("counterexample", parents=[common])
    rc.add_argument("--p", type=_p_exponent, required=True)
    rc.add_argument("--gmax", type=int, default=8)
    rc.add_argument("--refine", type=int, default=4)
    rc.add_argument("--q", type=float, help="Lorentz exponent (default p)")
    rc.set_defaults(func=cmd_report_counterexample)
    rd = rsub.add_parser("duality", parents=[common])
    _duality_report_args(rd)
    rm = rsub.add_parser("monotone", parents=[common])
    rm.add_argument("--p", type=_p_exponent, default=2.0)
    rm.add_argument("--trials", type=int, default=100)
    rm.set_defaults(func=cmd_report_monotone)
    return parser


def _duality_report_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--s", type=_exponent, default=4.0)
    p.add_argument("--C", type=float)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_report_duality)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "r", None) is not None and getattr(args, "s", None) is not None:
            if not 1 < args.r < args.s:
                raise ValueError("need 1 < r < s")
        if getattr(args, "C", None) is not None and args.C <= 2:
            raise ValueError("C must exceed 2**d")
        return args.func(args)
    except InvariantFailure as exc:
        print(f"jnspace: invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"jnspace: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success / all checks pass, 1 a verdict failed, 2 usage or
precondition error.  JSON reports are written with sorted keys and embed the
run configuration and the toolkit version, so identical invocations give
byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import __version__, certify, ndc, weights
from .envelope import DEFAULT_POINTS, DEFAULT_R_MIN_RATIO, DEFAULT_TRUNCATION, compute_envelope, make_grid
from .errors import CknError
from .weightlang import parse_weight

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GRID_ENV = "CKN_GRID_POINTS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_points():
    raw = os.environ.get(GRID_ENV)
    if raw is None:
        return DEFAULT_POINTS
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"{GRID_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cknweights", description="Weighted p=1 CKN-type inequality toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, weight=True, fmt="json"):
        p = sub.add_parser(name, help=help_)
        if weight:
            p.add_argument("--weight", required=True, help="weight spec, e.g. 'prod(pow(2),expinv(1,+))'")
            p.add_argument("--eta", type=float, default=1.0, help="cutoff eta (inf allowed for 1D)")
            p.add_argument("--grid-points", type=int, default=None)
            p.add_argument("--r-min-ratio", type=float, default=DEFAULT_R_MIN_RATIO)
            p.add_argument("--truncation", type=float, default=DEFAULT_TRUNCATION,
                           help="truncation radius used when eta = inf")
        p.add_argument("--format", dest="out_format", choices=("json", "csv"), default=fmt)
        p.add_argument("--out", dest="out_path", default=None, help="output file (default stdout)")
        return p

    add("classify", "limit class of w at 0")
    p = add("envelope", "monotone envelope on the grid", fmt="csv")
    p.add_argument("--q", type=float, default=1.0)
    add("k-profile", "K(r) on the moving cells", fmt="csv")
    p = add("ndc", "non-degenerate condition and infinite-order test")
    p.add_argument("--threshold", type=float, default=ndc.DEFAULT_THRESHOLD)
    p.add_argument("--m-max", type=int, default=16)
    for name, n_default in (("verify-1d", 1), ("verify-nd", 2)):
        p = add(name, "random-battery validity check")
        p.add_argument("--q", type=float, default=2.0)
        p.add_argument("--n", type=int, default=n_default)
        p.add_argument("--battery-size", type=int, default=50)
        p.add_argument("--seed", type=int, default=0)
    p = add("best-const-1d", "localized-family sweep toward the sharp 1D constant")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--h-sweep", type=_float_list, default=list(certify.DEFAULT_H_SWEEP))
    p.add_argument("--tolerance", type=float, default=1e-2)
    p = add("best-const-rad", "smoothed-indicator sweep for the radial constant", weight=False)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--eps-sweep", type=_float_list, default=list(certify.DEFAULT_EPS_SWEEP))
    p.add_argument("--overshoot", type=float, default=0.15)
    p = add("counterexample", "divergent sequence when K -> 0", fmt="csv")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--j-max", type=int, default=8)
    p.add_argument("--s", type=float, default=None, help="angular exponent (default (1/q+1)/2)")
    return parser


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())}
    for k, v in cfg.items():
        if isinstance(v, float) and math.isinf(v):
            cfg[k] = "inf"
    return cfg


def _json_text(args, payload: dict) -> str:
    doc = {"schema": SCHEMA, "version": __version__, "command": args.command, "config": _config(args)}
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(args, header, rows, meta=None) -> str:
    buf = io.StringIO()
    info = {"schema": SCHEMA, "version": __version__, "command": args.command, "config": _config(args)}
    if meta:
        info.update(meta)
    buf.write("# " + json.dumps(info, sort_keys=True, allow_nan=False) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, text: str):
    if args.out_path:
        Path(args.out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _spec(args):
    return parse_weight(args.weight, args.eta)


def _grid(args, spec):
    count = args.grid_points
    trunc = args.truncation if math.isinf(spec.eta) else None
    return make_grid(spec, count, args.r_min_ratio, trunc)


def _num(x):
    return repr(float(x))


def _finite(x):
    return None if x is None or not math.isfinite(x) else x


# -- subcommands ----------------------------------------------------------------

def cmd_classify(args):
    wclass = weights.classify(_spec(args))
    payload = {"class": wclass.tag}
    if wclass.a is not None:
        payload["a"] = wclass.a
    _emit(args, _json_text(args, payload) if args.out_format == "json" else
          _csv_text(args, ["class", "a"], [[wclass.tag, "" if wclass.a is None else _num(wclass.a)]]))
    return EXIT_OK


def cmd_envelope(args):
    spec = _spec(args)
    env = compute_envelope(spec, None, _grid(args, spec), args.q)
    pts = env.points
    if args.out_format == "json":
        payload = {"kind": env.kind, "eta_tilde": _finite(env.eta_tilde), "log_eta_tilde": float(env.log_v[-1]),
                   "n_points": int(pts.size), "n_plateau_cells": int(env.plateau_mask.sum()),
                   "r_min": float(pts[0]), "class": str(env.weight_class)}
        _emit(args, _json_text(args, payload))
        return EXIT_OK
    rows = []
    w, v = env.w, env.v
    for i, r in enumerate(pts):
        last = i == pts.size - 1
        rows.append([_num(r), _num(w[i]), _num(v[i]), "" if last else _num(env.Vq[i]),
                     "" if last else int(env.plateau_mask[i])])
    _emit(args, _csv_text(args, ["r", "w", "v", "Vq", "plateau"], rows,
                          {"kind": env.kind, "note": "Vq and plateau refer to the cell [r_i, r_i+1]"}))
    return EXIT_OK


def cmd_k_profile(args):
    spec = _spec(args)
    env = compute_envelope(spec, None, _grid(args, spec), 1.0)
    prof = ndc.k_profile(spec, env)
    if args.out_format == "json":
        _emit(args, _json_text(args, {"r": prof.r.tolist(), "K": prof.K.tolist(),
                                      "n_flagged": prof.n_flagged}))
    else:
        _emit(args, _csv_text(args, ["r", "K"], [[_num(r), _num(k)] for r, k in zip(prof.r, prof.K)],
                              {"n_flagged": prof.n_flagged}))
    return EXIT_OK


def cmd_ndc(args):
    spec = _spec(args)
    report = ndc.analyze(spec, grid=_grid(args, spec), threshold=args.threshold, m_max=args.m_max)
    d = report.to_dict()
    if args.out_format == "json":
        _emit(args, _json_text(args, d))
    else:
        keys = ["C0", "verdict", "fitted_alpha", "infinite_order", "n_samples", "n_flagged"]
        _emit(args, _csv_text(args, keys, [[d[k] for k in keys]]))
    return EXIT_OK


def _reports_out(args, reports, extra=None):
    ok = all(r.passed for r in reports)
    if args.out_format == "json":
        payload = {"all_pass": ok, "n_reports": len(reports), "reports": [r.to_dict() for r in reports]}
        payload.update(extra or {})
        _emit(args, _json_text(args, payload))
    else:
        rows = [[i, _num(r.lhs), _num(r.rhs), _num(r.quotient), _num(r.est_error),
                 _num(r.theory_constant), int(r.passed)] for i, r in enumerate(reports)]
        _emit(args, _csv_text(args, ["index", "lhs", "rhs", "quotient", "est_error", "theory", "pass"],
                              rows, extra))
    return ok


def cmd_verify(args):
    spec = _spec(args)
    grid = _grid(args, spec)
    env = compute_envelope(spec, None, grid, args.q)
    report = ndc.analyze(spec, grid=grid) if args.n >= 2 else None
    reports = certify.verify_battery(spec, env, args.q, args.n, args.battery_size, args.seed, report)
    ok = _reports_out(args, reports)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_best_const_1d(args):
    spec = _spec(args)
    wclass = weights.classify(spec)
    env = None
    if wclass.in_v and (wclass.tag == "W0" or math.isinf(spec.eta)):
        env = compute_envelope(spec, wclass, _grid(args, spec), args.q)
    inf_q, reports = certify.estimate_best_constant_1d(spec, env, args.q, args.h_sweep, args.x,
                                                      args.truncation)
    tol = max(r.est_error for r in reports) * certify.ERROR_FACTOR
    ok = 1 - tol - certify.REL_TOL <= inf_q <= 1 + args.tolerance
    _reports_out(args, reports, {"inf_quotient": inf_q, "target": 1.0, "within_tolerance": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_best_const_rad(args):
    inf_q, reports = certify.estimate_best_constant_radial(args.n, args.q, args.gamma, args.eps_sweep)
    const = certify.SharpConstants(args.n, args.q, args.gamma)
    S = const.S_rad
    ok = S * (1 - certify.REL_TOL) <= inf_q <= S * (1 + args.overshoot)
    _reports_out(args, reports, {"inf_quotient": inf_q, "constants": const.to_dict(),
                                 "within_tolerance": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_counterexample(args):
    spec = _spec(args)
    env = compute_envelope(spec, None, _grid(args, spec), args.q)
    table = certify.run_counterexample(spec, env, args.q, args.j_max, args.n, s=args.s)
    if args.out_format == "json":
        _emit(args, _json_text(args, table.to_dict()))
    else:
        rows = [[r.j, r.eps, _num(r.lhs), _num(r.rhs), _num(r.quotient)] for r in table.rows]
        meta = {k: v for k, v in table.to_dict().items() if k != "rows"}
        _emit(args, _csv_text(args, ["j", "eps_j", "lhs", "rhs", "quotient"], rows, meta))
    return EXIT_OK if table.diverges else EXIT_FAIL


COMMANDS = {
    "classify": cmd_classify,
    "envelope": cmd_envelope,
    "k-profile": cmd_k_profile,
    "ndc": cmd_ndc,
    "verify-1d": cmd_verify,
    "verify-nd": cmd_verify,
    "best-const-1d": cmd_best_const_1d,
    "best-const-rad": cmd_best_const_rad,
    "counterexample": cmd_counterexample,
}


def dispatch(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "grid_points", 0) is None:
            args.grid_points = _default_points()  # echo the effective value in the config
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (CknError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

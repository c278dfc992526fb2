"""Command line entry point ``orlicz-check``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for usage or
configuration errors.  Reports go to stdout and, when an output directory is
given (``--out`` or the ``ORLICZ_OUT_DIR`` environment variable), to CSV and
JSON files named after the subcommand.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .bellman import BellmanContext
from .config import load_run, parse_matrix
from .ellipticity import cm_dissipativity_check, ellipticity_report
from .errors import ConfigError, InapplicableError, NonEllipticError, OrliczError, ParameterError
from .mollify import verify_mollified
from .reports import fmt_number, reports_to_csv, rows_to_csv, sort_reports, to_json
from .semigroup import assemble, bilinear_integrand, energy, evolve
from .young import make_pair, parse_family

OUT_ENV = "ORLICZ_OUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _out_dir(args) -> Path | None:
    target = args.out or os.environ.get(OUT_ENV)
    if not target:
        return None
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(args, name: str, csv_text: str | None, payload) -> None:
    out = _out_dir(args)
    if out is None:
        return
    if csv_text is not None:
        (out / f"{name}.csv").write_text(csv_text)
    (out / f"{name}.json").write_text(to_json(payload) + "\n")


def _family(text: str):
    try:
        parse_family(text)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return make_pair(text)


def _matrix(text: str | None, d: int, name: str, conjugate: bool = False):
    spec = text or "identity"
    if spec.startswith("{"):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"matrix {name} is not valid JSON: {exc}") from exc
    return parse_matrix(spec, d, name=name, conjugate=conjugate)


def _matrices(args):
    a = _matrix(args.A, args.d, "A")
    b = _matrix(args.B or args.A, args.d, "B", conjugate=args.B is None)
    return a, b


def _print_reports(reports) -> bool:
    for r in sort_reports(reports):
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.check}  samples={r.samples}  min_margin={r.min_margin:.6g}  tolerance={r.tolerance:g}")
    return all(r.passed for r in reports)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_conjugate(args) -> int:
    pair = _family(args.family)
    t = np.array(args.t, dtype=float) if args.t else np.geomspace(1e-3, 1e3, 13)
    psi = pair.psi if pair.phi.conjugate_of is None else pair.phi
    value, d1, d2 = psi.derivs(t)
    rows = [{"t": float(a), "value": float(b), "d1": float(c), "d2": float(d)} for a, b, c, d in zip(t, value, d1, d2)]
    print(f"complement of {pair.label}")
    for r in rows:
        print(f"t={r['t']:.6g}  value={r['value']:.12g}  d1={r['d1']:.12g}  d2={r['d2']:.12g}")
    _write(args, "conjugate", rows_to_csv(rows), {"family": args.family, "rows": rows})
    return EXIT_OK


def cmd_quantities(args) -> int:
    pair = _family(args.family)
    q = pair.quantities
    tup = ", ".join(fmt_number(x) for x in q.as_tuple())
    print(f"({tup}), p={fmt_number(q.p)}, D={fmt_number(q.D)}")
    payload = {
        "family": args.family,
        "m": q.m, "M": q.M, "m_tilde": q.m_tilde, "M_tilde": q.M_tilde,
        "p": q.p, "D": q.D, "on_boundary": dict(q.boundary),
    }
    _write(args, "quantities", None, payload)
    return EXIT_OK


def cmd_check_bellman(args) -> int:
    pair = _family(args.family)
    a, b = _matrices(args)
    ctx = BellmanContext.build(pair, a, b, delta_scale=args.delta_scale)
    reports = acceptance.lemma_reports(ctx, args.tag, args.samples, args.seed)
    if args.mollified:
        mol = verify_mollified(ctx, args.nu, args.mollified, args.seed, matrices=[(ctx.a, ctx.b, ctx.c_p)])
        reports += [acceptance.tag_report(r, args.tag) for r in mol]
    ok = _print_reports(reports)
    _write(args, "check-bellman", reports_to_csv(sort_reports(reports)),
           {"family": args.family, "delta": ctx.delta, "reports": [r.to_dict() for r in sort_reports(reports)]})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_hessian(args) -> int:
    reports = acceptance.hessian_agreement(args.family, args.seed, args.samples)
    if args.shapes:
        reports += acceptance.shape_examples(args.seed, args.samples)
    ok = _print_reports(reports)
    _write(args, "check-hessian", reports_to_csv(sort_reports(reports)),
           {"family": args.family, "reports": [r.to_dict() for r in sort_reports(reports)]})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_ellipticity(args) -> int:
    pair = _family(args.family)
    a, b = _matrices(args)
    try:
        rep = ellipticity_report(a, pair, b)
    except NonEllipticError as exc:
        print(f"not elliptic: {exc}")
        rep = ellipticity_report(a, pair)
    rows = [{"quantity": k, "value": v} for k, v in rep.rows()]
    for row in rows:
        print(f"{row['quantity']}={fmt_number(row['value'], 6)}")
    reports = []
    for mat in (a, b):
        try:
            reports.append(cm_dissipativity_check(mat, pair, args.samples, seed=args.seed))
        except InapplicableError as exc:
            print(f"dissipativity check skipped for {mat.name}: {exc}")
    ok = _print_reports(reports) and rep.delta_p > 0
    if not rep.delta_p > 0:
        print(f"FAIL  Delta_p(A) = {rep.delta_p:.6g} <= 0 at p = {fmt_number(rep.p)}")
    _write(args, "check-ellipticity", rows_to_csv(rows),
           {"family": args.family, "rows": rows, "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    rc = load_run(args.config)
    pair, a, b, f, g = rc.build()
    op_a, op_b = assemble(a, rc.grid), assemble(b, rc.grid)
    ctx = BellmanContext.build(pair, op_a.field, op_b.field)
    rows = []
    times = sorted(set(args.times))
    for t in times:
        ft, gt = evolve(op_a, f, t), evolve(op_b, g, t)
        rows.append({
            "t": t,
            "norm_f": ft.norm(), "norm_g": gt.norm(),
            "integrand": bilinear_integrand(ft, gt),
            "energy": energy(ctx, ft, gt),
        })
    for r in rows:
        print("  ".join(f"{k}={v:.10g}" for k, v in r.items()))
    _write(args, "simulate", rows_to_csv(rows), {"config": str(args.config), "rows": rows})
    return EXIT_OK


def cmd_verify_embedding(args) -> int:
    rc = load_run(args.config)
    try:
        run = acceptance.verify_embedding(rc)
    except NonEllipticError as exc:
        print(f"FAIL  refused: {exc}")
        _write(args, "verify-embedding", None, {"config": str(args.config), "refused": str(exc), "passed": False})
        return EXIT_FAIL
    reports = acceptance.embedding_reports(run)
    ok = _print_reports(reports) and run.passed
    print(f"lhs={run.lhs_upper:.8g}  rhs_homogeneous={run.rhs_homogeneous:.8g}  "
          f"rhs_dehomogenized={run.rhs_dehomogenized:.8g}")
    _write(args, "verify-embedding", reports_to_csv(sort_reports(reports)), run.to_dict())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_suite(args) -> int:
    numbers = args.criterion or list(acceptance.CRITERIA)
    unknown = [n for n in numbers if n not in acceptance.CRITERIA]
    if unknown:
        raise UsageError(f"unknown criterion {unknown[0]!r}; choose from {', '.join(acceptance.CRITERIA)}")
    results = acceptance.run_suite(numbers, seed=args.seed, samples=args.samples)
    for res in results:
        print(res.summary_line())
    reports = [r for res in results for r in res.reports]
    payload = {
        "seed": args.seed,
        "passed": all(res.passed for res in results),
        "criteria": [res.to_dict() for res in results],
    }
    _write(args, "suite", reports_to_csv(sort_reports(reports)), payload)
    return EXIT_OK if payload["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orlicz-check", description="Numerical checks for the Orlicz bilinear embedding.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, samples=None):
        p.add_argument("--seed", type=int, default=0, help="random seed (64-bit)")
        p.add_argument("--samples", type=int, default=samples, help="sample budget")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
        return p

    def family(p):
        p.add_argument("--family", required=True, help="e.g. power:4, zygmund:3, power_sum:4,3,0.01")

    def matrices(p):
        p.add_argument("--A", help="identity | rotation:PHI | random:SEED | JSON {re, im}")
        p.add_argument("--B", help="defaults to the conjugate rotation of A")
        p.add_argument("--d", type=int, default=2, help="dimension for matrix shorthands")

    p = common(sub.add_parser("conjugate", help="tabulate the complementary Young function"))
    family(p)
    p.add_argument("--t", type=float, nargs="*", help="evaluation points")
    p.set_defaults(func=cmd_conjugate)

    p = common(sub.add_parser("quantities", help="characteristic quantities, p and D"))
    family(p)
    p.set_defaults(func=cmd_quantities)

    p = common(sub.add_parser("check-bellman", help="pointwise and mollified Bellman estimates"), 100_000)
    family(p)
    matrices(p)
    p.add_argument("--mollified", type=int, default=0, help="mollified samples (0 skips)")
    p.add_argument("--nu", type=float, default=0.05)
    p.add_argument("--delta-scale", type=float, default=1.0, help="multiply the small parameter")
    p.add_argument("--tag", default="cli")
    p.set_defaults(func=cmd_check_bellman)

    p = common(sub.add_parser("check-hessian", help="analytic, closed-form and finite-difference Hessians"), 1000)
    family(p)
    p.add_argument("--shapes", action="store_true", help="also check the two model shapes")
    p.set_defaults(func=cmd_check_hessian)

    p = common(sub.add_parser("check-ellipticity", help="ellipticity constants and dissipativity"), 2000)
    family(p)
    matrices(p)
    p.set_defaults(func=cmd_check_ellipticity)

    p = common(sub.add_parser("simulate", help="evolve the initial data of a run config"))
    p.add_argument("--config", required=True)
    p.add_argument("--times", type=float, nargs="+", default=[0.0, 0.01, 0.1, 1.0])
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("verify-embedding", help="both sides of the embedding for a run config"))
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_verify_embedding)

    p = common(sub.add_parser("suite", help="run the acceptance criteria"))
    p.add_argument("--criterion", nargs="*", help="criterion numbers (default: all)")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "samples", None) is not None and args.samples <= 0:
            raise UsageError("--samples must be positive")
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OrliczError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

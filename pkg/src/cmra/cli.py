"""Command-line entry points.

Subcommands::

    cmra run <scenario.json> [--out DIR] [--seed N]
    cmra verify <claim> [--grid N] [--eps E] [--tol T] [--out DIR]
    cmra audit <record.json or bundled name> [--out DIR]
    cmra export-fig <scenario.json> --prices P [P ...] [--out DIR]

The output directory defaults to $CMRA_OUTPUT_DIR, then the working
directory.  Exit status is 0 on success and nonzero on validation or
verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .audit import AuditError
from .scenarios import (ScenarioError, bundled_scenario_path,
                        export_figure_data, run_scenario)
from .verify import CLAIMS, run_claim

__all__ = ["main"]


def _outdir(args) -> str:
    return args.out or os.environ.get("CMRA_OUTPUT_DIR", ".")


def _resolve_scenario(path: str):
    if os.path.exists(path):
        return path
    try:
        return bundled_scenario_path(path)
    except ScenarioError:
        raise ScenarioError(f"no scenario file or bundled scenario {path!r}")


def cmd_run(args) -> int:
    result = run_scenario(_resolve_scenario(args.scenario),
                          outdir=_outdir(args), seed=args.seed)
    for label, path in result["outputs"].items():
        print(f"{label}: {path}")
    if hasattr(result["result"], "lines"):
        for line in result["result"].lines:
            print(line)
    return 0 if result["ok"] else 1


def cmd_verify(args) -> int:
    options = {}
    if args.grid is not None:
        options["theta_grid"] = args.grid
        options["grid_n"] = args.grid
    if args.eps is not None:
        options["eps"] = args.eps
    if args.tol is not None:
        options["tol"] = args.tol
    if args.seed is not None:
        options["seed"] = args.seed
    result = run_claim(args.claim, **options)
    for line in result.lines:
        print(line)
    print(f"{result.claim}: {'PASS' if result.passed else 'FAIL'} "
          f"({result.elapsed:.1f}s)")
    outdir = Path(_outdir(args))
    outdir.mkdir(parents=True, exist_ok=True)
    report = outdir / f"{result.claim}_report.json"
    with open(report, "w") as fh:
        json.dump({"claim": result.claim, "passed": result.passed,
                   "lines": result.lines,
                   "elapsed_s": round(result.elapsed, 3)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report: {report}")
    return 0 if result.passed else 1


def cmd_audit(args) -> int:
    scenario = {"name": Path(args.record).stem, "mode": "audit",
                "audit": {"record": args.record}}
    result = run_scenario(scenario, outdir=_outdir(args))
    audit = result["result"]
    print(f"status: {audit.status}")
    if audit.prices:
        for cat, price in sorted(audit.prices.items()):
            print(f"  {cat}: {price}")
    if audit.certificate:
        print(f"  certificate: {audit.certificate}")
    for ident in audit.difference_identities:
        terms = " + ".join(f"{v}*p[{c}]" for c, v in ident["coefficients"].items())
        print(f"  identity {ident['bidders'][0]}-{ident['bidders'][1]}: "
              f"{terms} = {ident['difference']}")
    for flag in audit.flags:
        print(f"  flag: {flag['kind']} ({flag.get('category', '')})")
    print(f"audit: {result['outputs']['audit']}")
    return 0


def cmd_export_fig(args) -> int:
    result = export_figure_data(_resolve_scenario(args.scenario),
                                args.prices, outdir=_outdir(args))
    for label, path in result["outputs"].items():
        print(f"{label}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmra",
        description="Combinatorial multi-round ascending auction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="scenario JSON path or bundled name")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run a named verification claim")
    p_ver.add_argument("claim", choices=sorted(CLAIMS))
    p_ver.add_argument("--grid", type=int, default=None,
                       help="type-grid points per bidder")
    p_ver.add_argument("--eps", type=float, default=None,
                       help="clock increment")
    p_ver.add_argument("--tol", type=float, default=None,
                       help="no-gain tolerance")
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--out", default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_aud = sub.add_parser("audit", help="linear-price audit of a record")
    p_aud.add_argument("record", help="record JSON path or bundled name")
    p_aud.add_argument("--out", default=None)
    p_aud.set_defaults(func=cmd_audit)

    p_fig = sub.add_parser("export-fig",
                           help="bid-function and revenue-curve CSV export")
    p_fig.add_argument("scenario", help="single-run scenario JSON or name")
    p_fig.add_argument("--prices", type=float, nargs="+", required=True)
    p_fig.add_argument("--out", default=None)
    p_fig.set_defaults(func=cmd_export_fig)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, AuditError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: catalog, verify, modular, weil, report-convert.

Exit codes: 0 when every report passes, 2 when any report fails, 1 on configuration or
integration errors (printed with the offending field path).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import report as rep
from .chains import catalog
from .errors import ConfigError, HaarPushError
from .groups import by_name, check_domain, modular_parts
from .verify import CHECKS, run_suite

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _csv(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_run_flags(p):
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--chain", action="append", default=[], help="catalog chain name (repeatable)")
    p.add_argument("--quad-order", type=int, help="Gauss-Legendre points per axis and panel")
    p.add_argument("--panels", type=int, help="Gauss panels per axis")
    p.add_argument("--mc-samples", type=int, help="switch outer integrals to Monte Carlo with this many samples")
    p.add_argument("--seed", type=int, help="master seed (falls back to config, then HAARPUSH_SEED, then 0)")
    p.add_argument("--tol", type=float, help="relative tolerance override for every check")
    p.add_argument("--format", choices=cfgmod.FORMATS, help="report format")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--workers", type=int, help="concurrent check jobs")
    p.add_argument("--dump-config", action="store_true", help="print the effective config as TOML and exit")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 so that 2 always means a failed check."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="haarpush", description="Haar measures, modular functions and pushforwards.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list built-in groups and chains")
    p.add_argument("--json", action="store_true", help="machine-readable listing")
    p.add_argument("--filter", default="", help="substring filter on names")

    p = sub.add_parser("verify", help="run verification checks")
    _add_run_flags(p)
    p.add_argument("--checks", type=_csv, help=f"comma-separated subset of {','.join(CHECKS)}")

    p = sub.add_parser("weil", help="run the Weil quotient-integration check on a chain")
    _add_run_flags(p)

    p = sub.add_parser("modular", help="modular function of a catalog group at an element")
    p.add_argument("--group", required=True, help="catalog group name, e.g. aff1 or R^n:3")
    p.add_argument("--element", required=True, type=_csv, help="comma-separated chart coordinates (use --element=-1,0 for a leading minus)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("report-convert", help="convert a JSON report to another format")
    p.add_argument("input", help="JSON report file")
    p.add_argument("--format", choices=cfgmod.FORMATS, required=True)
    p.add_argument("--out")
    return ap


# ---------------------------------------------------------------- commands


def cmd_catalog(args, out):
    listing = catalog()
    f = args.filter
    listing = {"groups": [g for g in listing["groups"] if f in g["name"]],
               "chains": [c for c in listing["chains"] if f in c["name"] or any(f in a for a in c["aliases"])]}
    if args.json:
        out.write(json.dumps(listing, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    if listing["groups"]:
        out.write("groups:\n")
        for g in listing["groups"]:
            out.write(f"  {g['name']:<10} {g['kind']}\n")
    if listing["chains"]:
        out.write("chains:\n")
        for c in listing["chains"]:
            alias = f" (alias {', '.join(c['aliases'])})" if c["aliases"] else ""
            out.write(f"  {c['name']:<20} {c['backend']:<7} {c['description']}{alias}\n")
            out.write(f"  {'':<20} checks: {', '.join(c['checks'])}\n")
    return EXIT_OK


def effective_config(args, checks=None):
    """Merge the config file (if any) with command-line overrides."""
    run = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    if args.chain:
        run.chains = [{"name": n} for n in args.chain]
    if not run.chains:
        raise ConfigError("no chains selected; pass --chain or a config with [[chains]]", "chains")
    integ = dict(run.integrator)
    if args.quad_order is not None:
        integ["order"] = args.quad_order
    if args.panels is not None:
        integ["panels"] = args.panels
    if args.mc_samples is not None:
        integ.update(kind="monte_carlo", samples=args.mc_samples)
    if args.tol is not None:
        run.rel_tol = args.tol
    if args.format:
        run.format = args.format
    if args.out:
        run.out = args.out
    if args.workers:
        run.workers = args.workers
    if checks is not None:
        run.checks = checks
    run.integrator = integ
    run.seed = cfgmod.resolve_seed(args.seed, run.seed, os.environ)
    # re-validate the merged result so overrides get the same diagnostics as the file
    run = cfgmod.loads(run.to_toml())
    return run


def _emit(text, path, out):
    if path:
        Path(path).write_text(text)
    else:
        out.write(text)


def cmd_verify(args, out, checks=None):
    run = effective_config(args, checks if checks is not None else getattr(args, "checks", None))
    if args.dump_config:
        out.write(run.to_toml())
        return EXIT_OK
    if run.checks:
        for i, c in enumerate(run.checks):
            if c not in CHECKS:
                raise ConfigError(f"unknown check {c!r}; known: {', '.join(CHECKS)}", f"checks[{i}]")
    cfgmod.validate_chains(run)
    configs = run.chain_configs(run.seed)
    reports, skipped = run_suite(configs, run.checks, workers=run.workers)
    doc = rep.build_document(reports, run.seed, skipped)
    _emit(rep.render(doc, run.format), run.out, out)
    s = doc["summary"]
    sys.stderr.write(f"{s['passed']}/{s['total']} checks passed\n")
    return EXIT_OK if s["failed"] == 0 else EXIT_FAIL


def cmd_modular(args, out):
    try:
        G = by_name(args.group)
    except KeyError:
        raise ConfigError(f"unknown group {args.group!r}", "group") from None
    try:
        h = np.array([float(v) for v in args.element])
    except ValueError:
        raise ConfigError("element coordinates must be numbers", "element") from None
    if h.shape != (G.dim,):
        raise ConfigError(f"{G.name} needs {G.dim} coordinates, got {h.size}", "element")
    check_domain(G, h[None, :])
    delta, dr, dl = (float(v) for v in modular_parts(G, h))
    if args.json:
        out.write(json.dumps({"group": G.name, "element": h.tolist(), "modular": delta,
                              "det_right": dr, "det_left": dl}, sort_keys=True) + "\n")
    else:
        out.write(f"Delta = {delta:.17g}\n|det dR_h(e)| = {dr:.17g}\n|det dL_h(e)| = {dl:.17g}\n")
    return EXIT_OK


def cmd_report_convert(args, out):
    try:
        doc = rep.load_document(Path(args.input).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load report: {exc}", "input") from None
    _emit(rep.render(doc, args.format), args.out, out)
    return EXIT_OK


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "catalog":
            return cmd_catalog(args, out)
        if args.command == "verify":
            return cmd_verify(args, out)
        if args.command == "weil":
            return cmd_verify(args, out, checks=["weil"])
        if args.command == "modular":
            return cmd_modular(args, out)
        return cmd_report_convert(args, out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_ERROR
    except HaarPushError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

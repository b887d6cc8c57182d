"""Command line entry point ``chlimit``.

Exit codes: 0 success, 1 a check or acceptance threshold failed, 2 usage
or invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

from .. import __version__
from ..errors import CheckFailed, InvalidInput, NumericalFailure
from . import pipeline
from .config import load_config
from .invariants import SUITES, run_invariants
from .manifest import RunManifest, digest

log = logging.getLogger("chlimit")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}") from exc


def _out_path(args, default_name):
    """Subcommand ``--out`` wins; otherwise ``default_name`` inside the global directory."""
    if args.out is not None:
        return args.out
    return os.path.join(args.out_dir or ".", default_name)


def _out_dir(args, default):
    """Directory outputs: subcommand ``--out``, then global ``--out``, then ``default``."""
    return args.out or args.out_dir or default


def _config(args, **overrides):
    return load_config(args.config, **overrides)


# -- subcommands: each returns (exit_code, output_dir, written_paths) ------------


def cmd_profile(args):
    out = _out_path(args, "profile.csv")
    _, paths = pipeline.profile_stage(args.beta, args.half_width, args.nodes, out)
    return EXIT_OK, os.path.dirname(os.path.abspath(out)), paths


def cmd_geometry_check(args):
    if args.scenario != "circle":
        raise InvalidInput("geometry-check supports --scenario circle only")
    rows = pipeline.geometry_rows(args.R, args.Rout, args.delta, args.samples, args.seed)
    header = ["check", "value", "tolerance", "passed"]
    paths = []
    if args.out:
        paths.append(pipeline.write_csv(args.out, header, rows))
        out_dir = os.path.dirname(os.path.abspath(args.out))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        out_dir = None
    return (EXIT_OK if all(r[3] for r in rows) else EXIT_FAIL), out_dir, paths


def cmd_sharp(args):
    out = _out_path(args, "sharp.csv")
    _, paths = pipeline.sharp_stage(args.R0, args.Rout, args.T, args.beta, out)
    return EXIT_OK, os.path.dirname(os.path.abspath(out)), paths


def cmd_approx(args):
    if args.scenario != "radial":
        raise InvalidInput("approx supports --scenario radial only")
    out = _out_path(args, "approx.csv")
    _, paths = pipeline.approx_stage(args.eps, args.t, args.grid, out, beta=args.beta, R0=args.R0,
                                     R_out=args.Rout, T=args.T)
    return EXIT_OK, os.path.dirname(os.path.abspath(out)), paths


def cmd_diffuse(args):
    out = _out_dir(args, "diffuse")
    result, paths = pipeline.diffuse_stage(args.eps, args.R0, args.Rout, args.T, args.nr, args.snapshots, out,
                                           beta=args.beta)
    log.info("accepted %d steps, %d Newton rejections", len(result.t) - 1, result.newton_rejections)
    return EXIT_OK, out, paths


def cmd_residuals(args):
    if args.scenario != "radial":
        raise InvalidInput("residuals supports --scenario radial only")
    cfg = _config(args, eps_list=args.eps_list, T=args.T)
    out = _out_dir(args, "report")
    rows = []
    for eps in cfg.eps_list:
        _, table = pipeline.residual_table(cfg, eps)
        rows += [(eps, n, s, v) for n, s, v in table]
    orders = pipeline.order_rows(rows)
    paths = [
        pipeline.write_csv(os.path.join(out, "norms.csv"), ["eps", "norm_name", "stratum", "value"], rows,
                           comment=pipeline.WEAK_NORM_NOTE),
        pipeline.write_csv(os.path.join(out, "orders.csv"), ["norm_name", "slope", "fit_residual"], orders),
    ]
    return EXIT_OK, out, paths


def cmd_converge(args):
    cfg = _config(args, eps_list=args.eps_list, T=args.T)
    out = _out_dir(args, cfg.out)
    start = time.perf_counter()
    _, sharp_paths = pipeline.sharp_stage(cfg.R0, cfg.R_out, cfg.T, cfg.beta, os.path.join(out, "sharp.csv"))
    measurements = pipeline.measure_all(cfg, out, threads=args.threads)
    rows = pipeline.norm_rows(measurements)
    orders = pipeline.order_rows(rows)
    checks = pipeline.acceptance_checks(measurements, orders, time.perf_counter() - start)
    paths = list(sharp_paths)
    for m in measurements:
        paths += m.files
    paths.append(pipeline.write_csv(os.path.join(out, "norms.csv"), ["eps", "norm_name", "stratum", "value"],
                                    rows, comment=pipeline.WEAK_NORM_NOTE))
    paths.append(pipeline.write_csv(os.path.join(out, "orders.csv"), ["norm_name", "slope", "fit_residual"], orders))
    paths.append(pipeline.write_csv(os.path.join(out, "acceptance.csv"), ["check", "measured", "threshold", "passed"],
                                    [(c.name, c.measured, c.threshold, c.passed) for c in checks
                                     if not c.name.startswith("wall-clock")]))
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.dumps())
    paths.append(os.path.join(out, "config.ini"))
    paths.append(pipeline.write_summary(os.path.join(out, "summary.txt"), cfg, measurements, orders, checks))
    paths += pipeline.write_gnuplot(out, cfg.eps_list)
    with open(os.path.join(out, "summary.txt")) as fh:
        sys.stdout.write(fh.read())
    return (EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL), out, paths


def cmd_invariants(args):
    cfg = _config(args)
    only = [s.strip() for s in args.filter.split(",")] if args.filter else None
    if only:
        unknown = sorted(set(only) - set(SUITES))
        if unknown:
            raise InvalidInput(f"unknown suite(s) {unknown}; choose from {', '.join(SUITES)}")
    rows = run_invariants(cfg, only)
    header = ["suite", "check", "value", "tolerance", "passed"]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    out = _out_dir(args, cfg.out)
    path = pipeline.write_csv(os.path.join(out, "invariants.csv"), header, rows)
    return (EXIT_OK if all(r[4] for r in rows) else EXIT_FAIL), out, [path]


# -- parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="chlimit", description="Sharp-interface limit laboratory.")
    p.add_argument("--config", metavar="FILE", help="flat key = value experiment file")
    p.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")
    p.add_argument("--force", action="store_true", help="rerun even if the manifest says the stage is current")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes across eps values")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    # the same flags are accepted after the subcommand name
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS)
    shared.add_argument("--force", action="store_true", default=argparse.SUPPRESS)
    shared.add_argument("--threads", type=int, metavar="N", default=argparse.SUPPRESS)
    shared.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("profile", parents=[shared], help="solve and tabulate the interface profiles")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--half-width", type=float, default=20.0)
    s.add_argument("--nodes", type=int, default=4001)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("geometry-check", parents=[shared], help="chart identities on random points")
    s.add_argument("--scenario", default="circle")
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--Rout", type=float, default=2.0)
    s.add_argument("--delta", type=float, default=0.19)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=cmd_geometry_check)

    s = sub.add_parser("sharp", parents=[shared], help="radial sharp-interface evolution")
    s.add_argument("--R0", type=float, default=1.0)
    s.add_argument("--Rout", type=float, default=2.0)
    s.add_argument("--T", type=float, default=0.1)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=cmd_sharp)

    s = sub.add_parser("approx", parents=[shared], help="glued approximate fields on a Cartesian grid")
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--scenario", default="radial")
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--T", type=float, default=None, help="horizon of the underlying sharp solution")
    s.add_argument("--grid", type=int, default=512)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--R0", type=float, default=1.0)
    s.add_argument("--Rout", type=float, default=2.0)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=cmd_approx)

    s = sub.add_parser("diffuse", parents=[shared], help="radial Cahn-Hilliard run")
    s.add_argument("--eps", type=float, default=0.04)
    s.add_argument("--R0", type=float, default=1.0)
    s.add_argument("--Rout", type=float, default=2.0)
    s.add_argument("--T", type=float, default=0.05)
    s.add_argument("--nr", type=int, default=None, help="node count (default 8 per eps per unit length)")
    s.add_argument("--snapshots", type=int, default=5)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_diffuse)

    s = sub.add_parser("residuals", parents=[shared], help="residual norms and fitted orders")
    s.add_argument("--eps-list", type=_float_list, default=None)
    s.add_argument("--scenario", default="radial")
    s.add_argument("--T", type=float, default=None)
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_residuals)

    s = sub.add_parser("converge", parents=[shared], help="full convergence study with acceptance thresholds")
    s.add_argument("--eps-list", type=_float_list, default=None)
    s.add_argument("--T", type=float, default=None)
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("invariants", parents=[shared], help="run the invariant suites")
    s.add_argument("--filter", default=None, help=f"comma separated subset of {', '.join(SUITES)}")
    s.add_argument("--out", metavar="DIR")
    s.set_defaults(func=cmd_invariants)
    return p


def _stage_key(args):
    skip = {"func", "force", "verbose", "threads", "out_dir"}
    key = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if args.config:
        with open(args.config) as fh:
            key["config_text"] = fh.read()
    return digest(key)


def _manifest_dir(args):
    """Directory holding the manifest for this invocation, if it writes files."""
    if args.command == "geometry-check":
        return os.path.dirname(os.path.abspath(args.out)) if args.out else None
    if args.command in ("profile", "sharp", "approx"):
        default = {"profile": "profile.csv", "sharp": "sharp.csv", "approx": "approx.csv"}[args.command]
        return os.path.dirname(os.path.abspath(_out_path(args, default)))
    if args.command in ("converge", "invariants"):
        return _out_dir(args, load_config(args.config).out)
    return _out_dir(args, {"diffuse": "diffuse", "residuals": "report"}[args.command])


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        mdir = _manifest_dir(args)
        key = _stage_key(args)
        manifest = RunManifest.load(mdir) if mdir else None
        if manifest and not args.force and args.command != "invariants" and manifest.is_current(args.command, key):
            print(f"{args.command}: outputs in {mdir} are current; use --force to rerun")
            return EXIT_OK
        code, _, paths = args.func(args)
        if manifest is not None:
            manifest.record(args.command, key, "ok" if code == EXIT_OK else "acceptance_failed", paths)
            manifest.save(__version__)
        return code
    except InvalidInput as exc:
        print(f"chlimit {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckFailed as exc:
        print(f"chlimit {args.command}: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NumericalFailure as exc:
        print(f"chlimit {args.command}: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"chlimit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

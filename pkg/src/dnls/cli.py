"""Command-line front end.

Verbs: ``solve``, ``map``, ``sweep``, ``figures`` and ``verify``. Exit codes
are 0 on success, 1 when any solve failed and 2 on configuration errors.
The output directory is ``--out``, else the scenario's ``output`` key, else
``$DNLS_OUTPUT_DIR``, else ``./out``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from ._kernels import BACKEND
from .errors import ConfigurationError
from .lattice import ModelParams
from .mapping import MapState
from .output import fmt
from .scenario import (
    RunReport,
    builtin_names,
    load_scenario,
    parse_overrides,
    run_map,
    run_scenario,
    run_sweep,
    write_summary,
)
from .verify import verify_suite

ENV_OUTPUT = "DNLS_OUTPUT_DIR"
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _out_dir(args, scenario_output: str | None = None) -> Path:
    if args.out:
        return Path(args.out)
    if scenario_output:
        return Path(scenario_output)
    return Path(os.environ.get(ENV_OUTPUT) or "out")


def _print_report(r: RunReport) -> None:
    cls = r.classification or "-"
    clusters = r.n_clusters if r.n_clusters is not None else "-"
    print(f"{r.name:<10} c={fmt(r.c):<6} E0={r.E0:<10.6g} {r.outcome:<18} iters={r.iterations:<3} "
          f"clusters={clusters:<4} class={cls}")
    for note in r.notes:
        print(f"  note: {note}")


def _finish(reports: list[RunReport]) -> int:
    for r in reports:
        _print_report(r)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAILED


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario, parse_overrides(args.set))
    if s.is_sweep:
        raise ConfigurationError("c", "a list of couplings needs the sweep verb")
    return _finish([run_scenario(s, _out_dir(args, s.output))])


def cmd_sweep(args) -> int:
    s = load_scenario(args.scenario, parse_overrides(args.set))
    return _finish(run_sweep(s, _out_dir(args, s.output), jobs=args.jobs))


def _figure(args) -> RunReport:
    name, out = args
    return run_scenario(load_scenario(name), out)


def cmd_figures(args) -> int:
    names = [n for n in builtin_names() if n.startswith("fig")]
    out = _out_dir(args)
    tasks = [(n, out) for n in names]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reports = list(ex.map(_figure, tasks))
    else:
        reports = [_figure(t) for t in tasks]
    write_summary(out / "figures_summary.json", reports)
    return _finish(reports)


def cmd_map(args) -> int:
    if args.steps < 0:
        raise ConfigurationError("steps", "must be >= 0")
    if not args.bound > 0:
        raise ConfigurationError("bound", "must be positive")
    try:
        p = ModelParams(args.c, args.E, 1)
    except ValueError as exc:
        raise ConfigurationError("c/E", str(exc)) from None
    rep = run_map(MapState(args.Z0, args.psi0), p, args.steps, args.bound, _out_dir(args), name=args.name)
    print(f"{args.name}: {rep.status}, {rep.n_points} points, {rep.n_clusters} clusters, class={rep.classification}")
    return EXIT_OK


def cmd_verify(args) -> int:
    return verify_suite(tol=args.tol)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnls", description="Stationary states of the discrete nonlinear Schrodinger equation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("scenario", help="scenario file or built-in name (fig1..fig8, sweep)")
            p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario key (repeatable)")
        p.add_argument("--out", help=f"output directory (default: ${ENV_OUTPUT} or ./out)")

    p = sub.add_parser("solve", help="solve one scenario")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve a scenario for every listed coupling")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="run all built-in figure scenarios")
    common(p, scenario=False)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("map", help="iterate the 2D map from one state")
    common(p, scenario=False)
    p.add_argument("--Z0", type=float, required=True)
    p.add_argument("--psi0", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--bound", type=float, default=1e8)
    p.add_argument("--name", default="map")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("verify", help="run the self-check battery")
    p.add_argument("--tol", type=float, default=None, help="tolerance for the closed-form two-site checks")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

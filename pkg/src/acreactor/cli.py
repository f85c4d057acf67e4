"""Command-line front end: ``acreactor solve | oracle-check | gen``.

Exit codes: 0 success, 1 usage error, 2 parse/validation error, 3 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import generators
from .instance_io import (
    ParseError,
    RunConfig,
    build_report,
    load_config,
    parse_airland,
    parse_rh_panel,
    parse_tsplib,
    write_report,
)
from .oracle import OracleRefused, alsp_exact_small, brute_force_min
from .reactor import ConfigError, ReactorConfig, RunReport, init_universe, run_until_done

log = logging.getLogger("acreactor")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with [reactor] and [instances] sections")
    p.add_argument("--tsp", type=Path, action="append", default=[], help="TSPLIB file (repeatable)")
    p.add_argument("--alsp", type=Path, action="append", default=[], help="OR-Library airland file (repeatable)")
    p.add_argument("--runways", type=int, help="runway count for every --alsp instance")
    p.add_argument("--rh", type=Path, action="append", default=[], help="RH panel file (repeatable)")
    p.add_argument("--capacity", type=int, help="molecules per group (overrides config)")
    p.add_argument("--reactions", type=int, help="collisions per epoch (overrides config)")
    p.add_argument("--max-epochs", type=int, help="epoch budget per run (overrides config)")
    p.add_argument("--seed", type=int, help="seed of the first repeat; repeat i uses seed + i")
    p.add_argument("--format", choices=("table", "machine"), default="table")
    p.add_argument("--out", type=Path, help="write the report here instead of standard output")
    p.add_argument("--check-invariants", action="store_true",
                   help="verify population invariants after every epoch (slow)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="acreactor", description="Artificial chemical reactor for permutation problems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="run the reactor on every given instance at once")
    _add_run_options(solve)
    solve.add_argument("--repeats", type=int, help="independent runs to aggregate (default 10)")
    solve.add_argument("--jobs", type=int, default=1, help="run repeats in this many processes")

    check = sub.add_parser("oracle-check", help="compare one reactor run with exhaustive search")
    _add_run_options(check)

    gen = sub.add_parser("gen", help="print a synthetic instance")
    gen.add_argument("kind", choices=("tsp-random", "rh-planted", "alsp-random"))
    gen.add_argument("--n", type=int, default=50, help="cities (tsp-random)")
    gen.add_argument("--scale", type=float, default=generators.TSP_SCALE, help="coordinate scale (tsp-random)")
    gen.add_argument("--m", type=int, default=10, help="markers (rh-planted)")
    gen.add_argument("--k", type=int, default=20, help="hybrids (rh-planted)")
    gen.add_argument("--noise", type=float, default=0.0, help="per-cell flip rate (rh-planted)")
    gen.add_argument("--p", type=int, default=10, help="aircraft (alsp-random)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path)
    return parser


def _resolve(args) -> tuple[RunConfig, list]:
    run = load_config(args.config) if args.config else RunConfig()
    if args.tsp or args.alsp or args.rh:
        run.tsp, run.alsp, run.rh = list(args.tsp), list(args.alsp), list(args.rh)
    if args.runways is not None:
        run.runways = args.runways
    if args.capacity is not None:
        run.tsp_capacity = run.alsp_capacity = run.rh_capacity = args.capacity
    if getattr(args, "repeats", None) is not None:
        run.repeats = args.repeats
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reactions is not None:
        overrides["reactions_per_epoch"] = args.reactions
    if args.max_epochs is not None:
        overrides["max_epochs"] = args.max_epochs
    if args.check_invariants:
        overrides["check_invariants"] = True
    try:
        run.reactor = replace(run.reactor, **overrides)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if run.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    if run.runways < 1:
        raise UsageError("--runways must be at least 1")
    if min(run.tsp_capacity, run.alsp_capacity, run.rh_capacity) < 2:
        raise UsageError("--capacity must be at least 2")
    groups = []
    for path in run.tsp:
        groups.append((parse_tsplib(_read(path), source=str(path)), run.tsp_capacity))
    for path in run.alsp:
        groups.append((parse_airland(_read(path), runways=run.runways, source=str(path), name=path.stem),
                       run.alsp_capacity))
    for path in run.rh:
        groups.append((parse_rh_panel(_read(path), source=str(path), name=path.stem), run.rh_capacity))
    if not groups:
        raise UsageError("no instances given (use --tsp, --alsp, --rh or a config [instances] section)")
    return run, groups


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), None, str(path)) from None


def _one_run(groups, config: ReactorConfig) -> RunReport:
    universe = init_universe(groups, config)
    report = run_until_done(universe)
    log.info("seed %d: %d epochs, best %s", config.seed, report.epochs,
             [round(g.best_mass, 6) for g in report.groups])
    return report


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_solve(args) -> int:
    run, groups = _resolve(args)
    configs = [replace(run.reactor, seed=run.reactor.seed + i) for i in range(run.repeats)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_one_run, [groups] * len(configs), configs))
    else:
        runs = [_one_run(groups, c) for c in configs]
    doc = build_report(runs, [inst for inst, _ in groups])
    _emit(write_report(doc, args.format), args.out)
    return EXIT_OK


def _oracle_for(instance):
    if instance.kind == "tsp":
        return brute_force_min(instance.mass, instance.n, rotation_invariant=True)
    if instance.kind == "rh":
        return brute_force_min(instance.mass, instance.n)
    return alsp_exact_small(instance)


def cmd_oracle_check(args) -> int:
    run, groups = _resolve(args)
    oracles = []
    for inst, _ in groups:
        try:
            oracles.append(_oracle_for(inst))
        except OracleRefused as exc:
            print(f"refused: {inst.name}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    report = _one_run(groups, run.reactor)
    lines = []
    ok = True
    for g, orc in zip(report.groups, oracles):
        gap = g.best_mass - orc.best_mass
        tol = 1e-9 * max(1.0, abs(orc.best_mass))
        below = gap < -tol
        ok &= not below
        if args.format == "machine":
            lines += [f"group.{g.group_id}.kind={g.kind}", f"group.{g.group_id}.acr_best={g.best_mass!r}",
                      f"group.{g.group_id}.oracle_best={orc.best_mass!r}",
                      f"group.{g.group_id}.gap={0.0 if abs(gap) <= tol else gap!r}",
                      f"group.{g.group_id}.enumerated={orc.enumerated}"]
        else:
            lines.append(f"{g.group_id:>3}  {g.kind:<4}  {g.name:<20}  acr={g.best_mass:<14.6g}"
                         f"oracle={orc.best_mass:<14.6g}gap={0.0 if abs(gap) <= tol else gap:.6g}"
                         + ("  BELOW ORACLE" if below else ""))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_gen(args) -> int:
    params = {"seed": args.seed}
    if args.kind == "tsp-random":
        if args.n < 2 or args.scale <= 0:
            raise UsageError("tsp-random needs --n >= 2 and --scale > 0")
        params.update(n=args.n, scale=args.scale)
    elif args.kind == "rh-planted":
        if args.m < 2 or args.k < args.m - 1 or not 0.0 <= args.noise <= 1.0:
            raise UsageError("rh-planted needs --m >= 2, --k >= m - 1 and --noise in [0, 1]")
        params.update(m=args.m, k=args.k, noise=args.noise)
    else:
        if args.p < 1:
            raise UsageError("alsp-random needs --p >= 1")
        params.update(p=args.p)
    _emit(generators.generate(args.kind, **params), args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "oracle-check": cmd_oracle_check, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"acreactor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ConfigError) as exc:
        print(f"acreactor: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except AssertionError as exc:
        print(f"acreactor: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

"""``ggpeps`` command line: run | sweep | enumerate | selftest."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from ggpeps.gaussian import InvalidCovarianceError
from ggpeps.montecarlo import MAX_ENUMERATION_STATES
from ggpeps.sweep import ConfigError, Grid, default_workers, execute, load_spec, scan_metadata, write_heatmap

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggpeps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=_u64, help="master seed (required for run/sweep)")
    common.add_argument("--lattice", help="torus extents, e.g. 4x4")
    common.add_argument("--N", dest="group_order", type=int, help="group order (odd)")
    common.add_argument("--y", type=float)
    common.add_argument("--z", type=float)
    common.add_argument("--sweeps", type=int, help="measurement sweeps")
    common.add_argument("--burn", type=int, help="burn-in sweeps")
    common.add_argument("--bin", type=int, help="bin size in measurements")
    common.add_argument("--measure-every", type=int, dest="measure_every")
    common.add_argument("--observables", help="comma-separated names (W11, WL, one)")
    common.add_argument("--workers", type=int, help="worker processes (default $GGPEPS_WORKERS or 1)")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    grid = argparse.ArgumentParser(add_help=False)
    for axis in ("y", "z"):
        grid.add_argument(f"--{axis}-min", type=float, dest=f"{axis}_min")
        grid.add_argument(f"--{axis}-max", type=float, dest=f"{axis}_max")
        grid.add_argument(f"--{axis}-steps", type=int, dest=f"{axis}_steps")
    grid.add_argument("--heatmap", help="write an SVG heatmap of the grid")

    sub.add_parser("run", parents=[common], help="single (y, z) point")
    sub.add_parser("sweep", parents=[common, grid], help="(y, z) grid scan")
    sub.add_parser("enumerate", parents=[common, grid], help="exact enumeration (tiny tori)")
    selftest = sub.add_parser("selftest", help="run the invariant suite")
    selftest.add_argument("--seed", type=_u64, default=0)
    selftest.add_argument("--fault", choices=["unstaggered"], help=argparse.SUPPRESS)
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "lattice", "group_order", "y", "z", "sweeps", "burn", "bin", "measure_every",
            "observables", "out", "heatmap", "workers")
    return {k: getattr(args, k, None) for k in keys}


def _grid_overrides(args, base: Grid | None) -> Grid | None:
    names = ("y_min", "y_max", "y_steps", "z_min", "z_max", "z_steps")
    given = {n: getattr(args, n, None) for n in names}
    if base is None and all(v is None for v in given.values()):
        return None
    values = {n: getattr(base, n) for n in names} if base else {}
    values.update({k: v for k, v in given.items() if v is not None})
    missing = [n for n in names if n not in values]
    if missing:
        raise ConfigError(f"grid needs {', '.join(missing)}")
    return Grid(**values)


def _resolve(args):
    from dataclasses import replace

    spec = load_spec(args.config, _overrides(args))
    if args.workers is None and spec.workers == 1:
        spec = replace(spec, workers=default_workers())
    if args.command in ("sweep", "enumerate"):
        spec = replace(spec, grid=_grid_overrides(args, spec.grid))
    if args.command in ("run", "sweep") and spec.seed is None:
        raise ConfigError("--seed is required for run and sweep")
    if args.command == "sweep" and spec.grid is None:
        raise ConfigError("sweep needs a grid (config 'grid' or --y-min/.../--z-steps)")
    if args.command == "enumerate":
        n_states = spec.group_order ** spec.torus().n_links
        if n_states > MAX_ENUMERATION_STATES:
            raise ConfigError(f"{spec.lattice} has {n_states} configurations; enumeration is limited "
                              f"to {MAX_ENUMERATION_STATES}")
        if spec.seed is None:
            spec = replace(spec, seed=0)
    return spec


def _emit(spec, exact: bool) -> list[dict]:
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            return execute(spec, fh, exact)
    return execute(spec, sys.stdout, exact)


def cmd_run(args) -> int:
    spec = _resolve(args)
    _emit(spec, exact=False)
    return EXIT_OK


def cmd_sweep(args, exact: bool = False) -> int:
    spec = _resolve(args)
    rows = _emit(spec, exact)
    meta = scan_metadata(spec, rows)
    if spec.out:
        with open(spec.out + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    for name, scans in meta["spikes"].items():
        for scan, steps in scans.items():
            if steps:
                print(f"{name} {scan}: abrupt steps at {steps}", file=sys.stderr)
    if spec.heatmap:
        try:
            write_heatmap(spec.heatmap, rows, spec.observables)
        except Exception as exc:  # rendering never gates the CSV
            logging.getLogger("ggpeps").warning("heatmap not written: %s", exc)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    return cmd_sweep(args, exact=True)


def cmd_selftest(args) -> int:
    from ggpeps.selftest import print_table, run_selftest

    results = run_selftest(seed=args.seed, fault=args.fault)
    print_table(results)
    return EXIT_OK if results and all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "enumerate": cmd_enumerate, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ggpeps: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidCovarianceError, np.linalg.LinAlgError) as exc:
        print(f"ggpeps: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``rgmsfem <subcommand> [--key value ...]``.

Every :class:`~rgmsfem.config.RunConfig` field is a flag (``--k_nb 20``); flags
override ``--config`` file keys. Tables go to stdout or ``--out`` as CSV.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
import argparse
import csv
import io
import logging
import sys
from dataclasses import fields

import numpy as np

from . import experiments
from .assembly import SolverError
from .coarse import SingularCoarseError
from .config import ConfigError, RunConfig, load_config, parse_value
from .field import generate_channels, save_field, write_array
from .grid import build_geometry
from .pipeline import setup

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

COMMANDS = {
    "solve-fine": experiments.run_solve_fine,
    "compare": experiments.run_compare,
    "buffer-study": experiments.run_buffer_study,
    "oversample-study": experiments.run_oversampling_study,
    "skin-compare": experiments.run_skin_compare,
    "adaptive": experiments.run_adaptive,
    "lemma-check": experiments.run_lemma_check,
    "gen-field": None,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="rgmsfem", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="file of 'key = value' lines")
    parser.add_argument("--out", help="write the CSV (or field, for gen-field) here instead of stdout")
    parser.add_argument("--dump-solution", dest="dump_solution",
                        help="write the last computed nodal solution in the field file format")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for per-neighborhood work")
    parser.add_argument("-v", "--verbose", action="store_true")
    for f in fields(RunConfig):
        parser.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar=f.name.upper())
    return parser


def resolve_config(args):
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {f.name: parse_value(f.name, getattr(args, f"cfg_{f.name}"))
                 for f in fields(RunConfig) if getattr(args, f"cfg_{f.name}") is not None}
    return config.with_(**overrides)


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.6g" % v


def format_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _gen_field(config, out):
    geom = build_geometry(config.coarse_nx, config.coarse_ny, config.fine_per_coarse)
    margin = None if config.field_margin < 0 else config.field_margin
    field = generate_channels(geom, config.contrast, config.field_seed, margin=margin)
    if out:
        save_field(out, field)
    else:
        buf = io.StringIO()
        write_array(buf, field.values, field.nx, field.ny)
        sys.stdout.write(buf.getvalue())


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        config = resolve_config(args)
        if args.command == "gen-field":
            _gen_field(config, args.out)
            return EXIT_OK
        problem = setup(config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"rgmsfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"rgmsfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        result = COMMANDS[args.command](config, threads=args.threads, problem=problem)
    except (SolverError, SingularCoarseError, np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        print(f"rgmsfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(format_csv(result.header, result.rows), args.out)
    if args.dump_solution:
        if result.field is None:
            print("rgmsfem: this command computes no solution field", file=sys.stderr)
            return EXIT_CONFIG
        geom = problem.geom
        write_array(args.dump_solution, result.field, geom.nx + 1, geom.ny + 1)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

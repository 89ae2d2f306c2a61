"""``dsr-lab`` command line.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, recipes, sweep
from .config import load_config, load_yaml, parse_config
from .errors import ConfigError, DsrLabError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _outputs(config, out):
    """CSV/JSON destinations: ``--out`` names the CSV, JSON goes alongside."""
    if out:
        out = Path(out)
        return out, out.with_suffix(".json")
    csv_path, json_path = config.outputs.csv_path, config.outputs.json_path
    if not csv_path and not json_path:
        return None, None
    return csv_path, json_path


def _run_rows(config, args):
    rows = sweep.run_sweep(config, args.jobs)
    csv_path, json_path = _outputs(config, args.out)
    if csv_path is None and json_path is None:
        sys.stdout.write(sweep.rows_csv(rows, config))
    else:
        sweep.emit(rows, config, csv_path, json_path)
    failed = [r for r in rows if r.error]
    if failed:
        raise sweep.RowErrors(failed)


def cmd_sweep(args):
    _run_rows(load_config(args.config), args)


def cmd_benchmarks(args):
    raw = load_yaml(args.config)
    if isinstance(raw, dict):
        raw = {**raw, "scenario": "benchmarks"}
    _run_rows(parse_config(raw), args)


def _write_table(header, records, out):
    text = sweep.table_csv(header, records)
    if out:
        sweep.write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_crossover(args):
    raw = load_yaml(args.config)
    if not isinstance(raw, dict) or set(raw) != {"crossovers"}:
        raise ConfigError("crossovers", "config must contain exactly a 'crossovers' list")
    _write_table(recipes.CROSSOVER_COLUMNS, recipes.crossover_records(raw["crossovers"]), args.out)


def cmd_ntmax(args):
    config = load_config(args.config, require_noise=False)
    _write_table(sweep.NTMAX_COLUMNS, sweep.run_ntmax(config, args.jobs), args.out)


def cmd_reproduce(args):
    out = args.out or f"fig{args.figure}"
    for path in recipes.reproduce_figure(args.figure, out, args.jobs):
        print(path)


def build_parser():
    parser = argparse.ArgumentParser(prog="dsr-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name, func, help, config=True):
        p = sub.add_parser(name, help=help)
        if config:
            p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--out", help="output path")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (DSR_LAB_JOBS overrides)")
        p.set_defaults(func=func)
        return p

    verb("sweep", cmd_sweep, "error probability over an N grid")
    verb("benchmarks", cmd_benchmarks, "benchmark curves over an N grid")
    verb("crossover", cmd_crossover, "bisect where two curves cross")
    verb("ntmax", cmd_ntmax, "maximum tolerable thermal noise over an N grid")
    p = verb("reproduce-figure", cmd_reproduce, "run a committed figure recipe", config=False)
    p.add_argument("figure", type=int, choices=recipes.FIGURES)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except sweep.RowErrors as exc:
        for row in exc.rows:
            print(f"N={row.N}: {row.error}", file=sys.stderr)
        return EXIT_NUMERIC
    except DsrLabError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

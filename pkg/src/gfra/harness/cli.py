"""Command line entry point: ``gfra run|sweep|plot-data|validate``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import SimError
from .config import ExperimentConfig, load_config
from .output import PLOT_KINDS, emit_plot_data, read_csv, write_csv
from .runner import run_experiment

log = logging.getLogger("gfra")


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.realizations is not None:
        changes["realizations"] = args.realizations
    if getattr(args, "loads", None):
        changes["load_sweep"] = tuple(args.loads)
    return cfg.replace(**changes) if changes else cfg


def _output_path(cfg: ExperimentConfig, config_path: str, out_dir: str | None) -> Path:
    if cfg.output_path and out_dir is None:
        return Path(cfg.output_path)
    name = Path(cfg.output_path).name if cfg.output_path else Path(config_path).stem + ".csv"
    return Path(out_dir or ".") / name


def _run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    log.info("running %s over %d loads x %d realizations", cfg.protocol, len(cfg.load_sweep), cfg.realizations)
    reports = run_experiment(cfg, workers=args.workers)
    path = write_csv(reports, _output_path(cfg, args.config, args.out))
    print(path)
    return 0


def _plot_data(args) -> int:
    reports = read_csv(args.csv)
    for p in emit_plot_data(reports, args.kind, args.out or Path(args.csv).parent):
        print(p)
    return 0


def _validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg.protocol}, loads {list(cfg.load_sweep)}, {cfg.realizations} realizations")
    return 0


def _loads(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad load list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty load list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfra", description="Grant-free random access Monte Carlo simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p):
        p.add_argument("config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--realizations", type=int)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("run", help="run the config's load sweep")
    run_options(p)
    p.set_defaults(func=_run)

    p = sub.add_parser("sweep", help="run with an inline load list")
    run_options(p)
    p.add_argument("--loads", type=_loads, required=True, help="comma separated G values")
    p.set_defaults(func=_run)

    p = sub.add_parser("plot-data", help="write per-series (G, metric) files from a results CSV")
    p.add_argument("csv")
    p.add_argument("--kind", required=True, choices=sorted(PLOT_KINDS))
    p.add_argument("--out", help="output directory (default: next to the CSV)")
    p.set_defaults(func=_plot_data)

    p = sub.add_parser("validate", help="parse a config and report problems")
    p.add_argument("config")
    p.set_defaults(func=_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SimError, OSError, ValueError) as exc:
        print(f"gfra: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

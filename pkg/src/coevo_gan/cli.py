"""``coevo-gan`` command line.

Exit codes: 0 success, 1 configuration error, 2 every cell failed,
3 some cells failed.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .datasets import DATASETS
from .nn import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coevo-gan", description="Coevolutionary GAN experiments on 2D mixtures.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="dataset utilities")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)
    pv = ds_sub.add_parser("preview", help="write a dataset split as CSV and SVG")
    pv.add_argument("--dataset", required=True, choices=DATASETS)
    pv.add_argument("--out", required=True)
    pv.add_argument("--seed", type=int, default=0, help="master seed the split is derived from")

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", required=True)
    run.add_argument("--workers", type=int, default=None,
                     help=f"worker processes (default: ${harness.WORKERS_ENV} or all cores)")
    run.add_argument("--out", default=None, help="override the config's output_dir")

    rep = sub.add_parser("report", help="aggregate run CSVs into tables")
    rep.add_argument("--in", dest="in_dir", required=True)
    rep.add_argument("--out", required=True)

    plot = sub.add_parser("plot", help="scatter plot of a run's best generator")
    plot.add_argument("--run", required=True, help="run CSV (its .gen.json snapshot must sit next to it)")
    plot.add_argument("--out", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "dataset":
            csv_path, svg_path = harness.preview_dataset(args.dataset, args.out, args.seed)
            print(f"wrote {csv_path} and {svg_path}")
            return EXIT_OK
        if args.command == "run":
            cfg = harness.parse_config(args.config)
            results = harness.run_grid(cfg, workers=args.workers, output_dir=args.out)
            failed = sum(r.status != "ok" for r in results)
            print(f"{len(results) - failed}/{len(results)} cells ok")
            if failed == len(results):
                return EXIT_ALL_FAILED
            return EXIT_PARTIAL if failed else EXIT_OK
        if args.command == "report":
            rep = harness.report(args.in_dir, args.out)
            sys.stdout.write(rep.text())
            return EXIT_OK
        if args.command == "plot":
            print(f"wrote {harness.plot_run(args.run, args.out)}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

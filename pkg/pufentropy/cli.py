#  Copyright (c) 2024 pufentropy developers
"""
Command line interface: ``pufentropy <command> ...``.

Exit codes: 0 success, 1 runtime error (I/O, invalid or incompatible class map files), 2 usage error,
3 estimator precondition violated.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional

from pufentropy.errors import EstimatorError, IncompatibleMaps, StoreError
from pufentropy.estimators import EntropyOrder
from pufentropy.oracle import MAX_ENUMERATION_N, census_map
from pufentropy.puf import MAX_N
from pufentropy.report import Report, fig1_csv
from pufentropy.sampler import MAX_SEED, Distribution, SamplerConfig, poisson_batches, run, run_shard
from pufentropy.store import load, merge_files, save

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_ESTIMATOR = 3


def _bounded_int(low, high=None):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
        if value < low or (high is not None and value > high):
            bounds = f">= {low}" if high is None else f"in [{low}, {high}]"
            raise argparse.ArgumentTypeError(f"must be {bounds}, got {value}")
        return value
    return parse


def _confidence(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{text}'")
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"confidence must be in (0, 1), got {value}")
    return value


def _path_list(items):
    # "-i a,b -i c" and "-i a b" both give [a, b, c]
    return [Path(p) for item in items for p in item.split(",") if p]


def _batch_path(path: Path, b: int, batches: int) -> Path:
    if batches == 1:
        return path
    return path.with_name(f"{path.stem}-{b}{path.suffix}")


def cmd_sample(args) -> int:
    config = SamplerConfig(n=args.n, rounds=args.rounds, seed=args.seed, shards=args.shards,
                           distribution=args.dist, poissonized=args.poisson)
    if args.poisson:
        maps = poisson_batches(config, args.rounds, args.batches, workers=args.workers)
        for b, cmap in enumerate(maps):
            save(cmap, _batch_path(args.output, b, args.batches))
    elif args.shard_index is not None:
        save(run_shard(config, args.shard_index), args.output)
    else:
        save(run(config, workers=args.workers), args.output)
    return EXIT_OK


def cmd_merge(args) -> int:
    merged = merge_files(_path_list(args.inputs), args.output)
    print(f"{len(merged)} classes, {merged.rounds} rounds")
    return EXIT_OK


def _orders(choice) -> List[EntropyOrder]:
    if choice == "all":
        return list(EntropyOrder)
    return [EntropyOrder(choice)]


def cmd_estimate(args) -> int:
    maps = [load(p) for p in _path_list(args.input)]
    # "all" reports H2 from a single fixed-size map rather than failing
    report = Report.from_maps(maps, _orders(args.entropy), args.confidence, h2_fallback=args.entropy == "all")
    sys.stdout.write(report.render(args.format).rstrip("\n") + "\n")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    cmap = census_map(args.n)
    if args.output is not None:
        save(cmap, args.output)
    total = cmap.covered_pufs()
    print(f"{total}  {math.log2(total):.4f}")
    return EXIT_OK


def cmd_report_fig1(args) -> int:
    if not args.inputs:
        logger.error("no inputs given")
        return EXIT_RUNTIME
    reports = []
    for item in args.inputs:
        maps = [load(p) for p in _path_list([item])]
        if not maps:
            logger.error(f"empty input item '{item}'")
            return EXIT_RUNTIME
        reports.append(Report.from_maps(maps, list(EntropyOrder), args.confidence, h2_fallback=True))
    sys.stdout.write(fig1_csv(reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pufentropy",
                                     description="Estimate the entropy of PUFs (self-dual threshold functions).")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase logging verbosity (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample PUFs and write a class map")
    p.add_argument("--n", type=_bounded_int(1, MAX_N), required=True, help="number of weights")
    p.add_argument("--rounds", type=_bounded_int(1), required=True,
                   help="number of samples (Poisson parameter with --poisson)")
    p.add_argument("--seed", type=_bounded_int(0, MAX_SEED), required=True, help="unsigned 64-bit seed")
    p.add_argument("--shards", type=_bounded_int(1), default=os.cpu_count() or 1,
                   help="number of independent random streams (default: number of CPUs)")
    p.add_argument("--dist", choices=[str(d) for d in Distribution], default=str(Distribution.GAUSSIAN),
                   help="weight distribution")
    p.add_argument("--poisson", action="store_true", help="draw the number of samples from Poisson(rounds)")
    p.add_argument("--batches", type=_bounded_int(1), default=1,
                   help="with --poisson: number of independent batches (seeds seed, seed+1, ...), written to "
                        "<output stem>-<b><suffix>")
    p.add_argument("--shard-index", type=_bounded_int(0), default=None,
                   help="only sample this shard (merge the shard files later)")
    p.add_argument("--workers", type=_bounded_int(1), default=None, help="number of worker processes")
    p.add_argument("-o", "--output", type=Path, required=True, help="output class map file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("merge", help="merge class map files")
    p.add_argument("inputs", nargs="+", help="class map files (or comma-separated lists)")
    p.add_argument("-o", "--output", type=Path, required=True, help="output class map file")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("estimate", help="estimate entropies from class maps")
    p.add_argument("--entropy", choices=[str(o) for o in EntropyOrder] + ["all"], default="all")
    p.add_argument("--confidence", type=_confidence, default=0.95, help="confidence level (default: 0.95)")
    p.add_argument("-i", "--input", action="append", required=True,
                   help="class map file(s), comma-separated or repeated; several Poissonized batches for h2")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("enumerate", help="exhaustive census of all PUFs for small n")
    p.add_argument("--n", type=_bounded_int(1, MAX_ENUMERATION_N), required=True, help="number of weights")
    p.add_argument("-o", "--output", type=Path, default=None, help="census file")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("report-fig1", help="CSV of entropy intervals versus n")
    p.add_argument("--inputs", nargs="*", default=[],
                   help="one item per n: a class map file or comma-separated batch files")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("--confidence", type=_confidence, default=0.95)
    p.set_defaults(func=cmd_report_fig1)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(stream=sys.stderr, level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sample" and args.poisson and args.shard_index is not None:
        parser.print_usage(sys.stderr)
        logger.error("--shard-index cannot be combined with --poisson")
        return EXIT_USAGE
    if args.command == "sample" and args.shard_index is not None and args.shard_index >= args.shards:
        parser.print_usage(sys.stderr)
        logger.error(f"--shard-index must be smaller than --shards ({args.shards})")
        return EXIT_USAGE
    try:
        return args.func(args)
    except EstimatorError as e:
        logger.error(str(e))
        return EXIT_ESTIMATOR
    except (OSError, StoreError, IncompatibleMaps) as e:
        logger.error(str(e))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

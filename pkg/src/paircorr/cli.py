"""Command-line interface.

Subcommands: ``gen`` (synthetic dataset), ``run`` (compute correlations),
``verify`` (check a result against the brute-force oracle), ``query``
(read one pair from a result file), ``cost`` (arithmetic-operation
estimate).  Exit codes: 0 success, 1 usage, 2 data error, 3 verification
failure, 4 worker failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .engine import DEFAULT_BUFFER_BUDGET, allpairs, default_capacity
from .errors import (
    DataError,
    IntegrityError,
    PipelineError,
    ProtocolError,
    VerificationError,
    WorkerError,
)
from .fileio import gen_synthetic, load_dataset, load_result, query_pair, save_dataset, save_result, verify
from .tiles import DEFAULT_TILE_SIZE, TileGeometry
from .transform import estimate_cost

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3
EXIT_WORKER = 4

ENV_THREADS = "PAIRCORR_THREADS"
ENV_BUFFER_BUDGET = "PAIRCORR_BUFFER_BUDGET"

_EPILOG = f"""environment variables:
  {ENV_THREADS}         default compute thread count when --threads is omitted
  {ENV_BUFFER_BUDGET}   pass-buffer byte budget when --capacity is omitted
                          (plain bytes or with a KiB/MiB/GiB suffix;
                          default {DEFAULT_BUFFER_BUDGET // 2**20} MiB for the two pass buffers)
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _parse_bytes(text: str) -> int:
    units = {"kib": 2**10, "mib": 2**20, "gib": 2**30}
    lowered = text.strip().lower()
    for suffix, factor in units.items():
        if lowered.endswith(suffix):
            return int(float(lowered[: -len(suffix)]) * factor)
    return int(lowered)


def _env_threads(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    return int(os.environ.get(ENV_THREADS, "1"))


def _env_budget() -> int | None:
    raw = os.environ.get(ENV_BUFFER_BUDGET)
    return _parse_bytes(raw) if raw else None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="paircorr",
        description="Bounded-memory all-pairs Pearson correlation engine.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a deterministic synthetic dataset")
    p.add_argument("--n", type=_positive_int, required=True, help="variable count")
    p.add_argument("--l", type=_positive_int, required=True, help="samples per variable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset file (binary)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="compute all-pairs correlations")
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument("--format", choices=["auto", "tsv", "binary"], default="auto")
    p.add_argument("--tile-size", type=_positive_int, default=DEFAULT_TILE_SIZE)
    p.add_argument("--capacity", type=_positive_int, default=None, help="max tiles per pass")
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--backend", choices=["in_process", "subprocess"], default="in_process")
    p.add_argument("--out", required=True, help="output result file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="check a result against the brute-force oracle")
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument("--result", required=True, help="result file")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("query", help="read one pair's correlation from a result file")
    p.add_argument("--result", required=True)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("cost", help="print the arithmetic-operation estimate")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--l", type=_positive_int, required=True)
    p.set_defaults(func=_cmd_cost)

    return parser


def _cmd_gen(args) -> int:
    dataset = gen_synthetic(args.n, args.l, args.seed)
    save_dataset(args.out, dataset)
    print(f"wrote {args.out}: n={dataset.n} l={dataset.l} seed={args.seed}")
    return EXIT_OK


def _cmd_run(args) -> int:
    threads = _env_threads(args.threads)
    capacity = args.capacity
    if capacity is None:
        capacity = default_capacity(args.tile_size, _env_budget())
    dataset = load_dataset(args.input, format=args.format)
    geom = TileGeometry(n=dataset.n, t=args.tile_size)
    started = time.perf_counter()
    result = allpairs(
        dataset,
        tile_size=args.tile_size,
        capacity=capacity,
        threads=threads,
        workers=args.workers,
        backend=args.backend,
    )
    elapsed = time.perf_counter() - started
    save_result(args.out, result)
    print(
        f"n={dataset.n} l={dataset.l} tiles={geom.total_tiles} t={args.tile_size} "
        f"capacity={capacity} threads={threads} workers={args.workers} "
        f"backend={args.backend}: {elapsed:.3f} s -> {args.out}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    dataset = load_dataset(args.input)
    result = load_result(args.result)
    report = verify(dataset, result, tolerance=args.tolerance, raise_on_failure=False)
    print(
        f"max abs deviation {report.max_abs_deviation:.3e} at pair {report.worst_pair} "
        f"(tolerance {report.tolerance:g})"
    )
    if not report.ok:
        if report.first_bad_pair is not None:
            print(f"FAIL: first offending pair {report.first_bad_pair}", file=sys.stderr)
        else:
            print("FAIL: zero-variance sets disagree", file=sys.stderr)
        return EXIT_VERIFY
    print("OK")
    return EXIT_OK


def _cmd_query(args) -> int:
    value = query_pair(args.result, args.i, args.j)
    print(f"{value:.17g}")
    return EXIT_OK


def _cmd_cost(args) -> int:
    print(estimate_cost(args.n, args.l))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (WorkerError, ProtocolError, PipelineError, IntegrityError) as exc:
        print(f"worker failure: {exc}", file=sys.stderr)
        return EXIT_WORKER


if __name__ == "__main__":
    sys.exit(main())

"""Command-line benchmark driver.

Exit status: 0 when every row verified, 1 when any accelerated result
diverged from its sequential oracle (a diff summary goes to stderr),
2 for configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .harness import SUITES, BenchConfig, emit, failures, run_bench

#: Board sizes at or above this take minutes to hours; require opt-in.
LONG_NQUEENS = 18


def _worker_list(text: str) -> tuple:
    try:
        ws = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"workers must be comma-separated integers, got {text!r}")
    if not ws:
        raise argparse.ArgumentTypeError("workers list is empty")
    return ws


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="taskfarm-bench",
        description="Run the sequential-vs-accelerated benchmark suites "
                    "and emit a verified timing table.")
    p.add_argument("--suite", default="all", choices=SUITES + ("all",),
                   help="which workload to run (default: all)")
    p.add_argument("--size", type=int, default=None,
                   help="problem size: matrix side, image side, board size, "
                        "or token count (default: per-suite)")
    p.add_argument("--workers", type=_worker_list, default=(4,),
                   metavar="N[,N...]",
                   help="comma-separated worker counts (default: 4)")
    p.add_argument("--queue-cap", type=int, default=None,
                   help="queue capacity (default: 64 for farms, 1024 for spsc)")
    p.add_argument("--depth", type=int, default=4,
                   help="nqueens frontier cutoff depth (default: 4)")
    p.add_argument("--passes", type=int, default=6,
                   help="mandel iteration-doubling passes (default: 6)")
    p.add_argument("--region", default="all",
                   help="mandel region preset or 'all' (default: all)")
    p.add_argument("--seed", type=int, default=1,
                   help="matmul input seed (default: 1)")
    p.add_argument("--reps", type=int, default=5,
                   help="timed repetitions per variant (default: 5)")
    p.add_argument("--format", dest="fmt", choices=("csv", "md"),
                   default="csv", help="output table format (default: csv)")
    p.add_argument("--out", default=None,
                   help="write the table to this file instead of stdout")
    p.add_argument("--long", action="store_true",
                   help="allow long-running tiers (nqueens size >= "
                        f"{LONG_NQUEENS})")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = BenchConfig(suite=args.suite, size=args.size,
                          workers=args.workers, queue_cap=args.queue_cap,
                          depth=args.depth, passes=args.passes,
                          region=args.region, seed=args.seed, reps=args.reps)
        if (cfg.suite == "nqueens" and args.size is not None
                and args.size >= LONG_NQUEENS and not args.long):
            raise ValueError(
                f"nqueens size {args.size} is a long-running tier; "
                "pass --long to confirm")
        results = run_bench(cfg)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    table = emit(results, args.fmt)
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(table)
    else:
        sys.stdout.write(table)
    bad = failures(results)
    if bad:
        print("verification failed:", file=sys.stderr)
        for line in bad:
            print(f"  {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())

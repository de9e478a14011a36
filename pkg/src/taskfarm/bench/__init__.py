"""Benchmark harness: three classic workloads plus a queue micro-benchmark.

Workloads: row-decomposed matrix multiply, progressive-precision
Mandelbrot rendering over named regions, and task-parallel N-queens with
an initial-placement decomposition.  Each has a sequential oracle; the
accelerated variant must reproduce its output exactly before any timing
is reported.
"""

from .harness import (COLUMNS, SUITES, BenchConfig, BenchResult, emit,
                      failures, run_bench)

__all__ = ["BenchConfig", "BenchResult", "COLUMNS", "SUITES", "emit",
           "failures", "run_bench"]

"""Benchmark harness: one timing/verification protocol for every suite.

Protocol per suite:

1. Compute the sequential result once, untimed, as the verification
   oracle (JIT warm-up happens before any clock starts).
2. Time ``reps`` sequential runs on the same inputs.
3. For each worker count, time ``reps`` accelerated runs.  Accelerator
   planning/construction is excluded; the timed window is start-offload-
   drain (for the frozen multi-pass renders, each pass's resume-to-frozen
   window).  Every accelerated repetition is checked against the oracle.

Rows carry the fixed columns (benchmark, size, workers, seq_mean,
acc_mean, speedup, verified); mismatch details ride along for the CLI's
failure report but are not a table column.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..accelerator import AcceleratorConfig
from . import mandel, matmul, nqueens
from .kernels import warm_kernels
from .spsc_bench import run_spsc_bench

COLUMNS = ("benchmark", "size", "workers", "seq_mean", "acc_mean",
           "speedup", "verified")

SUITES = ("matmul", "mandel", "nqueens", "spsc")

_DEFAULT_SIZES = {"matmul": 512, "mandel": 512, "nqueens": 14,
                  "spsc": 1_000_000}
_DEFAULT_FARM_CAP = 64
_DEFAULT_SPSC_CAP = 1024


@dataclass(frozen=True)
class BenchConfig:
    suite: str
    size: int | None = None           # None -> per-suite default
    workers: tuple[int, ...] = (4,)
    queue_cap: int | None = None      # None -> 64 (farms) / 1024 (spsc)
    depth: int = 4                    # nqueens frontier cutoff
    passes: int = 6                   # mandel zoom-depth passes
    region: str = "all"               # mandel region preset
    seed: int = 1                     # matmul input seed
    reps: int = 5                     # experiment protocol: mean of 5 runs

    def __post_init__(self):
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}; "
                             f"choose from {list(SUITES) + ['all']}")
        if self.suite == "all" and self.size is not None:
            raise ValueError("an explicit size needs a single suite")
        if self.size is not None and self.size <= 0:
            raise ValueError("size must be positive")
        if not self.workers or any(w < 1 for w in self.workers):
            raise ValueError("workers must be one or more positive counts")
        if self.queue_cap is not None and self.queue_cap < 2:
            raise ValueError("queue capacity must be at least 2")
        if self.passes < 1:
            raise ValueError("passes must be at least 1")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.region != "all" and self.region not in mandel.REGIONS:
            raise ValueError(f"unknown region {self.region!r}; choose from "
                             f"{sorted(mandel.REGIONS) + ['all']}")


@dataclass
class BenchResult:
    benchmark: str
    size: int
    workers: int
    seq_mean: float
    acc_mean: float
    speedup: float
    verified: bool
    detail: str = field(default="", compare=False)
    # per-repetition samples and the last run's per-role task counts;
    # kept for inspection, not part of the emitted table
    seq_times: tuple = field(default=(), compare=False)
    acc_times: tuple = field(default=(), compare=False)
    task_counts: dict = field(default_factory=dict, compare=False)

    def row(self) -> tuple:
        return (self.benchmark, self.size, self.workers,
                f"{self.seq_mean:.6g}", f"{self.acc_mean:.6g}",
                f"{self.speedup:.6g}", "true" if self.verified else "false")


def _mean(xs) -> float:
    return sum(xs) / len(xs)


def _ratio(seq: float, acc: float) -> float:
    return seq / acc if acc > 0 else float("inf")


def _size(cfg: BenchConfig) -> int:
    return cfg.size if cfg.size is not None else _DEFAULT_SIZES[cfg.suite]


def _farm_cfg(cfg: BenchConfig, w: int) -> AcceleratorConfig:
    cap = cfg.queue_cap if cfg.queue_cap is not None else _DEFAULT_FARM_CAP
    return AcceleratorConfig(n_workers=w, queue_capacity=cap)


def _run_matmul(cfg: BenchConfig) -> list[BenchResult]:
    n = _size(cfg)
    a, b = matmul.generate_inputs(n, cfg.seed)
    oracle = matmul.matmul_seq_on(a, b)
    seq_times = []
    for _ in range(cfg.reps):
        t0 = time.perf_counter()
        matmul.matmul_seq_on(a, b)
        seq_times.append(time.perf_counter() - t0)
    seq_mean = _mean(seq_times)
    rows = []
    for w in cfg.workers:
        times, ok, detail, counts = [], True, "", {}
        for rep in range(cfg.reps):
            acc, c = matmul.prepare_acc(a, b, _farm_cfg(cfg, w))
            t0 = time.perf_counter()
            report = matmul.drive(acc, n)
            times.append(time.perf_counter() - t0)
            counts = report.task_counts
            if c.tobytes() != oracle.tobytes():
                ok = False
                bad = int(np.count_nonzero(c != oracle))
                detail = f"rep {rep}: {bad} of {c.size} cells differ"
        acc_mean = _mean(times)
        rows.append(BenchResult("matmul", n, w, seq_mean, acc_mean,
                                _ratio(seq_mean, acc_mean), ok, detail,
                                seq_times=tuple(seq_times),
                                acc_times=tuple(times), task_counts=counts))
    return rows


def _run_mandel(cfg: BenchConfig) -> list[BenchResult]:
    size = _size(cfg)
    regions = sorted(mandel.REGIONS) if cfg.region == "all" else [cfg.region]
    warm_kernels()
    limits = [mandel.pass_limit(p) for p in range(1, cfg.passes + 1)]
    rows = []
    for region in regions:
        oracle = [mandel.render_seq(region, size, lim) for lim in limits]
        seq_times = []
        for _ in range(cfg.reps):
            t = 0.0
            for lim in limits:
                t0 = time.perf_counter()
                mandel.render_seq(region, size, lim)
                t += time.perf_counter() - t0
            seq_times.append(t)
        seq_mean = _mean(seq_times)
        for w in cfg.workers:
            times, ok, detail, counts = [], True, "", {}
            for rep in range(cfg.reps):
                acc, img, ims = mandel.build_accelerator(region, size,
                                                         _farm_cfg(cfg, w))
                t = 0.0
                try:
                    for p, lim in enumerate(limits, start=1):
                        t0 = time.perf_counter()
                        mandel.render_pass(acc, img, ims, lim)
                        t += time.perf_counter() - t0
                        want = oracle[p - 1]
                        if img.tobytes() != want.tobytes():
                            ok = False
                            bad = int(np.count_nonzero(img != want))
                            detail = (f"{region} rep {rep} pass {p}: "
                                      f"{bad} of {img.size} pixels differ")
                    counts = acc.report().task_counts
                finally:
                    acc.close()
                times.append(t)
            acc_mean = _mean(times)
            rows.append(BenchResult(f"mandel:{region}", size, w, seq_mean,
                                    acc_mean, _ratio(seq_mean, acc_mean),
                                    ok, detail, seq_times=tuple(seq_times),
                                    acc_times=tuple(times),
                                    task_counts=counts))
    return rows


def _run_nqueens(cfg: BenchConfig) -> list[BenchResult]:
    n = _size(cfg)
    if not 1 <= cfg.depth < n:
        raise ValueError(f"cutoff depth must be in [1, {n - 1}], got {cfg.depth}")
    warm_kernels()
    oracle = nqueens.nqueens_seq(n)
    seq_times = []
    for _ in range(cfg.reps):
        t0 = time.perf_counter()
        nqueens.nqueens_seq(n)
        seq_times.append(time.perf_counter() - t0)
    seq_mean = _mean(seq_times)
    rows = []
    for w in cfg.workers:
        times, ok, detail, counts = [], True, "", {}
        for rep in range(cfg.reps):
            acc, totals = nqueens.prepare_acc(n, _farm_cfg(cfg, w))
            t0 = time.perf_counter()
            _, report = nqueens.drive(acc, n, cfg.depth)
            times.append(time.perf_counter() - t0)
            counts = report.task_counts
            count = 2 * sum(totals)
            if count != oracle:
                ok = False
                detail = f"rep {rep}: counted {count}, expected {oracle}"
        acc_mean = _mean(times)
        rows.append(BenchResult("nqueens", n, w, seq_mean, acc_mean,
                                _ratio(seq_mean, acc_mean), ok, detail,
                                seq_times=tuple(seq_times),
                                acc_times=tuple(times), task_counts=counts))
    return rows


def _run_spsc(cfg: BenchConfig) -> list[BenchResult]:
    cap = cfg.queue_cap if cfg.queue_cap is not None else _DEFAULT_SPSC_CAP
    n_tokens = _size(cfg)
    res = run_spsc_bench(capacity=cap, n_tokens=n_tokens, reps=cfg.reps)
    detail = "" if res["verified"] else "token sequence broke FIFO order"
    return [BenchResult("spsc", n_tokens, 2, res["lock_mean"],
                        res["spsc_mean"], res["speedup"], res["verified"],
                        detail, seq_times=tuple(res["lock_times"]),
                        acc_times=tuple(res["spsc_times"]))]


_RUNNERS = {
    "matmul": _run_matmul,
    "mandel": _run_mandel,
    "nqueens": _run_nqueens,
    "spsc": _run_spsc,
}


def run_bench(cfg: BenchConfig) -> list[BenchResult]:
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    rows: list[BenchResult] = []
    for s in suites:
        sub = replace(cfg, suite=s) if cfg.suite == "all" else cfg
        rows.extend(_RUNNERS[s](sub))
    return rows


def failures(results) -> list[str]:
    return [f"{r.benchmark} size={r.size} workers={r.workers}: "
            f"{r.detail or 'result mismatch'}"
            for r in results if not r.verified]


def emit(results, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(COLUMNS)
        for r in results:
            writer.writerow(r.row())
        return buf.getvalue()
    if fmt == "md":
        lines = ["| " + " | ".join(COLUMNS) + " |",
                 "|" + "|".join(" --- " for _ in COLUMNS) + "|"]
        for r in results:
            lines.append("| " + " | ".join(str(v) for v in r.row()) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose csv or md")

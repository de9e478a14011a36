"""Benchmark-layer tests: kernels against hand oracles, workload
correctness at small sizes, and the harness timing/verification protocol.
"""

import csv
import io

import numpy as np
import pytest

from taskfarm.accelerator import AcceleratorConfig
from taskfarm.bench import mandel, matmul, nqueens
from taskfarm.bench.harness import (COLUMNS, BenchConfig, BenchResult, emit,
                                    failures, run_bench)
from taskfarm.bench.kernels import mandel_row, queens_count
from taskfarm.bench.spsc_bench import LockQueue, run_spsc_bench
from taskfarm.spsc import EMPTY

CFG2 = AcceleratorConfig(n_workers=2, queue_capacity=64)


# --------------------------------------------------------------------------
# kernels


def test_mandel_row_interior_point_hits_limit():
    out = np.zeros(1, np.uint32)
    mandel_row(out, 1, 0.0, 1.0, 0.0, 50)  # c = 0 never escapes
    assert out[0] == 50


def test_mandel_row_far_point_escapes_first_iteration():
    out = np.zeros(1, np.uint32)
    mandel_row(out, 1, 2.0, 1.0, 2.0, 50)  # |z1| = |c| = 2*sqrt(2) > 2
    assert out[0] == 1


def test_mandel_row_escape_is_one_based_and_monotone_with_re():
    # Points on the real axis just outside the set escape later as they
    # approach the boundary from the right.
    out = np.zeros(4, np.uint32)
    mandel_row(out, 4, 0.26, 0.25, 0.0, 1000)  # re = 0.26, 0.51, 0.76, 1.01
    assert all(out[i] >= out[i + 1] for i in range(3))
    assert out[3] >= 1


def test_queens_count_full_mask_matches_known_totals():
    for n, want in [(4, 2), (5, 10), (6, 4), (8, 92)]:
        assert queens_count(n, 0, 0, 0, (1 << n) - 1) == want


def test_queens_count_completed_placement_counts_once():
    n = 5
    assert queens_count(n, (1 << n) - 1, 0, 0, 0) == 1


def test_queens_count_empty_mask_means_no_candidates():
    assert queens_count(6, 0, 0, 0, 0) == 0


# --------------------------------------------------------------------------
# nqueens workload


def test_brute_force_known_values():
    assert nqueens.brute_force_count(4) == 2
    assert nqueens.brute_force_count(5) == 10
    assert nqueens.brute_force_count(6) == 4


def test_brute_force_rejects_large_boards():
    with pytest.raises(ValueError):
        nqueens.brute_force_count(13)


@pytest.mark.parametrize("n", range(4, 10))
def test_seq_matches_brute_force(n):
    assert nqueens.nqueens_seq(n) == nqueens.brute_force_count(n)


def test_seq_known_values():
    assert nqueens.nqueens_seq(8) == 92
    assert nqueens.nqueens_seq(10) == 724
    assert nqueens.nqueens_seq(12) == 14200


def test_board_size_bounds():
    for bad in (3, 25):
        with pytest.raises(ValueError):
            nqueens.nqueens_seq(bad)
        with pytest.raises(ValueError):
            nqueens.gen_tasks(bad, 2)


def test_depth_bounds():
    with pytest.raises(ValueError):
        nqueens.gen_tasks(8, 0)
    with pytest.raises(ValueError):
        nqueens.gen_tasks(8, 8)


def test_depth_one_ships_whole_search():
    assert len(nqueens.gen_tasks(8, 1)) == 1   # even: half-board root
    assert len(nqueens.gen_tasks(9, 1)) == 2   # odd: plus centre branch


def test_task_frontier_is_deterministic():
    assert nqueens.gen_tasks(10, 3) == nqueens.gen_tasks(10, 3)


def test_task_count_grows_with_depth():
    counts = [len(nqueens.gen_tasks(10, d)) for d in (1, 2, 3, 4)]
    assert counts == sorted(counts) and counts[0] < counts[-1]


def test_tasks_partition_the_search():
    # Finishing every frontier subtree sequentially must reproduce the
    # half-board total exactly, at any cutoff.
    n = 9
    for depth in (1, 2, 4):
        total = sum(queens_count(n, t.cols, t.ld, t.rd, t.mask)
                    for t in nqueens.gen_tasks(n, depth))
        assert 2 * total == nqueens.nqueens_seq(n)


@pytest.mark.parametrize("depth", [1, 2, 5])
def test_acc_matches_seq(depth):
    count, n_tasks, report = nqueens.nqueens_acc(10, depth, CFG2)
    assert count == nqueens.nqueens_seq(10) == 724
    assert n_tasks == len(nqueens.gen_tasks(10, depth))
    assert not report.failed


# --------------------------------------------------------------------------
# matmul workload


def test_generate_inputs_deterministic_per_seed():
    a1, b1 = matmul.generate_inputs(16, 3)
    a2, b2 = matmul.generate_inputs(16, 3)
    a3, _ = matmul.generate_inputs(16, 4)
    assert a1.tobytes() == a2.tobytes() and b1.tobytes() == b2.tobytes()
    assert a1.tobytes() != a3.tobytes()


def test_matmul_seq_matches_numpy_rowwise():
    a, b = matmul.generate_inputs(24, 0)
    got = matmul.matmul_seq_on(a, b)
    for i in range(24):
        assert got[i].tobytes() == (a[i] @ b).tobytes()


def test_matmul_identity_sanity():
    a, _ = matmul.generate_inputs(16, 5)
    assert np.allclose(matmul.matmul_seq_on(a, np.eye(16)), a)


@pytest.mark.parametrize("workers", [1, 2, 3])
def test_matmul_acc_bit_identical(workers):
    cfg = AcceleratorConfig(n_workers=workers, queue_capacity=64)
    oracle = matmul.matmul_seq(48, 9)
    got, report = matmul.matmul_acc(48, 9, cfg)
    assert got.tobytes() == oracle.tobytes()
    assert not report.failed
    assert sum(report.task_counts.values()) == 48


# --------------------------------------------------------------------------
# mandel workload


def test_pass_limit_doubles_from_256():
    assert [mandel.pass_limit(p) for p in (1, 2, 3, 6)] == [256, 512, 1024, 8192]
    with pytest.raises(ValueError):
        mandel.pass_limit(0)


def test_region_table_names():
    assert set(mandel.REGIONS) == {"base", "wreath", "two_helix", "broccoli"}


def test_unknown_region_rejected():
    with pytest.raises(ValueError):
        mandel.render_seq("nope", 8, 16)


def test_render_seq_deterministic():
    one = mandel.render_seq("base", 24, 64)
    two = mandel.render_seq("base", 24, 64)
    assert one.dtype == np.uint32
    assert one.tobytes() == two.tobytes()


def test_render_values_bounded_by_limit():
    img = mandel.render_seq("base", 24, 64)
    assert img.min() >= 1 and img.max() <= 64
    assert (img == 64).any()          # interior pixels exist in the base view
    img = mandel.render_seq("broccoli", 24, 64)
    assert img.max() <= 2             # exterior field escapes immediately


def test_render_acc_byte_identical_each_pass():
    frames, report = mandel.render_acc("two_helix", 32, 3, CFG2)
    assert len(frames) == 3
    for p, frame in enumerate(frames, start=1):
        want = mandel.render_seq("two_helix", 32, mandel.pass_limit(p))
        assert frame.tobytes() == want.tobytes()
    assert not report.failed


# --------------------------------------------------------------------------
# spsc bench


def test_lock_queue_fifo_and_empty_rejection():
    q = LockQueue(8)
    assert not q.push(EMPTY)
    for i in range(5):
        assert q.push(i)
    assert [q.pop() for _ in range(5)] == list(range(5))


def test_lock_queue_capacity_validation():
    with pytest.raises(ValueError):
        LockQueue(1)


def test_run_spsc_bench_small():
    res = run_spsc_bench(capacity=16, n_tokens=2000, reps=1)
    assert res["verified"]
    assert res["lock_mean"] > 0 and res["spsc_mean"] > 0


# --------------------------------------------------------------------------
# harness


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(suite="bogus")
    with pytest.raises(ValueError):
        BenchConfig(suite="all", size=100)
    with pytest.raises(ValueError):
        BenchConfig(suite="matmul", size=0)
    with pytest.raises(ValueError):
        BenchConfig(suite="matmul", workers=())
    with pytest.raises(ValueError):
        BenchConfig(suite="matmul", workers=(0,))
    with pytest.raises(ValueError):
        BenchConfig(suite="matmul", queue_cap=1)
    with pytest.raises(ValueError):
        BenchConfig(suite="mandel", region="atlantis")
    with pytest.raises(ValueError):
        BenchConfig(suite="matmul", reps=0)
    with pytest.raises(ValueError):
        BenchConfig(suite="mandel", passes=0)


def test_run_bench_matmul_rows():
    cfg = BenchConfig(suite="matmul", size=32, workers=(1, 2), reps=1)
    rows = run_bench(cfg)
    assert [(r.benchmark, r.size, r.workers) for r in rows] == \
        [("matmul", 32, 1), ("matmul", 32, 2)]
    assert all(r.verified for r in rows)
    assert all(r.seq_mean > 0 and r.acc_mean > 0 for r in rows)


def test_run_bench_mandel_single_region():
    cfg = BenchConfig(suite="mandel", size=24, workers=(2,), reps=1,
                      passes=2, region="broccoli")
    rows = run_bench(cfg)
    assert [r.benchmark for r in rows] == ["mandel:broccoli"]
    assert rows[0].verified


def test_run_bench_nqueens_depth_checked_against_size():
    with pytest.raises(ValueError):
        run_bench(BenchConfig(suite="nqueens", size=5, depth=7, reps=1))


def test_emit_csv_round_trips():
    rows = [BenchResult("matmul", 32, 2, 0.5, 0.25, 2.0, True)]
    text = emit(rows, "csv")
    assert "\r\n" in text
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == list(COLUMNS)
    assert parsed[1] == ["matmul", "32", "2", "0.5", "0.25", "2", "true"]


def test_emit_markdown_table():
    rows = [BenchResult("nqueens", 10, 4, 1.0, 0.5, 2.0, False, "boom")]
    text = emit(rows, "md")
    lines = text.splitlines()
    assert lines[0].startswith("| benchmark |")
    assert set(lines[1].replace("|", "").split()) == {"---"}
    assert "| false |" in lines[2]


def test_emit_rejects_unknown_format():
    with pytest.raises(ValueError):
        emit([], "xml")


def test_failures_summarises_unverified_rows():
    rows = [BenchResult("matmul", 32, 2, 1.0, 1.0, 1.0, True),
            BenchResult("nqueens", 10, 4, 1.0, 1.0, 1.0, False, "off by 2")]
    msgs = failures(rows)
    assert len(msgs) == 1
    assert "nqueens" in msgs[0] and "off by 2" in msgs[0]

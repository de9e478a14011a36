"""N-queens solution counting with bitboard search and half-board mirroring.

Column sets are bitmasks; the recursive step for the next row is the
standard triple ``(cols|bit, ((ld|bit)<<1) & full, (rd|bit)>>1)``.  The
board's left-right symmetry halves the work: restrict row 0 to the left
half of the columns and double the count, and for odd n add the
centre-column branch once (its own subtree is again symmetric, so it is
counted with a half-width restriction on row 1).

The accelerated variant splits the search at a fixed cutoff depth: the
host enumerates every partial placement of the first (depth-1) rows and
offloads one task per frontier node; the worker finishes the subtree with
the same kernel the sequential variant uses, so the totals agree exactly.
Each task carries the diagonal state plus the column restriction that
applied to the row about to be placed, which is what makes frontier
emission at ``placed >= depth - 1`` correct for both the half-board row 0
and the odd-centre row-1 restriction.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..accelerator import Accelerator, AcceleratorConfig
from ..skeletons import Farm, NodeBehavior
from .kernels import queens_count

MIN_N = 4
MAX_N = 24


def _check_n(n: int) -> None:
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"board size must be in [{MIN_N}, {MAX_N}], got {n}")


def brute_force_count(n: int) -> int:
    """Naive full-board reference (no symmetry, no bit tricks); n <= 12."""
    if n > 12:
        raise ValueError("brute force reference is limited to n <= 12")
    count = 0
    cols: list[int] = []

    def place(row: int) -> None:
        nonlocal count
        if row == n:
            count += 1
            return
        for c in range(n):
            if all(c != pc and abs(c - pc) != row - pr
                   for pr, pc in enumerate(cols)):
                cols.append(c)
                place(row + 1)
                cols.pop()

    place(0)
    return count


def _half_masks(n: int):
    full = (1 << n) - 1
    half = (1 << (n // 2)) - 1
    centre = (1 << (n // 2)) if n % 2 else 0
    return full, half, centre


def nqueens_seq(n: int) -> int:
    _check_n(n)
    full, half, centre = _half_masks(n)
    total = queens_count(n, 0, 0, 0, half)
    if centre:
        total += queens_count(n, centre, (centre << 1) & full, centre >> 1, half)
    return 2 * total


@dataclass(frozen=True)
class QueensTask:
    cols: int
    ld: int
    rd: int
    mask: int  # candidate-column mask for the next row (full width if free)


def gen_tasks(n: int, depth: int) -> list[QueensTask]:
    """Frontier tasks for the half-board search (pre-mirroring).

    Placing ``depth - 1`` rows on the host and shipping the rest keeps
    task records small while the subtree below is large enough to amortise
    queue traffic; the count of tasks grows with both n and depth.
    """
    _check_n(n)
    if not 1 <= depth < n:
        raise ValueError(f"cutoff depth must be in [1, {n - 1}], got {depth}")
    full, half, centre = _half_masks(n)
    tasks: list[QueensTask] = []

    def expand(cols: int, ld: int, rd: int, mask: int, placed: int) -> None:
        if placed >= depth - 1:
            tasks.append(QueensTask(cols, ld, rd, mask))
            return
        avail = ~(cols | ld | rd) & full & mask
        while avail:
            bit = avail & (-avail)
            avail &= avail - 1
            expand(cols | bit, ((ld | bit) << 1) & full, (rd | bit) >> 1,
                   full, placed + 1)

    expand(0, 0, 0, half, 0)
    if centre:
        expand(centre, (centre << 1) & full, centre >> 1, half, 1)
    return tasks


class _QueensWorker(NodeBehavior):
    """Accumulates subtree counts locally; folded into totals on finish."""

    def __init__(self, n: int, totals: list[int]) -> None:
        self._n = n
        self._totals = totals
        self._local = 0

    def svc(self, task: QueensTask):
        self._local += int(queens_count(self._n, task.cols, task.ld,
                                        task.rd, task.mask))
        return None

    def on_finish(self) -> None:
        self._totals.append(self._local)
        self._local = 0


def prepare_acc(n: int, cfg: AcceleratorConfig):
    """Plan the farm without starting threads; returns (accelerator, totals)."""
    _check_n(n)
    totals: list[int] = []
    farm = Farm(lambda: _QueensWorker(n, totals), n=cfg.n_workers,
                with_collector=False)
    return Accelerator(farm, cfg), totals


def drive(acc, n: int, depth: int):
    """The timed portion: frontier expansion, offload, drain to completion.

    Host-side task generation is deliberately inside: it is work the
    sequential variant does not do, so excluding it would flatter the
    accelerated numbers.
    """
    tasks = gen_tasks(n, depth)
    acc.run()
    for t in tasks:
        acc.offload(t)
    acc.offload_eos()
    report = acc.wait()
    return len(tasks), report


def nqueens_acc(n: int, depth: int, cfg: AcceleratorConfig):
    """Returns (count, n_tasks, report)."""
    acc, totals = prepare_acc(n, cfg)
    n_tasks, report = drive(acc, n, depth)
    return 2 * sum(totals), n_tasks, report

"""Row-decomposed matrix multiply with a farm accelerator.

The offloaded unit is one output row: the task record carries only the
row index (a copy of the loop variable), the worker reads the shared
read-only A and B and single-assigns C[i].  Because both variants compute
each row with the identical vector-matrix call, the accelerated result is
bit-identical to the sequential one — row decomposition does not reorder
any per-element arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..accelerator import Accelerator, AcceleratorConfig
from ..skeletons import Farm, NodeBehavior


@dataclass(frozen=True)
class MatmulTask:
    i: int  # output row index


def generate_inputs(n: int, seed: int):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    return a, b


def _row(a, b, i, out):
    out[i] = a[i] @ b


def matmul_seq(n: int, seed: int) -> np.ndarray:
    a, b = generate_inputs(n, seed)
    return matmul_seq_on(a, b)


def matmul_seq_on(a, b) -> np.ndarray:
    n = a.shape[0]
    c = np.empty((n, b.shape[1]), dtype=np.result_type(a, b))
    for i in range(n):
        _row(a, b, i, c)
    return c


class _RowWorker(NodeBehavior):
    def __init__(self, a, b, c):
        self._a = a
        self._b = b
        self._c = c

    def svc(self, task):
        _row(self._a, self._b, task.i, self._c)
        return None  # collector-less: C is written in place


def prepare_acc(a, b, cfg: AcceleratorConfig):
    """Plan the farm without starting threads; returns (accelerator, C)."""
    n = a.shape[0]
    c = np.empty((n, b.shape[1]), dtype=np.result_type(a, b))
    farm = Farm(lambda: _RowWorker(a, b, c), n=cfg.n_workers, with_collector=False)
    return Accelerator(farm, cfg), c


def drive(acc, n_rows: int):
    """The timed portion: start, offload every row, drain to completion."""
    acc.run()
    for i in range(n_rows):
        acc.offload(MatmulTask(i))
    acc.offload_eos()
    return acc.wait()


def matmul_acc(n: int, seed: int, cfg: AcceleratorConfig):
    a, b = generate_inputs(n, seed)
    return matmul_acc_on(a, b, cfg)


def matmul_acc_on(a, b, cfg: AcceleratorConfig):
    acc, c = prepare_acc(a, b, cfg)
    report = drive(acc, a.shape[0])
    return c, report

"""Numba kernels for the benchmark workloads.

Both kernels are compiled ``nogil`` so farm workers achieve real
parallelism on multi-core hosts: the interpreter lock is released for
the duration of a row render or a subtree count.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def mandel_row(out, width, re0, dre, im, limit):
    """Escape-time render of one pixmap row.

    Pixel value is the iteration index (1-based) at which |z| exceeds 2,
    or ``limit`` when the point never escapes within the budget.
    """
    for x in range(width):
        cre = re0 + x * dre
        zre = 0.0
        zim = 0.0
        k = limit
        for it in range(1, limit + 1):
            t = zre * zre - zim * zim + cre
            zim = 2.0 * zre * zim + im
            zre = t
            if zre * zre + zim * zim > 4.0:
                k = it
                break
        out[x] = k


@njit(nogil=True, cache=True)
def queens_count(n, cols0, ld0, rd0, mask0):
    """Count completions of a partial placement by bitmask backtracking.

    cols0/ld0/rd0 are the occupied-column and diagonal masks of the rows
    already placed; mask0 restricts the candidate squares of the *next*
    row only (used for the half-board symmetry cut and for the
    centre-column branch of odd boards).  Rows after that are
    unrestricted.
    """
    full = (1 << n) - 1
    if cols0 == full:
        return 1
    avail = np.empty(n + 1, np.int64)
    cols_s = np.empty(n + 1, np.int64)
    ld_s = np.empty(n + 1, np.int64)
    rd_s = np.empty(n + 1, np.int64)
    sp = 0
    cols_s[0] = cols0
    ld_s[0] = ld0
    rd_s[0] = rd0
    avail[0] = ~(cols0 | ld0 | rd0) & full & mask0
    count = 0
    while sp >= 0:
        a = avail[sp]
        if a == 0:
            sp -= 1
            continue
        bit = a & (-a)
        avail[sp] = a & (a - 1)
        c = cols_s[sp] | bit
        if c == full:
            count += 1
            continue
        l = ((ld_s[sp] | bit) << 1) & full
        r = (rd_s[sp] | bit) >> 1
        sp += 1
        cols_s[sp] = c
        ld_s[sp] = l
        rd_s[sp] = r
        avail[sp] = ~(c | l | r) & full
    return count


def warm_kernels():
    """Trigger JIT compilation outside any timed region."""
    row = np.zeros(4, np.uint32)
    mandel_row(row, 4, -2.0, 1.0, 0.0, 16)
    queens_count(5, 0, 0, 0, (1 << 5) - 1)

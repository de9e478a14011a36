"""Multi-pass Mandelbrot renders over regions of varying iteration balance.

Each pass p renders the full pixmap at iteration limit 256 * 2**(p-1); a
task is one image row (index, imaginary coordinate, limit).  The farm is
built once and re-armed with run_then_freeze for every pass, so the
per-pass cost measures steady-state dispatch rather than thread start-up.

The four regions span roughly three orders of magnitude in total escape
work and in how that work reacts to deeper limits:

* ``base`` — the classic full-set view; interior rows keep iterating to
  the limit, so total work roughly doubles each pass (heaviest).
* ``wreath`` — a ring of filaments around a minibrot; strong row-to-row
  imbalance, work grows steeply with depth.
* ``two_helix`` — seahorse-valley spirals; moderate work that saturates
  after a few passes.
* ``broccoli`` — exterior escape-in-one-step field; every pixel leaves
  immediately, so work is flat and tiny regardless of limit (lightest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..accelerator import Accelerator, AcceleratorConfig
from ..skeletons import Farm, NodeBehavior
from .kernels import mandel_row

# name -> (re_lo, re_hi, im_lo, im_hi)
REGIONS = {
    "base": (-2.25, 0.75, -1.5, 1.5),
    "wreath": (-1.80, -1.72, -0.04, 0.04),
    "two_helix": (-0.7474, -0.7432, 0.1106, 0.1148),
    "broccoli": (1.95, 2.05, -0.05, 0.05),
}

BASE_LIMIT = 256


def pass_limit(p: int) -> int:
    if p < 1:
        raise ValueError("pass index is 1-based")
    return BASE_LIMIT << (p - 1)


@dataclass(frozen=True)
class RowTask:
    y: int
    im: float
    limit: int


def _grid(region: str, width: int, height: int):
    try:
        re_lo, re_hi, im_lo, im_hi = REGIONS[region]
    except KeyError:
        raise ValueError(f"unknown region {region!r}; choose from {sorted(REGIONS)}")
    dre = (re_hi - re_lo) / width
    dim = (im_hi - im_lo) / height
    # sample pixel centres so both edges are treated symmetrically
    re0 = re_lo + 0.5 * dre
    ims = im_lo + (np.arange(height) + 0.5) * dim
    return re0, dre, ims


def render_seq(region: str, size: int, limit: int) -> np.ndarray:
    re0, dre, ims = _grid(region, size, size)
    img = np.empty((size, size), dtype=np.uint32)
    for y in range(size):
        mandel_row(img[y], size, re0, dre, ims[y], limit)
    return img


class _MandelWorker(NodeBehavior):
    def __init__(self, img, re0, dre):
        self._img = img
        self._re0 = re0
        self._dre = dre

    def svc(self, task):
        row = self._img[task.y]
        mandel_row(row, row.shape[0], self._re0, self._dre, task.im, task.limit)
        return None


def build_accelerator(region: str, size: int, cfg: AcceleratorConfig):
    """One farm reused across passes; returns (accelerator, img, ims)."""
    re0, dre, ims = _grid(region, size, size)
    img = np.empty((size, size), dtype=np.uint32)
    farm = Farm(lambda: _MandelWorker(img, re0, dre), n=cfg.n_workers,
                with_collector=False)
    return Accelerator(farm, cfg), img, ims


def render_pass(acc, img, ims, limit: int) -> None:
    """Run one full-frame pass on an accelerator in Created/Frozen state."""
    acc.run_then_freeze()
    for y in range(img.shape[0]):
        acc.offload(RowTask(y, float(ims[y]), limit))
    acc.offload_eos()
    acc.wait_freezing()


def render_acc(region: str, size: int, passes: int, cfg: AcceleratorConfig):
    """Render all passes; returns (list of per-pass images, report)."""
    acc, img, ims = build_accelerator(region, size, cfg)
    frames = []
    try:
        for p in range(1, passes + 1):
            render_pass(acc, img, ims, pass_limit(p))
            frames.append(img.copy())
        report = acc.report()
    finally:
        acc.close()
    return frames, report

#!/usr/bin/env python3
"""Walkthrough of the offload pattern on a toy workload.

Starts a farm accelerator on spare cores, streams squares through it,
then shows a freeze/resume cycle reusing the same threads (and their
worker-local state) for a second stream.
"""

import time
from collections import Counter

from taskfarm import (Accelerator, AcceleratorConfig, Farm, NodeBehavior)


class SquareWorker(NodeBehavior):
    """Pure map plus a little local state to make freeze cycles visible."""

    def __init__(self):
        self.served = 0

    def svc(self, x):
        self.served += 1
        return x * x

    def on_finish(self):
        print(f"    worker retiring after {self.served} tasks total")


def drive(acc, items):
    """Offload while draining: never let the exit queue apply backpressure."""
    got = []
    for item in items:
        acc.offload(item)
        while (r := acc.load_result()) is not None:
            got.append(r)
    acc.offload_eos()
    while (r := acc.load_result_blocking()) is not None:
        got.append(r)
    return got


def main():
    cfg = AcceleratorConfig(n_workers=4, queue_capacity=64)
    acc = Accelerator(Farm(SquareWorker, n=4), cfg)
    print(f"plan: {len(acc.plan.threads)} threads, "
          f"{len(acc.plan.queues)} internal queues")

    print("cycle 1: run_then_freeze, stream 0..99")
    acc.run_then_freeze()
    t0 = time.perf_counter()
    got = drive(acc, range(100))
    acc.wait_freezing()
    print(f"    {len(got)} results in {time.perf_counter() - t0:.3f}s, "
          f"multiset ok: {Counter(got) == Counter(x * x for x in range(100))}")
    print(f"    state: {acc.state.name} (threads parked, zero cpu)")

    print("cycle 2: resume the same threads, stream 100..199")
    acc.run_then_freeze()
    got = drive(acc, range(100, 200))
    acc.wait_freezing()
    print(f"    {len(got)} results, workers kept their counters")

    print("per-role task counts:", dict(sorted(acc.report().task_counts.items())))
    acc.close()
    print(f"closed: {acc.state.name}")


if __name__ == "__main__":
    main()

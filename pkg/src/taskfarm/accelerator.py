"""Self-offloading accelerator facade over a lowered skeleton plan.

An accelerator wraps a skeleton graph as a software device with one
untyped input stream and (with a collector) one untyped output stream.
Ordinary sequential code creates it, runs it, offloads tasks, and either
waits for termination or freezes it between bursts:

    Created --run/run_then_freeze--> Running --offload_eos--> Draining
    Draining --wait--> Terminated            (plain run mode)
    Draining --wait_freezing--> Frozen       (run_then_freeze mode)
    Frozen --run/run_then_freeze--> Running  (worker state preserved)
    any --close--> Terminated

While Frozen every accelerator thread is parked on a latch at the host
scheduler level and consumes no CPU.  Worker-local state lives in the
behavior instances, which persist across freeze cycles (but not across
``add_workers``, which re-lowers the plan).

Thread management is pluggable through a small backend object so the
lifecycle state machine can be exercised exhaustively without spawning
OS threads (see ``StubBackend``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .runtime import (BackoffPolicy, DEFAULT_SPIN_BUDGET, FreezeLatch,
                      backoff_step, logical_core_count, plan_core_map,
                      spawn_pinned, thaw_all, wait_all_parked)
from .skeletons import Farm, WiringPlan, lower, validate
from .spsc import EMPTY, EOS


class State(enum.Enum):
    CREATED = "created"
    RUNNING = "running"
    DRAINING = "draining"
    FROZEN = "frozen"
    TERMINATED = "terminated"


class StateError(RuntimeError):
    """Operation not legal in the handle's current lifecycle state."""


class CapabilityError(RuntimeError):
    """Operation requires a capability this accelerator was not built with."""


@dataclass(frozen=True)
class AcceleratorConfig:
    n_workers: int = 4
    queue_capacity: int = 64
    cores: tuple | None = None  # explicit pin targets, wrapped modulo length
    blocking_offload: bool = True
    spin_budget: int = DEFAULT_SPIN_BUDGET

    def __post_init__(self):
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")
        if self.queue_capacity <= 1:
            raise ValueError("queue_capacity must be > 1")
        if self.spin_budget < 0:
            raise ValueError("spin_budget must be >= 0")

    def backoff_policy(self) -> BackoffPolicy:
        return BackoffPolicy(spin_budget=self.spin_budget)


@dataclass
class RunReport:
    task_counts: dict = field(default_factory=dict)
    faults: list = field(default_factory=list)
    failed: bool = False


class ThreadBackend:
    """Real backend: OS threads, pinning, freeze latches."""

    def spawn(self, body, core, name):
        return spawn_pinned(body, core, name)

    def join(self, handle, timeout=None):
        handle.join(timeout)

    def alive(self, handle) -> bool:
        return handle.is_alive()

    def wait_parked(self, latches, timeout=None) -> bool:
        return wait_all_parked(latches, timeout)

    def thaw(self, latches):
        thaw_all(latches)

    def release(self, latches):
        for latch in latches:
            latch.release_for_exit()


class StubBackend:
    """Records spawns without starting threads.

    Lets the lifecycle state machine be model-checked over every short
    operation sequence at interpreter speed; data never flows.
    """

    def __init__(self):
        self.spawned = []

    def spawn(self, body, core, name):
        self.spawned.append(name)
        return name

    def join(self, handle, timeout=None):
        pass

    def alive(self, handle) -> bool:
        return False

    def wait_parked(self, latches, timeout=None) -> bool:
        return True

    def thaw(self, latches):
        pass

    def release(self, latches):
        pass


class Accelerator:
    """Handle for one accelerator device.

    One external thread offloads (producer of the entry queue), one —
    possibly the same — consumes results.  Control calls must come from a
    single controlling thread at a time.
    """

    def __init__(self, graph, config: AcceleratorConfig | None = None,
                 backend=None):
        cfg = config or AcceleratorConfig()
        errs = validate(graph)
        if errs:
            raise ValueError("invalid skeleton graph: " + "; ".join(errs))
        if cfg.cores:
            topo = logical_core_count()
            bad = [c for c in cfg.cores if not 0 <= c < topo]
            if bad:
                raise ValueError(f"core list references nonexistent cores {bad} "
                                 f"(host has {topo})")
        self._graph = graph
        self._cfg = cfg
        self._backend = backend or ThreadBackend()
        self._host_backoff = BackoffPolicy(spin_budget=cfg.spin_budget,
                                           park_after=True)
        self._state = State.CREATED
        self._freeze_armed = False
        self._threads = []
        self._latches = []
        self._exit_eos_seen = False
        self._relower()

    # -- introspection ----------------------------------------------------

    @property
    def state(self) -> State:
        return self._state

    @property
    def plan(self) -> WiringPlan:
        return self._plan

    @property
    def output_done(self) -> bool:
        """True once EOS has been observed on the exit endpoint."""
        return self._exit_eos_seen

    def _relower(self):
        self._plan = lower(self._graph, self._cfg.queue_capacity,
                           backoff=self._cfg.backoff_policy())
        roles = [t.role for t in self._plan.threads]
        if self._cfg.cores:
            cores = list(self._cfg.cores)
            self._core_for = {r: cores[i % len(cores)] for i, r in enumerate(roles)}
        else:
            self._core_for = plan_core_map(roles).assignments

    # -- lifecycle --------------------------------------------------------

    def _require(self, *states):
        if self._state not in states:
            raise StateError(f"operation requires state in "
                             f"{[s.value for s in states]}, handle is "
                             f"{self._state.value}")

    def _spawn_all(self):
        self._latches = [FreezeLatch() for _ in self._plan.threads]
        self._threads = []
        for planned, latch in zip(self._plan.threads, self._latches):
            def main(planned=planned, latch=latch):
                while True:
                    planned.body()  # serve one stream to EOS
                    if not self._freeze_armed:
                        return
                    if not latch.freeze_point():
                        return
            self._threads.append(self._backend.spawn(
                main, self._core_for.get(planned.role), f"taskfarm:{planned.role}"))

    def _start(self, freeze: bool):
        self._require(State.CREATED, State.FROZEN)
        self._freeze_armed = freeze
        self._exit_eos_seen = False
        if not self._threads:
            self._spawn_all()
        else:
            self._backend.thaw(self._latches)
        self._state = State.RUNNING

    def run(self):
        """Start (or resume) accepting tasks; threads exit after EOS."""
        self._start(freeze=False)

    def run_then_freeze(self):
        """Start (or resume) accepting tasks; threads park after EOS."""
        self._start(freeze=True)

    # -- streaming --------------------------------------------------------

    def offload(self, task) -> bool:
        """Push one task.  Blocking mode retries with backoff until accepted;
        non-blocking mode reports backpressure as False."""
        self._require(State.RUNNING)
        if task is EMPTY or task is EOS:
            raise ValueError("reserved marker cannot be offloaded")
        entry = self._plan.entry
        if not self._cfg.blocking_offload:
            return entry.push(task)
        attempt = 0
        while not entry.push(task):
            backoff_step(self._host_backoff, attempt)
            attempt += 1
        return True

    def offload_eos(self):
        """Close the input stream; the accelerator begins draining."""
        self._require(State.RUNNING)
        entry = self._plan.entry
        attempt = 0
        while not entry.push(EOS):
            backoff_step(self._host_backoff, attempt)
            attempt += 1
        self._state = State.DRAINING

    def load_result(self):
        """Non-blocking pop of the exit stream; None when nothing is ready
        (or the stream has ended — check ``output_done``)."""
        self._check_exit()
        if self._exit_eos_seen:
            return None
        item = self._plan.exit.pop()
        if item is EMPTY:
            return None
        if item is EOS:
            self._exit_eos_seen = True
            return None
        return item

    def load_result_blocking(self):
        """Pop the exit stream, waiting with backoff; None only at stream end."""
        self._check_exit()
        attempt = 0
        while True:
            if self._exit_eos_seen:
                return None
            item = self._plan.exit.pop()
            if item is EOS:
                self._exit_eos_seen = True
                return None
            if item is not EMPTY:
                return item
            backoff_step(self._host_backoff, attempt)
            attempt += 1

    def _check_exit(self):
        if self._plan.exit is None:
            raise CapabilityError("accelerator was built without a collector; "
                                  "it has no output stream")
        self._require(State.RUNNING, State.DRAINING, State.FROZEN)

    # -- completion -------------------------------------------------------

    def wait(self) -> RunReport:
        """Join all threads after the stream completes (plain run mode)."""
        if self._freeze_armed:
            raise StateError("accelerator is in run_then_freeze mode; "
                             "use wait_freezing (or close to terminate)")
        self._require(State.DRAINING)
        for handle in self._threads:
            self._backend.join(handle)
        self._threads = []
        self._state = State.TERMINATED
        return self.report()

    def wait_freezing(self):
        """Block until EOS has propagated and every thread is parked."""
        if not self._freeze_armed:
            raise StateError("wait_freezing requires a run_then_freeze cycle")
        # Draining only: before offload_eos no EOS is in flight, so the
        # threads would never park and this call could not return.
        self._require(State.DRAINING)
        self._backend.wait_parked(self._latches)
        self._state = State.FROZEN

    def add_workers(self, k: int):
        """Widen a farm-rooted accelerator by k workers (next run).

        Re-lowers the plan: parked threads are retired first, and
        worker-local state does not survive (unlike plain freeze cycles).
        """
        self._require(State.CREATED, State.FROZEN)
        if not isinstance(self._graph, Farm):
            raise CapabilityError("add_workers requires a farm-rooted graph")
        if isinstance(self._graph.workers, list):
            raise CapabilityError("cannot widen a farm built from an explicit "
                                  "worker list; pass a factory instead")
        if k < 0:
            raise ValueError("k must be >= 0")
        if k == 0:
            return
        if self._threads:
            self._backend.release(self._latches)
            for handle in self._threads:
                self._backend.join(handle)
            self._threads = []
            self._latches = []
        self._graph.n += k
        self._relower()

    def report(self) -> RunReport:
        faults = list(self._plan.faults)
        return RunReport(task_counts=dict(self._plan.task_counts),
                         faults=faults, failed=bool(faults))

    def close(self):
        """Terminate from any state; idempotent.  Undrained results are lost."""
        if self._state is State.TERMINATED:
            return
        if self._state is State.CREATED or not self._threads:
            self._state = State.TERMINATED
            return
        if self._state is State.RUNNING:
            # Inject EOS so serving threads run off the end of the stream.
            entry = self._plan.entry
            attempt = 0
            while not entry.push(EOS):
                backoff_step(self._host_backoff, attempt)
                attempt += 1
        self._backend.release(self._latches)
        exit_q = self._plan.exit
        attempt = 0
        for handle in self._threads:
            while self._backend.alive(handle):
                # Keep the exit drained: a collector stuck pushing into a
                # full exit queue could otherwise never reach its EOS.
                if exit_q is not None:
                    while exit_q.pop() is not EMPTY:
                        pass
                self._backend.join(handle, 0.05)
            self._backend.join(handle)
        self._threads = []
        self._latches = []
        self._state = State.TERMINATED

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

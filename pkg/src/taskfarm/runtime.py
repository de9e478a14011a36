"""Thread lifecycle substrate: spawn, pinning, backoff waiting, freeze latches.

Everything that talks to the host scheduler lives here so the data-path
modules stay pure.  Three concerns:

* ``spawn_pinned`` starts a thread, optionally binds it to one logical
  core, and shrinks its timer slack so short sleeps actually are short.
  Pinning is advisory: failures are recorded as warnings, never fatal.
* ``BackoffPolicy``/``backoff_wait`` classify a retry attempt into
  spin / yield / park.  The spin phase touches no host-scheduler state at
  all; the yield phase sleeps for a geometrically growing sliver of time.
  A plain ``sleep(0)`` is *not* used: on an oversubscribed host the
  releasing thread tends to win the lock right back before the peer is
  scheduled, which turns a microsecond handoff into a full scheduler
  timeslice.  A tiny positive sleep forces the handoff.
* ``FreezeLatch`` parks a thread at a well-defined point until thawed,
  surviving spurious wakeups, with a generation counter so each thaw
  resumes each parked thread exactly once.

Environment overrides (read once at import):

* ``TASKFARM_SPIN_BUDGET`` -- default spin iterations before yielding.
* ``TASKFARM_NO_PIN`` -- any non-empty value disables core pinning.
"""

from __future__ import annotations

import ctypes
import enum
import logging
import os
import threading
import time
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

DEFAULT_SPIN_BUDGET = int(os.environ.get("TASKFARM_SPIN_BUDGET", "1000"))
_PIN_DISABLED = bool(os.environ.get("TASKFARM_NO_PIN", ""))

#: Warnings recorded by spawn_pinned when affinity could not be applied.
pin_warnings: list[str] = []
_pin_warnings_lock = threading.Lock()


class Action(enum.Enum):
    SPIN = "spin"
    YIELD = "yield"
    PARK = "park"


@dataclass(frozen=True)
class BackoffPolicy:
    """Spin-then-yield(-then-park) schedule for retry loops.

    park_after must stay False on threads inside a running accelerator:
    they only ever park at a freeze point, not in the data path.
    """

    spin_budget: int = DEFAULT_SPIN_BUDGET
    yield_budget: int = 64
    park_after: bool = False
    # Yield-phase sleep grows geometrically between these bounds so a
    # short stall costs microseconds while a long one backs off to
    # scheduler-friendly durations.
    yield_sleep_min_s: float = 2e-6
    yield_sleep_max_s: float = 200e-6
    park_sleep_s: float = 2e-3

    def __post_init__(self):
        if self.spin_budget < 0 or self.yield_budget < 0:
            raise ValueError("budgets must be >= 0")


def backoff_wait(policy: BackoffPolicy, attempt: int) -> Action:
    """Classify retry ``attempt`` (0-based) under ``policy``.  Pure."""
    if attempt < policy.spin_budget:
        return Action.SPIN
    if attempt < policy.spin_budget + policy.yield_budget:
        return Action.YIELD
    return Action.PARK if policy.park_after else Action.YIELD


def yield_duration(policy: BackoffPolicy, attempt: int) -> float:
    """Sleep length for a YIELD attempt.  Pure in (policy, attempt)."""
    k = attempt - policy.spin_budget
    if k < 0:
        k = 0
    dur = policy.yield_sleep_min_s * (2.0 ** min(k, 60))
    return dur if dur < policy.yield_sleep_max_s else policy.yield_sleep_max_s


def backoff_step(policy: BackoffPolicy, attempt: int) -> Action:
    """Execute one wait step: no-op for SPIN, timed sleep otherwise."""
    action = backoff_wait(policy, attempt)
    if action is Action.YIELD:
        time.sleep(yield_duration(policy, attempt))
    elif action is Action.PARK:
        time.sleep(policy.park_sleep_s)
    return action


# --------------------------------------------------------------------------
# Topology + pinning


def logical_core_count() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def physical_core_count() -> int:
    """Distinct (package, core) pairs; falls back to the logical count.

    Used to gate throughput assertions that are meaningless under SMT
    sharing or on single-core hosts.
    """
    pairs = set()
    try:
        for cpu in os.listdir("/sys/devices/system/cpu"):
            if not (cpu.startswith("cpu") and cpu[3:].isdigit()):
                continue
            topo = f"/sys/devices/system/cpu/{cpu}/topology"
            try:
                with open(f"{topo}/physical_package_id") as f:
                    pkg = f.read().strip()
                with open(f"{topo}/core_id") as f:
                    core = f.read().strip()
            except OSError:
                continue
            pairs.add((pkg, core))
    except OSError:
        pass
    return len(pairs) if pairs else logical_core_count()


def distinct_physical_cpus() -> list[int]:
    """One logical cpu id per distinct physical core, lowest id first.

    Lets latency-sensitive pairs (e.g. a producer/consumer throughput
    probe) avoid landing on two SMT siblings of the same core.  Falls
    back to the affinity set when topology files are unavailable.
    """
    chosen: dict = {}
    try:
        for cpu in os.listdir("/sys/devices/system/cpu"):
            if not (cpu.startswith("cpu") and cpu[3:].isdigit()):
                continue
            cpu_id = int(cpu[3:])
            topo = f"/sys/devices/system/cpu/{cpu}/topology"
            try:
                with open(f"{topo}/physical_package_id") as f:
                    pkg = f.read().strip()
                with open(f"{topo}/core_id") as f:
                    core = f.read().strip()
            except OSError:
                continue
            key = (pkg, core)
            if key not in chosen or cpu_id < chosen[key]:
                chosen[key] = cpu_id
    except OSError:
        pass
    if chosen:
        return sorted(chosen.values())
    avail = current_affinity()
    return sorted(avail) if avail else list(range(logical_core_count()))


@dataclass
class CoreMap:
    """Planned thread-role → logical-core assignment."""

    topology: int
    assignments: dict = field(default_factory=dict)


def plan_core_map(roles: list[str], topology: int | None = None) -> CoreMap:
    """Assign distinct cores in index order.

    When there are spare cores, core 0 is left to the host thread so the
    offloading program keeps a core of its own.
    """
    topo = topology if topology is not None else logical_core_count()
    offset = 1 if len(roles) < topo else 0
    cmap = CoreMap(topology=topo)
    for i, role in enumerate(roles):
        cmap.assignments[role] = (offset + i) % topo
    return cmap


_PR_SET_TIMERSLACK = 29


def reduce_timer_slack(ns: int = 1_000) -> bool:
    """Shrink this thread's timer slack (Linux) so microsecond sleeps work.

    The kernel default of ~50us would otherwise dominate the yield-phase
    sleeps above.  Best-effort: returns False where unsupported.
    """
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        return libc.prctl(_PR_SET_TIMERSLACK, ns, 0, 0, 0) == 0
    except Exception:
        return False


def _record_pin_warning(msg: str) -> None:
    log.warning(msg)
    with _pin_warnings_lock:
        pin_warnings.append(msg)


def spawn_pinned(body, core: int | None = None, name: str | None = None) -> threading.Thread:
    """Start a thread running ``body()``, optionally pinned to ``core``.

    Affinity is applied from inside the new thread (it only affects the
    calling thread).  A bad core id or an unsupported host degrades to an
    unpinned thread with a recorded warning.
    """

    def _main():
        if core is not None and not _PIN_DISABLED:
            try:
                os.sched_setaffinity(0, {core})
            except (AttributeError, OSError, ValueError) as exc:
                _record_pin_warning(
                    f"could not pin thread {name or body!r} to core {core}: {exc}")
        reduce_timer_slack()
        body()

    t = threading.Thread(target=_main, name=name, daemon=True)
    t.start()
    return t


def current_affinity() -> set | None:
    try:
        return set(os.sched_getaffinity(0))
    except AttributeError:
        return None


def thread_cpu_seconds(native_id: int) -> float | None:
    """CPU time (user+system) consumed by another thread of this process.

    Reads /proc/self/task/<tid>/stat; returns None where unavailable.
    The comm field may contain spaces, so parse from the closing paren.
    """
    try:
        with open(f"/proc/self/task/{native_id}/stat", "rb") as f:
            raw = f.read().decode("ascii", "replace")
        fields = raw[raw.rindex(")") + 2:].split()
        utime, stime = int(fields[11]), int(fields[12])
        return (utime + stime) / os.sysconf("SC_CLK_TCK")
    except (OSError, ValueError, IndexError):
        return None


def own_cpu_seconds() -> float:
    return time.clock_gettime(time.CLOCK_THREAD_CPUTIME_ID)


# --------------------------------------------------------------------------
# Freeze latches


class FreezeLatch:
    """Park/unpark point for one accelerator thread.

    The owning thread calls ``freeze_point`` when it reaches a safe
    suspension point; any other thread may ``thaw`` it.  A generation
    counter makes each thaw release exactly one park per thread: a thread
    arriving after a thaw parks until the *next* one, and spurious
    wakeups re-park because the generation has not moved.
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._generation = 0
        self._parked = False
        self._stopped = False

    def freeze_point(self) -> bool:
        """Owning thread only.  Blocks until thawed.

        Returns False when the latch was released for shutdown rather
        than for another work cycle.
        """
        with self._cond:
            gen = self._generation
            self._parked = True
            self._cond.notify_all()
            while self._generation == gen and not self._stopped:
                self._cond.wait()
            return not self._stopped

    def thaw(self) -> None:
        with self._cond:
            self._generation += 1
            # Clear under the same lock: the owner is released even if the
            # scheduler has not run it yet, and a stale True here would let
            # a back-to-back freeze cycle thaw twice and lose a resume.
            self._parked = False
            self._cond.notify_all()

    def release_for_exit(self) -> None:
        with self._cond:
            self._stopped = True
            self._parked = False
            self._cond.notify_all()

    def is_parked(self) -> bool:
        with self._cond:
            return self._parked

    def wait_parked(self, timeout: float | None = None) -> bool:
        """Block until the owning thread is inside freeze_point."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._parked:
                remaining = None
                if deadline is not None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return False
                self._cond.wait(remaining)
            return True


def thaw_all(latches) -> None:
    for latch in latches:
        latch.thaw()


def wait_all_parked(latches, timeout: float | None = None) -> bool:
    deadline = None if timeout is None else time.monotonic() + timeout
    for latch in latches:
        remaining = None
        if deadline is not None:
            remaining = max(0.0, deadline - time.monotonic())
        if not latch.wait_parked(remaining):
            return False
    return True

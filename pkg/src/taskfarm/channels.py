"""Fan-out/fan-in channels built from SPSC queues plus arbiter bodies.

One-to-many (emitter), many-to-one (collector) and many-to-many
(collector-emitter master) communication is realized without any shared
locks: each arbiter is a single thread that owns the producer or consumer
role of several SPSC queues and serializes access by construction.  The
dispatch path therefore uses only plain SPSC push/pop -- no mutexes and
no read-modify-write atomics anywhere.

Stream protocol: a producer sends any number of payloads followed by one
EOS token per channel.  Emitters replicate EOS to every output; collectors
count EOS from every input and forward exactly one downstream, so every
consumer endpoint sees exactly one EOS per stream lifetime.
"""

from __future__ import annotations

from dataclasses import dataclass

from .runtime import BackoffPolicy, backoff_step
from .spsc import EMPTY, EOS, SpscQueue

ROUND_ROBIN = "round_robin"
ON_DEMAND = "on_demand"
_POLICY_KINDS = (ROUND_ROBIN, ON_DEMAND)


@dataclass(frozen=True)
class SchedulingPolicy:
    """Output-selection rule for emitters.

    round_robin walks the outputs cyclically, sticking to the current
    target until it accepts (so k payloads over n outputs land exactly
    ceil/floor(k/n) per output).  on_demand picks the output whose queue
    currently advertises the most free slots, ties broken by lowest
    index; the free-slot figure is the producer-side stale hint, which
    never overstates, so the choice never blocks on a surprise-full queue.
    """

    kind: str = ROUND_ROBIN

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")


@dataclass
class ProgressReport:
    dispatched: bool = False
    eos_done: bool = False


class EmitterState:
    """State owned by the single thread running emitter steps.

    ``input`` is anything with a non-blocking ``pop() -> payload | EMPTY``
    (an SpscQueue, an IterSource, or the CE in-flight slot).
    """

    def __init__(self, input, outputs, policy: SchedulingPolicy | None = None,
                 backoff: BackoffPolicy | None = None):
        if not outputs:
            raise ValueError("emitter requires at least one output")
        self.input = input
        self.outputs = list(outputs)
        self.policy = policy or SchedulingPolicy()
        self.backoff = backoff or BackoffPolicy()
        self.next_rr = 0
        self.dispatch_counts = [0] * len(self.outputs)


class CollectorState:
    """State owned by the single thread running collector steps.

    ``output`` is anything with a non-blocking ``push(x) -> bool``.
    """

    def __init__(self, inputs, output, backoff: BackoffPolicy | None = None):
        if not inputs:
            raise ValueError("collector requires at least one input")
        self.inputs = list(inputs)
        self.output = output
        self.backoff = backoff or BackoffPolicy()
        self.eos_seen = 0
        self.finished = False
        self.last_serviced = len(self.inputs) - 1  # so polling starts at 0
        self._dead = [False] * len(self.inputs)

    def reset_stream(self):
        """Re-arm for a fresh stream (all inputs will send EOS again)."""
        self.eos_seen = 0
        self.finished = False
        self._dead = [False] * len(self.inputs)


def _push_retry(queue, item, backoff: BackoffPolicy) -> None:
    # Losslessness: once a payload is popped it must land; retry with
    # backoff rather than dropping.
    attempt = 0
    while not queue.push(item):
        backoff_step(backoff, attempt)
        attempt += 1


def _select_on_demand(outputs) -> int:
    best, best_free = 0, -1
    for i, q in enumerate(outputs):
        free = q.free_slots_hint()
        if free > best_free:
            best, best_free = i, free
    return best


def emitter_step(s: EmitterState) -> ProgressReport:
    """Pop at most one payload from the input and place it.

    EOS is replicated to every output and reported as eos_done.  A normal
    payload goes to the policy-selected output, retrying until accepted.
    An empty input reports no progress.
    """
    item = s.input.pop()
    if item is EMPTY:
        return ProgressReport()
    if item is EOS:
        for q in s.outputs:
            _push_retry(q, EOS, s.backoff)
        return ProgressReport(eos_done=True)
    if s.policy.kind == ROUND_ROBIN:
        target = s.next_rr
        _push_retry(s.outputs[target], item, s.backoff)
        s.next_rr = (target + 1) % len(s.outputs)
    else:
        attempt = 0
        while True:
            target = _select_on_demand(s.outputs)
            if s.outputs[target].push(item):
                break
            backoff_step(s.backoff, attempt)
            attempt += 1
    s.dispatch_counts[target] += 1
    return ProgressReport(dispatched=True)


def collector_step(s: CollectorState) -> ProgressReport:
    """Forward the first available payload, polling inputs cyclically.

    Polling resumes after the last serviced input so no input starves.
    EOS tokens are counted (their input is then considered closed); when
    every input has closed, exactly one EOS goes downstream.
    """
    if s.finished:
        return ProgressReport()
    n = len(s.inputs)
    for k in range(1, n + 1):
        i = (s.last_serviced + k) % n
        if s._dead[i]:
            continue
        item = s.inputs[i].pop()
        if item is EMPTY:
            continue
        s.last_serviced = i
        if item is EOS:
            s._dead[i] = True
            s.eos_seen += 1
            if s.eos_seen == n:
                _push_retry(s.output, EOS, s.backoff)
                s.finished = True
                return ProgressReport(eos_done=True)
            continue
        _push_retry(s.output, item, s.backoff)
        return ProgressReport(dispatched=True)
    return ProgressReport()


class _OneSlot:
    """One-in-flight buffer between the two halves of a CE master.

    Duck-compatible with the queue push/pop surface; only ever touched by
    the single master thread, so plain fields suffice.
    """

    __slots__ = ("_item",)

    def __init__(self):
        self._item = EMPTY

    def push(self, item) -> bool:
        if item is EMPTY or self._item is not EMPTY:
            return False
        self._item = item
        return True

    def pop(self):
        item = self._item
        self._item = EMPTY
        return item

    def is_empty(self) -> bool:
        return self._item is EMPTY


class IterSource:
    """Adapter giving an iterable the non-blocking pop() surface.

    Yields each element once, then a single EOS, then EMPTY forever.
    """

    def __init__(self, iterable):
        self._it = iter(iterable)
        self._exhausted = False

    def pop(self):
        if self._exhausted:
            return EMPTY
        try:
            item = next(self._it)
        except StopIteration:
            self._exhausted = True
            return EOS
        if item is EMPTY:
            raise ValueError("EMPTY marker is not a valid stream element")
        return item


class ListSink:
    """Accepts every push into a local list.  Single-consumer use only."""

    def __init__(self):
        self.items = []

    def push(self, item) -> bool:
        self.items.append(item)
        return True


def _check_arity(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError(f"arity must be >= 1, got {n}")
    if cap <= 1:
        raise ValueError(f"queue capacity must be > 1, got {cap}")


def build_spmc(n: int, cap: int, policy: SchedulingPolicy | None = None,
               backoff: BackoffPolicy | None = None):
    """One producer, n consumers: input queue, output queues, emitter body."""
    _check_arity(n, cap)
    inq = SpscQueue(cap)
    outs = [SpscQueue(cap) for _ in range(n)]
    state = EmitterState(inq, outs, policy, backoff)

    def emitter_body():
        attempt = 0
        while True:
            rep = emitter_step(state)
            if rep.eos_done:
                return
            if rep.dispatched:
                attempt = 0
            else:
                backoff_step(state.backoff, attempt)
                attempt += 1

    return inq, outs, emitter_body


def build_mpsc(n: int, cap: int, backoff: BackoffPolicy | None = None):
    """n producers, one consumer: input queues, output queue, collector body."""
    _check_arity(n, cap)
    ins = [SpscQueue(cap) for _ in range(n)]
    outq = SpscQueue(cap)
    state = CollectorState(ins, outq, backoff)

    def collector_body():
        attempt = 0
        while True:
            rep = collector_step(state)
            if rep.eos_done:
                return
            if rep.dispatched:
                attempt = 0
            else:
                backoff_step(state.backoff, attempt)
                attempt += 1

    return ins, outq, collector_body


def build_mpmc(n_prod: int, n_cons: int, cap: int,
               policy: SchedulingPolicy | None = None,
               backoff: BackoffPolicy | None = None):
    """n producers, m consumers via one collector-emitter master thread.

    The master alternates a collector step and an emitter step over a
    one-in-flight buffer.  The collector half only runs while the buffer
    is empty -- its push must never spin against a slot that only its own
    thread could drain.
    """
    _check_arity(n_prod, cap)
    _check_arity(n_cons, cap)
    ins = [SpscQueue(cap) for _ in range(n_prod)]
    outs = [SpscQueue(cap) for _ in range(n_cons)]
    slot = _OneSlot()
    cs = CollectorState(ins, slot, backoff)
    es = EmitterState(slot, outs, policy, backoff)

    def master_body():
        attempt = 0
        while True:
            progressed = False
            if slot.is_empty() and not cs.finished:
                rep_c = collector_step(cs)
                progressed = rep_c.dispatched or rep_c.eos_done
            rep_e = emitter_step(es)
            if rep_e.eos_done:
                return
            progressed = progressed or rep_e.dispatched
            if progressed:
                attempt = 0
            else:
                backoff_step(es.backoff, attempt)
                attempt += 1

    return ins, outs, master_body

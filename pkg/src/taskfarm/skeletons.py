"""Skeleton composition: farm, pipeline, feedback — and their lowering.

A skeleton graph is a declarative tree (Farm / Pipeline / Feedback over
node behaviors).  ``lower`` turns it into a WiringPlan: a flat set of
runnable thread bodies connected by SPSC queues, with one entry endpoint
and (unless the outermost farm drops its collector) one exit endpoint.
Each planned body serves exactly one stream per invocation -- it returns
once an EOS has fully propagated through it -- so a controlling layer can
re-invoke bodies across freeze/thaw cycles while worker-local state
persists in the behavior instances.

Graph semantics:

* Farm: the emitter dispatches each input to one of n workers (policy
  round-robin or on-demand); an optional collector merges worker outputs.
  Farms do not restore input order.
* Pipeline: stages chained by one queue per adjacent pair; a nested
  farm's collector output queue is reused as the next stage's input.
* Feedback: a master thread routes payloads returned by the body back
  into it while ``route_back(payload)`` holds, otherwise out the exit.
  A body worker may return ``Split([a, b, ...])`` to replace one payload
  with several (divide-and-conquer); the master unpacks it.  Feedback
  bodies must produce exactly one output (or Split) per input, otherwise
  the master's in-flight accounting can never drain the cycle.

The feedback master never blocks pushing into the body: on a full entry
queue it parks payloads in a master-local spill deque and keeps draining
the body's exit, which is what breaks the classic bounded-cycle deadlock.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .channels import (CollectorState, EmitterState, SchedulingPolicy,
                       _push_retry, collector_step, emitter_step)
from .runtime import BackoffPolicy, backoff_step
from .spsc import EMPTY, EOS, SpscQueue


class NodeBehavior:
    """Base for stream filters.  Subclasses override ``svc``.

    ``svc`` is called sequentially on one thread per instance; returning
    None means "no output for this input" (not valid inside feedback
    bodies, and it also means None itself cannot be a produced payload).
    ``on_start``/``on_finish`` bracket each served stream.
    """

    def on_start(self):
        pass

    def svc(self, item):
        raise NotImplementedError

    def on_finish(self):
        pass


class FnBehavior(NodeBehavior):
    """Wrap a plain function as a stateless behavior."""

    def __init__(self, fn):
        self._fn = fn

    def svc(self, item):
        return self._fn(item)


class Split:
    """Container a feedback-body worker returns to fan one task into many."""

    __slots__ = ("children",)

    def __init__(self, children):
        self.children = list(children)


class _Skeleton:
    """Marker base for composition nodes."""


class Farm(_Skeleton):
    def __init__(self, worker, n: int | None = None,
                 policy: SchedulingPolicy | None = None,
                 with_collector: bool = True):
        if isinstance(worker, (list, tuple)):
            self.workers = list(worker)
            self.n = len(self.workers) if n is None else n
        else:
            self.workers = worker
            self.n = 1 if n is None else n
        self.policy = policy or SchedulingPolicy()
        self.with_collector = with_collector


class Pipeline(_Skeleton):
    def __init__(self, stages):
        self.stages = list(stages)


class Feedback(_Skeleton):
    def __init__(self, body, route_back):
        self.body = body
        self.route_back = route_back


@dataclass
class PlannedThread:
    role: str
    body: object  # zero-arg callable; serves one stream per call
    core: int | None = None


@dataclass
class WiringPlan:
    threads: list = field(default_factory=list)
    queues: list = field(default_factory=list)  # internal (q, from_role, to_role)
    entry: SpscQueue | None = None
    exit: SpscQueue | None = None
    task_counts: dict = field(default_factory=dict)
    faults: list = field(default_factory=list)  # (role, exception)


def _is_behavior(obj) -> bool:
    # A behavior *class* also has an svc attribute; it counts as a factory.
    return hasattr(obj, "svc") and not isinstance(obj, type)


def _materialize(worker):
    if _is_behavior(worker):
        return worker
    if callable(worker):
        return worker()
    raise TypeError(f"not a behavior or behavior factory: {worker!r}")


def has_exit(g) -> bool:
    """Whether the lowered graph exposes an output endpoint."""
    if isinstance(g, Farm):
        return g.with_collector
    if isinstance(g, Pipeline):
        return has_exit(g.stages[-1]) if g.stages else True
    if isinstance(g, Feedback):
        return True
    return True  # bare behavior stage


def validate(g, path: str = "root") -> list[str]:
    """Structural check; returns human-readable errors naming the subtree."""
    errs: list[str] = []
    if isinstance(g, Farm):
        if g.n < 1:
            errs.append(f"farm requires n >= 1 at path {path}")
        if isinstance(g.workers, list):
            if len(g.workers) != g.n:
                errs.append(f"farm worker list length {len(g.workers)} != n {g.n} at path {path}")
            for i, w in enumerate(g.workers):
                if not (_is_behavior(w) or callable(w)):
                    errs.append(f"worker {i} is not a behavior or factory at path {path}")
        else:
            if not (_is_behavior(g.workers) or callable(g.workers)):
                errs.append(f"worker argument is not a behavior or factory at path {path}")
            elif _is_behavior(g.workers) and g.n > 1:
                # One shared mutable instance across n threads breaks the
                # sequential-svc contract; demand a factory instead.
                errs.append(f"single behavior instance shared by {g.n} workers at path {path}; pass a factory")
    elif isinstance(g, Pipeline):
        if not g.stages:
            errs.append(f"empty pipeline at path {path}")
        for i, stage in enumerate(g.stages):
            sub = f"{path}.stages[{i}]"
            if isinstance(stage, _Skeleton):
                errs.extend(validate(stage, sub))
                if i < len(g.stages) - 1 and not has_exit(stage):
                    errs.append(f"collector-less farm cannot feed a downstream stage at path {sub}")
            elif not (_is_behavior(stage) or callable(stage)):
                errs.append(f"stage is not a skeleton, behavior, or factory at path {sub}")
    elif isinstance(g, Feedback):
        sub = f"{path}.body"
        if isinstance(g.body, _Skeleton):
            errs.extend(validate(g.body, sub))
            if not has_exit(g.body):
                errs.append(f"feedback body must expose an output at path {sub}")
        elif not (_is_behavior(g.body) or callable(g.body)):
            errs.append(f"feedback body is not a skeleton, behavior, or factory at path {sub}")
        if not callable(g.route_back):
            errs.append(f"route_back must be callable at path {path}")
    elif not (_is_behavior(g) or callable(g)):
        errs.append(f"not a skeleton, behavior, or factory at path {path}")
    return errs


def worker_loop(behavior, inq, outq=None, *, role: str = "worker",
                faults: list | None = None, counts: dict | None = None,
                backoff: BackoffPolicy | None = None):
    """Build the serve body for one worker node.

    The body pops until EOS (with backoff while idle), applies ``svc``,
    and pushes any non-None result.  A raising ``svc`` is recorded on the
    fault register and the worker drains out: it still forwards EOS so the
    rest of the plan terminates and prior results stay retrievable.
    """
    pol = backoff or BackoffPolicy()

    def serve():
        on_start = getattr(behavior, "on_start", None)
        if on_start is not None:
            on_start()
        done = 0
        attempt = 0
        try:
            while True:
                item = inq.pop()
                if item is EMPTY:
                    backoff_step(pol, attempt)
                    attempt += 1
                    continue
                attempt = 0
                if item is EOS:
                    break
                try:
                    out = behavior.svc(item)
                except Exception as exc:
                    if faults is not None:
                        faults.append((role, exc))
                    break
                done += 1
                if out is not None and outq is not None:
                    _push_retry(outq, out, pol)
        finally:
            if outq is not None:
                _push_retry(outq, EOS, pol)
            on_finish = getattr(behavior, "on_finish", None)
            if on_finish is not None:
                on_finish()
            if counts is not None:
                counts[role] = counts.get(role, 0) + done

    return serve


def _emitter_serve(state: EmitterState):
    def serve():
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
    return serve


def _collector_serve(state: CollectorState):
    def serve():
        state.reset_stream()
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
    return serve


def _feedback_serve(external_in, body_entry, body_exit, external_out,
                    route_back, backoff, faults, role):
    """Serve body for the feedback master (collector-emitter fused)."""

    def _route(tok, spill):
        try:
            back = route_back(tok)
        except Exception as exc:
            faults.append((role, exc))
            back = False
        if back:
            spill.append(tok)
        else:
            _push_retry(external_out, tok, backoff)

    def serve():
        closing = False
        eos_to_body = False
        in_flight = 0
        spill = deque()
        attempt = 0
        while True:
            progressed = False
            # Drain the body's exit first: the master must always consume
            # from the cycle before feeding it, or a saturated loop of
            # bounded queues deadlocks.
            item = body_exit.pop()
            if item is not EMPTY:
                progressed = True
                if item is EOS:
                    _push_retry(external_out, EOS, backoff)
                    return
                in_flight -= 1
                children = item.children if isinstance(item, Split) else (item,)
                for tok in children:
                    _route(tok, spill)
            while spill:
                if not body_entry.push(spill[0]):
                    break
                spill.popleft()
                in_flight += 1
                progressed = True
            if not closing:
                item = external_in.pop()
                if item is not EMPTY:
                    progressed = True
                    if item is EOS:
                        closing = True
                    else:
                        # New work always enters the body; route_back only
                        # governs what the body hands back.
                        spill.append(item)
            if closing and not eos_to_body and in_flight == 0 and not spill:
                # Nothing circulating: the body may now terminate.
                if body_entry.push(EOS):
                    eos_to_body = True
                    progressed = True
            if progressed:
                attempt = 0
            else:
                backoff_step(backoff, attempt)
                attempt += 1

    return serve


class _Lowered:
    __slots__ = ("threads", "queues", "entry_q", "entry_role", "exit_q", "exit_role")

    def __init__(self, threads, queues, entry_q, entry_role, exit_q, exit_role):
        self.threads = threads
        self.queues = queues
        self.entry_q = entry_q
        self.entry_role = entry_role
        self.exit_q = exit_q
        self.exit_role = exit_role


def _farm_workers(g: Farm):
    if isinstance(g.workers, list):
        return [_materialize(w) for w in g.workers]
    if _is_behavior(g.workers):
        return [g.workers]  # n == 1, enforced by validate
    return [_materialize(g.workers) for _ in range(g.n)]


def _lower(g, q_cap, backoff, path, entry_q, counts, faults) -> _Lowered:
    if isinstance(g, Farm):
        entry = entry_q or SpscQueue(q_cap)
        to_workers = [SpscQueue(q_cap) for _ in range(g.n)]
        behaviors = _farm_workers(g)
        threads = []
        queues = []
        e_role = f"{path}.emitter"
        c_role = f"{path}.collector"
        e_state = EmitterState(entry, to_workers, g.policy, backoff)
        threads.append(PlannedThread(e_role, _emitter_serve(e_state)))
        from_workers = [SpscQueue(q_cap) for _ in range(g.n)] if g.with_collector else None
        for i in range(g.n):
            w_role = f"{path}.worker[{i}]"
            outq = from_workers[i] if from_workers else None
            counts.setdefault(w_role, 0)
            threads.append(PlannedThread(
                w_role,
                worker_loop(behaviors[i], to_workers[i], outq, role=w_role,
                            faults=faults, counts=counts, backoff=backoff)))
            queues.append((to_workers[i], e_role, w_role))
            if outq is not None:
                queues.append((outq, w_role, c_role))
        exit_q = exit_role = None
        if g.with_collector:
            exit_q = SpscQueue(q_cap)
            c_state = CollectorState(from_workers, exit_q, backoff)
            threads.append(PlannedThread(c_role, _collector_serve(c_state)))
            exit_role = c_role
        return _Lowered(threads, queues, entry, e_role, exit_q, exit_role)

    if isinstance(g, Pipeline):
        threads, queues = [], []
        first = prev = None
        for i, stage in enumerate(g.stages):
            sub_path = f"{path}.stages[{i}]"
            # A stage's entry queue is the previous stage's exit queue, so
            # a nested farm's collector feeds the next stage directly.
            feed = entry_q if i == 0 else prev.exit_q
            low = _lower(stage, q_cap, backoff, sub_path, feed, counts, faults)
            threads.extend(low.threads)
            queues.extend(low.queues)
            if prev is not None:
                queues.append((prev.exit_q, prev.exit_role, low.entry_role))
            if first is None:
                first = low
            prev = low
        return _Lowered(threads, queues, first.entry_q, first.entry_role,
                        prev.exit_q, prev.exit_role)

    if isinstance(g, Feedback):
        role = f"{path}.master"
        external_in = entry_q or SpscQueue(q_cap)
        external_out = SpscQueue(q_cap)
        body = g.body if isinstance(g.body, _Skeleton) else Pipeline([g.body])
        low = _lower(body, q_cap, backoff, f"{path}.body", None, counts, faults)
        threads = [PlannedThread(role, _feedback_serve(
            external_in, low.entry_q, low.exit_q, external_out,
            g.route_back, backoff, faults, role))]
        threads.extend(low.threads)
        queues = [(low.entry_q, role, low.entry_role)]
        queues.extend(low.queues)
        queues.append((low.exit_q, low.exit_role, role))
        return _Lowered(threads, queues, external_in, role, external_out, role)

    # Bare behavior (or factory): a single pipeline-stage worker.
    behavior = _materialize(g)
    entry = entry_q or SpscQueue(q_cap)
    exit_q = SpscQueue(q_cap)
    counts.setdefault(path, 0)
    body = worker_loop(behavior, entry, exit_q, role=path,
                       faults=faults, counts=counts, backoff=backoff)
    return _Lowered([PlannedThread(path, body)], [], entry, path, exit_q, path)


def lower(g, q_cap: int, backoff: BackoffPolicy | None = None) -> WiringPlan:
    """Lower a validated graph to a wiring plan.

    ``q_cap`` sizes every queue in the plan.  The returned plan's thread
    bodies are not yet running; spawning and lifecycle belong to the
    accelerator layer.
    """
    errs = validate(g)
    if errs:
        raise ValueError("invalid skeleton graph: " + "; ".join(errs))
    if q_cap <= 1:
        raise ValueError(f"queue capacity must be > 1, got {q_cap}")
    plan = WiringPlan()
    low = _lower(g, q_cap, backoff or BackoffPolicy(), "root", None,
                 plan.task_counts, plan.faults)
    plan.threads = low.threads
    plan.queues = low.queues
    plan.entry = low.entry_q
    plan.exit = low.exit_q
    return plan

"""Accelerator facade: lifecycle legality, freeze cycles, faults, reconfig."""

from collections import Counter

import pytest

from taskfarm.accelerator import (Accelerator, AcceleratorConfig,
                                  CapabilityError, State, StateError,
                                  StubBackend)
from taskfarm.skeletons import Farm, FnBehavior, NodeBehavior, Pipeline
from taskfarm.spsc import EMPTY, EOS

CFG = AcceleratorConfig(queue_capacity=64, spin_budget=16)


def ident_factory():
    return FnBehavior(lambda x: x)


def ident_farm(n=2):
    return Farm(ident_factory, n=n)


# -- construction -----------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        AcceleratorConfig(n_workers=0)
    with pytest.raises(ValueError):
        AcceleratorConfig(queue_capacity=1)
    with pytest.raises(ValueError):
        AcceleratorConfig(spin_budget=-1)


def test_create_rejects_invalid_graph():
    with pytest.raises(ValueError):
        Accelerator(Farm(ident_factory, n=0), CFG)


def test_create_rejects_nonexistent_cores():
    with pytest.raises(ValueError):
        Accelerator(ident_farm(), AcceleratorConfig(cores=(0, 4096)))


def test_create_plans_but_does_not_spawn():
    acc = Accelerator(Farm(ident_factory, n=4), CFG, backend=StubBackend())
    assert acc.state is State.CREATED
    assert len(acc.plan.threads) == 6  # emitter + 4 workers + collector
    assert acc._backend.spawned == []


def test_over_provisioned_core_list_wraps():
    acc = Accelerator(Farm(ident_factory, n=4),
                      AcceleratorConfig(cores=(0,), spin_budget=16),
                      backend=StubBackend())
    assert set(acc._core_for.values()) == {0}


# -- happy path -------------------------------------------------------------

def test_run_offload_wait_roundtrip(collect_all):
    acc = Accelerator(ident_farm(3), CFG)
    acc.run()
    assert acc.state is State.RUNNING
    for i in range(40):
        assert acc.offload(i)
    acc.offload_eos()
    assert acc.state is State.DRAINING
    got = collect_all(acc)
    rep = acc.wait()
    assert acc.state is State.TERMINATED
    assert Counter(got) == Counter(range(40))
    assert sum(rep.task_counts.values()) == 40
    assert not rep.failed and rep.faults == []


def test_results_equal_offloads_counting_oracle(collect_all):
    k = 123
    acc = Accelerator(ident_farm(4), AcceleratorConfig(queue_capacity=256,
                                                       spin_budget=16))
    acc.run()
    for i in range(k):
        acc.offload(i)
    acc.offload_eos()
    got = collect_all(acc)
    acc.wait()
    assert len(got) == k
    assert acc.output_done


# -- lifecycle legality -----------------------------------------------------

def test_offload_requires_running():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    with pytest.raises(StateError):
        acc.offload(1)


def test_offload_rejects_reserved_markers():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run()
    with pytest.raises(ValueError):
        acc.offload(EMPTY)
    with pytest.raises(ValueError):
        acc.offload(EOS)


def test_offload_after_eos_is_state_error():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run()
    acc.offload_eos()
    with pytest.raises(StateError):
        acc.offload(1)
    with pytest.raises(StateError):
        acc.offload_eos()


def test_wait_requires_draining():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    with pytest.raises(StateError):
        acc.wait()
    acc.run()
    with pytest.raises(StateError):
        acc.wait()


def test_run_on_terminated_is_state_error():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run()
    acc.offload_eos()
    acc.wait()
    with pytest.raises(StateError):
        acc.run()


def test_wait_in_freeze_mode_is_state_error():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run_then_freeze()
    acc.offload_eos()
    with pytest.raises(StateError):
        acc.wait()


def test_wait_freezing_needs_freeze_cycle_and_draining():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run()
    acc.offload_eos()
    with pytest.raises(StateError):
        acc.wait_freezing()  # plain run mode
    acc2 = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc2.run_then_freeze()
    with pytest.raises(StateError):
        acc2.wait_freezing()  # nothing draining yet: would never return


def test_nonblocking_offload_reports_backpressure():
    acc = Accelerator(ident_farm(),
                      AcceleratorConfig(queue_capacity=2, spin_budget=16,
                                        blocking_offload=False),
                      backend=StubBackend())
    acc.run()  # stub: nothing drains the entry queue
    assert acc.offload(1)
    assert acc.offload(2)
    assert not acc.offload(3)


def test_load_result_on_collectorless_is_capability_error():
    acc = Accelerator(Farm(ident_factory, n=2, with_collector=False), CFG,
                      backend=StubBackend())
    acc.run()
    with pytest.raises(CapabilityError):
        acc.load_result()
    with pytest.raises(CapabilityError):
        acc.load_result_blocking()


def test_load_result_requires_active_state():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    with pytest.raises(StateError):
        acc.load_result()  # Created
    acc.run()
    assert acc.load_result() is None  # Running, nothing ready


# -- freeze cycles ----------------------------------------------------------

class Stateful(NodeBehavior):
    def __init__(self):
        self.seen = 0

    def svc(self, x):
        self.seen += 1
        return (x, self.seen)


def test_freeze_cycles_preserve_worker_state(collect_all):
    acc = Accelerator(Farm(Stateful, n=2), CFG)
    maxima = []
    for _ in range(4):
        acc.run_then_freeze()
        for i in range(10):
            acc.offload(i)
        acc.offload_eos()
        got = collect_all(acc)
        acc.wait_freezing()
        assert acc.state is State.FROZEN
        maxima.append(max(seen for _, seen in got))
    # Per-worker counters keep growing: state survived every freeze.
    assert maxima == [5, 10, 15, 20]
    acc.close()


def test_freeze_cycles_pure_svc_identical_multisets(collect_all):
    acc = Accelerator(Farm(lambda: FnBehavior(lambda x: x * 3), n=2), CFG)
    outs = []
    for _ in range(5):
        acc.run_then_freeze()
        for i in range(20):
            acc.offload(i)
        acc.offload_eos()
        outs.append(Counter(collect_all(acc)))
        acc.wait_freezing()
    acc.close()
    assert all(c == outs[0] for c in outs)
    assert outs[0] == Counter(i * 3 for i in range(20))


def test_offload_while_frozen_is_state_error():
    acc = Accelerator(ident_farm(), CFG)
    acc.run_then_freeze()
    acc.offload(1)
    acc.offload_eos()
    while acc.load_result_blocking() is not None:
        pass
    acc.wait_freezing()
    with pytest.raises(StateError):
        acc.offload(2)
    acc.close()


def test_load_result_legal_while_frozen():
    acc = Accelerator(ident_farm(), CFG)
    acc.run_then_freeze()
    acc.offload("x")
    acc.offload_eos()
    acc.wait_freezing()  # results still sitting in the exit queue
    assert acc.state is State.FROZEN
    got = acc.load_result()
    assert got == "x"
    acc.close()


# -- add_workers ------------------------------------------------------------

def test_add_workers_widens_next_run(collect_all):
    acc = Accelerator(ident_farm(2), CFG)
    acc.add_workers(2)
    acc.run()
    for i in range(40):
        acc.offload(i)
    acc.offload_eos()
    got = collect_all(acc)
    rep = acc.wait()
    workers = [r for r in rep.task_counts if ".worker[" in r]
    assert len(workers) == 4
    assert Counter(got) == Counter(range(40))


def test_add_workers_zero_is_noop():
    acc = Accelerator(ident_farm(2), CFG, backend=StubBackend())
    acc.add_workers(0)
    assert len(acc.plan.threads) == 4


def test_add_workers_wrong_state_or_root():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.run()
    with pytest.raises(StateError):
        acc.add_workers(1)
    pipe = Accelerator(Pipeline([ident_factory]), CFG, backend=StubBackend())
    with pytest.raises(CapabilityError):
        pipe.add_workers(1)
    listed = Accelerator(Farm([ident_factory, ident_factory]), CFG,
                         backend=StubBackend())
    with pytest.raises(CapabilityError):
        listed.add_workers(1)
    with pytest.raises(ValueError):
        Accelerator(ident_farm(), CFG, backend=StubBackend()).add_workers(-1)


def test_add_workers_while_frozen_respawns(collect_all):
    acc = Accelerator(ident_farm(1), CFG)
    acc.run_then_freeze()
    acc.offload(1)
    acc.offload_eos()
    assert collect_all(acc) == [1]
    acc.wait_freezing()
    acc.add_workers(2)
    acc.run_then_freeze()
    for i in range(30):
        acc.offload(i)
    acc.offload_eos()
    got = collect_all(acc)
    acc.wait_freezing()
    rep = acc.report()
    assert len([r for r in rep.task_counts if ".worker[" in r]) == 3
    assert Counter(got) == Counter(range(30))
    acc.close()


# -- faults -----------------------------------------------------------------

def test_faulted_worker_marks_run_failed(collect_all):
    def boom(x):
        if x == "bad":
            raise ValueError("poisoned task")
        return x

    acc = Accelerator(Farm(lambda: FnBehavior(boom), n=2),
                      AcceleratorConfig(queue_capacity=256, spin_budget=16))
    acc.run()
    for i in range(20):
        acc.offload(i)
    acc.offload("bad")
    acc.offload_eos()
    got = collect_all(acc)
    rep = acc.wait()
    assert rep.failed
    assert len(rep.faults) == 1
    assert isinstance(rep.faults[0][1], ValueError)
    # The healthy worker's results and counts survive.
    assert set(got) <= set(range(20))
    assert sum(rep.task_counts.values()) == len(got)


# -- close ------------------------------------------------------------------

def test_close_is_total_and_idempotent():
    acc = Accelerator(ident_farm(), CFG, backend=StubBackend())
    acc.close()
    assert acc.state is State.TERMINATED
    acc.close()
    assert acc.state is State.TERMINATED


def test_close_mid_stream_with_real_threads():
    acc = Accelerator(ident_farm(3), CFG)
    acc.run()
    for i in range(30):
        acc.offload(i)
    acc.close()  # tasks possibly in flight, results never drained
    assert acc.state is State.TERMINATED


def test_close_from_frozen():
    acc = Accelerator(ident_farm(), CFG)
    acc.run_then_freeze()
    acc.offload(1)
    acc.offload_eos()
    while acc.load_result_blocking() is not None:
        pass
    acc.wait_freezing()
    acc.close()
    assert acc.state is State.TERMINATED


def test_context_manager_closes():
    with Accelerator(ident_farm(), CFG) as acc:
        acc.run()
        acc.offload(1)
    assert acc.state is State.TERMINATED


def test_stub_backend_records_spawns():
    stub = StubBackend()
    acc = Accelerator(Farm(ident_factory, n=2), CFG, backend=stub)
    acc.run()
    assert len(stub.spawned) == 4
    assert all(name.startswith("taskfarm:root.") for name in stub.spawned)

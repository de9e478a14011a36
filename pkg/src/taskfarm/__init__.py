"""taskfarm: streaming-skeleton parallel runtime on lock-free SPSC queues.

Layers, bottom up: ``spsc`` (the queue), ``channels`` (fan-out/fan-in
arbiters), ``skeletons`` (farm/pipeline/feedback composition and
lowering), ``runtime`` (threads, pinning, backoff, freeze latches),
``accelerator`` (the self-offloading facade), ``bench`` (benchmark CLI).
"""

from .accelerator import (Accelerator, AcceleratorConfig, CapabilityError,
                          RunReport, State, StateError, StubBackend,
                          ThreadBackend)
from .channels import (ON_DEMAND, ROUND_ROBIN, CollectorState, EmitterState,
                       IterSource, ListSink, ProgressReport, SchedulingPolicy,
                       build_mpmc, build_mpsc, build_spmc, collector_step,
                       emitter_step)
from .runtime import (Action, BackoffPolicy, CoreMap, FreezeLatch,
                      backoff_step, backoff_wait, logical_core_count,
                      physical_core_count, plan_core_map, spawn_pinned,
                      thaw_all, wait_all_parked)
from .skeletons import (Farm, Feedback, FnBehavior, NodeBehavior, Pipeline,
                        PlannedThread, Split, WiringPlan, lower, validate,
                        worker_loop)
from .spsc import EMPTY, EOS, SpscQueue

__version__ = "0.1.0"

__all__ = [
    "Accelerator", "AcceleratorConfig", "CapabilityError", "RunReport",
    "State", "StateError", "StubBackend", "ThreadBackend",
    "ON_DEMAND", "ROUND_ROBIN", "CollectorState", "EmitterState",
    "IterSource", "ListSink", "ProgressReport", "SchedulingPolicy",
    "build_mpmc", "build_mpsc", "build_spmc", "collector_step", "emitter_step",
    "Action", "BackoffPolicy", "CoreMap", "FreezeLatch", "backoff_step",
    "backoff_wait", "logical_core_count", "physical_core_count",
    "plan_core_map", "spawn_pinned", "thaw_all", "wait_all_parked",
    "Farm", "Feedback", "FnBehavior", "NodeBehavior", "Pipeline",
    "PlannedThread", "Split", "WiringPlan", "lower", "validate", "worker_loop",
    "EMPTY", "EOS", "SpscQueue",
    "__version__",
]

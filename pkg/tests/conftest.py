import os

# Keep idle-thread spinning short before the package reads its default:
# on oversubscribed CI hosts long spin phases steal interpreter time from
# the threads doing real work.
os.environ.setdefault("TASKFARM_SPIN_BUDGET", "64")

# Single-threaded BLAS before numpy loads anywhere: the benchmarks assume
# the library does not spawn its own pool under the farm's workers.
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import pytest
from hypothesis import HealthCheck, settings

# Thread-scheduling jitter makes per-example deadlines flaky.
settings.register_profile("taskfarm", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("taskfarm")


@pytest.fixture
def collect_all():
    """Drain an accelerator's output stream until EOS."""

    def _collect(acc):
        out = []
        while True:
            r = acc.load_result_blocking()
            if r is None:
                return out
            out.append(r)

    return _collect

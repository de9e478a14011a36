#!/usr/bin/env python3
"""Benchmark launcher.

Pins the BLAS thread pool to one thread before numpy can load: the
row-decomposed matmul benchmark assumes the library does not spawn its
own workers underneath the farm's.  Then defers to the package CLI
(arguments are identical to ``taskfarm-bench``).
"""

import os
import sys

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

from taskfarm.bench.cli import main  # noqa: E402  (env must be set first)

if __name__ == "__main__":
    sys.exit(main())

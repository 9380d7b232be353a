"""Optional thread-level parallelism for ensemble loops.

The worker count comes from ENTANGLED_TRANSPORT_THREADS (default 1).  Results
are always returned in task order so reductions do not depend on scheduling.
"""
from __future__ import annotations

import os

ENV_THREADS = "ENTANGLED_TRANSPORT_THREADS"


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get(ENV_THREADS, "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    workers = n_workers() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=workers, prefer="threads")(delayed(fn)(x) for x in items)

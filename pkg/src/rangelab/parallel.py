"""Replica-parallel execution with deterministic, replica-ordered results."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

WORKERS_ENV = "RANGELAB_WORKERS"


def worker_count(configured: int | None = None) -> int:
    """Worker count for a run: the environment override wins, then ``configured``, then 1."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        return max(1, value)
    return max(1, int(configured or 1))


def _run_chunk(fn, chunk):
    return [fn(r) for r in chunk]


def map_replicas(fn: Callable[[int], object], replicas: Sequence[int] | int, workers: int | None = None,
                 chunks_per_worker: int = 4) -> list:
    """``[fn(r) for r in replicas]`` computed on a process pool.

    An explicit ``workers`` is used as given; ``None`` falls back to
    :func:`worker_count`.

    Every replica owns its own counter-based stream, so the output list is the
    same for any worker count; only wall-clock changes.
    """
    reps = list(range(replicas)) if isinstance(replicas, int) else list(replicas)
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1 or len(reps) <= 1:
        return [fn(r) for r in reps]
    n_chunks = min(len(reps), workers * chunks_per_worker)
    size = -(-len(reps) // n_chunks)
    chunks = [reps[k:k + size] for k in range(0, len(reps), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [fn] * len(chunks), chunks)
        return [item for part in parts for item in part]

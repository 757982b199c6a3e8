"""Deterministic chunked execution for row-wise scoring.

Chunk boundaries depend only on the problem shape, never on the worker
count, so results are bitwise identical no matter how many threads run.
The ``DEMUD_THREADS`` environment variable caps the pool size; ``0`` or
an unset variable means "use all available cores".
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ValidationError

# Target elements per chunk; keeps per-chunk temporaries around a few MB.
_CHUNK_ELEMENTS = 4_000_000
_CHUNK_MAX_ROWS = 4096


def chunk_bounds(n_rows: int, n_cols: int) -> list[tuple[int, int]]:
    """Split ``n_rows`` into [lo, hi) ranges; a pure function of the shape."""
    size = max(1, min(n_rows, _CHUNK_ELEMENTS // max(n_cols, 1), _CHUNK_MAX_ROWS))
    return [(lo, min(lo + size, n_rows)) for lo in range(0, n_rows, size)]


def thread_count(n_tasks: int) -> int:
    """Resolve the worker count from DEMUD_THREADS, clamped to ``n_tasks``."""
    raw = os.environ.get("DEMUD_THREADS", "0").strip()
    try:
        requested = int(raw)
    except ValueError:
        raise ValidationError(f"DEMUD_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValidationError(f"DEMUD_THREADS must be >= 0, got {requested}")
    if requested == 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, n_tasks))


def run_chunked(work, bounds: list[tuple[int, int]]) -> None:
    """Apply ``work(lo, hi)`` to every chunk, possibly in a thread pool.

    ``work`` must write its results into preallocated output rows [lo, hi)
    and must not touch rows outside its chunk.
    """
    workers = thread_count(len(bounds))
    if workers <= 1 or len(bounds) <= 1:
        for lo, hi in bounds:
            work(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(work, lo, hi) for lo, hi in bounds]
        for fut in futures:
            fut.result()

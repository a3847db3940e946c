"""Optional process-based parallelism for fleet aggregation.

The EVLOAD_THREADS environment variable caps the worker count; unset or 1
means fully serial execution in the calling process.  Results are reduced
in submission order, so the worker count never changes the output.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterator, Sequence, TypeVar

from .errors import ConfigError

_A = TypeVar("_A")
_R = TypeVar("_R")


def worker_count(explicit: int | None = None) -> int:
    """Resolve the worker count from an explicit value or EVLOAD_THREADS."""
    if explicit is not None:
        if explicit < 1:
            raise ConfigError("worker count must be >= 1")
        return explicit
    raw = os.environ.get("EVLOAD_THREADS", "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"EVLOAD_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("EVLOAD_THREADS must be >= 1")
    return value


def map_chunks(
    fn: Callable[[_A], _R],
    args: Sequence[_A],
    workers: int | None = None,
) -> Iterator[_R]:
    """Apply fn to each arg, yielding results in input order."""
    n = worker_count(workers)
    if n <= 1 or len(args) <= 1:
        for arg in args:
            yield fn(arg)
        return
    with ProcessPoolExecutor(max_workers=min(n, len(args))) as pool:
        yield from pool.map(fn, args)

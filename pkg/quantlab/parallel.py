"""Bounded, order-preserving fan-out over worker threads.

`asyncio.gather` keeps results in input order and a semaphore bounds concurrency.
The cap comes from `QUANTLAB_THREADS`.
"""
from __future__ import annotations

import asyncio
import os
from collections.abc import Callable, Iterable
from typing import TypeVar

__all__ = ["get_thread_limit_from_env", "ordered_map"]

T = TypeVar("T")
R = TypeVar("R")


def get_thread_limit_from_env() -> int:
    """Return QUANTLAB_THREADS, defaulting to min(cpu_count, 8)."""
    raw = os.getenv("QUANTLAB_THREADS")
    if raw is None:
        return max(1, min(os.cpu_count() or 1, 8))
    try:
        val = int(raw, 10)
    except ValueError as e:
        raise ValueError("QUANTLAB_THREADS must be an integer") from e
    if val < 1:
        raise ValueError("QUANTLAB_THREADS must be >= 1")
    return val


def ordered_map(fn: Callable[[T], R], items: Iterable[T], *, limit: int | None = None) -> list[R]:
    """Apply `fn` to every item, possibly concurrently; the output order is the input order."""
    work = list(items)
    limit = get_thread_limit_from_env() if limit is None else limit
    if limit <= 1 or len(work) <= 1:
        return [fn(it) for it in work]

    async def _run() -> list[R]:
        sem = asyncio.Semaphore(limit)

        async def one(it: T) -> R:
            async with sem:
                return await asyncio.to_thread(fn, it)

        return list(await asyncio.gather(*(one(it) for it in work)))

    return asyncio.run(_run())

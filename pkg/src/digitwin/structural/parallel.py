from __future__ import annotations

from collections.abc import Callable, Sequence
from typing import TypeVar

import anyio
import anyio.to_thread

__all__ = ("map_ordered",)

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Sequence[T], max_workers: int = 1) -> list[R]:
    """Apply ``fn`` to every item on worker threads and return results in input order.

    With ``max_workers <= 1`` the calls run inline, one after another. Results never
    depend on scheduling, so callers get identical output for any worker count.
    """
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    results: list[R | None] = [None] * len(items)

    async def _run() -> None:
        limiter = anyio.CapacityLimiter(max_workers)

        async def _one(index: int, item: T) -> None:
            results[index] = await anyio.to_thread.run_sync(fn, item, limiter=limiter)

        async with anyio.create_task_group() as tg:
            for index, item in enumerate(items):
                tg.start_soon(_one, index, item)

    try:
        anyio.run(_run)
    except ExceptionGroup as eg:
        # the group cancels siblings on the first failure; surface that failure
        if len(eg.exceptions) == 1:
            raise eg.exceptions[0] from None
        raise
    return results  # type: ignore[return-value]

"""
Оркестратор параллельного интегрирования точек развёртки.

Features:
- Разбиение развёртки на непрерывные чанки
- ProcessPoolExecutor под asyncio.gather
- Детерминированный порядок результатов независимо от числа процессов
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, TypeVar
import asyncio
import logging

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def split_chunks(n_items: int, n_chunks: int) -> List[slice]:
    """Разбить range(n_items) на не более n_chunks непрерывных срезов."""
    n_chunks = max(1, min(n_chunks, n_items))
    base, extra = divmod(n_items, n_chunks)
    slices, start = [], 0
    for i in range(n_chunks):
        stop = start + base + (1 if i < extra else 0)
        slices.append(slice(start, stop))
        start = stop
    return slices


class SweepOrchestrator:
    """Запуск чистых функций над чанками развёртки."""

    def __init__(self, jobs: int = 1, max_parallel: Optional[int] = None):
        """
        Args:
            jobs: Число процессов (1 = выполнять в текущем процессе)
            max_parallel: Сколько чанков отправлять за раз (None = все)
        """
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs
        self.max_parallel = max_parallel

    def run(self, fn: Callable[[T], R], payloads: Sequence[T]) -> List[R]:
        """Синхронная обёртка: результаты в порядке payloads."""
        if not payloads:
            return []
        if self.jobs == 1:
            logger.debug(f"Running {len(payloads)} chunks inline")
            return [fn(p) for p in payloads]
        return asyncio.run(self.run_async(fn, payloads))

    async def run_async(self, fn: Callable[[T], R], payloads: Sequence[T]) -> List[R]:
        logger.info(f"Running {len(payloads)} chunks on {self.jobs} processes...")
        loop = asyncio.get_running_loop()
        results: List[Any] = []
        step = self.max_parallel or len(payloads)

        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            for i in range(0, len(payloads), step):
                batch = payloads[i:i + step]
                tasks = [loop.run_in_executor(pool, fn, p) for p in batch]
                results.extend(await asyncio.gather(*tasks, return_exceptions=True))

        failures = [(i, r) for i, r in enumerate(results) if isinstance(r, BaseException)]
        for i, err in failures:
            logger.error(f"Chunk {i} failed: {type(err).__name__}: {err}")
        if failures:
            raise failures[0][1]
        return results

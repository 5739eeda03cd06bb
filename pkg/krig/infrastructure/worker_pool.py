"""
Bounded worker pool for independent tasks (replications, chains).

Results always come back in submission order, so sequential and parallel runs aggregate
identically.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from krig.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class WorkerPool:
    """
    Runs a picklable function over a sequence of inputs.

    With one worker the tasks run in-process, which keeps tracebacks and logging simple.
    """

    def __init__(self, workers: Optional[int] = None):
        """
        Initialize the pool.

        Args:
            workers: Maximum parallel processes; None or <= 0 falls back to settings
        """
        self.workers = workers if workers and workers > 0 else settings.workers

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        tasks = list(items)
        if self.workers <= 1 or len(tasks) <= 1:
            logger.debug(f"📋 Running {len(tasks)} task(s) sequentially")
            return [fn(task) for task in tasks]
        workers = min(self.workers, len(tasks))
        logger.info(f"🔄 Dispatching {len(tasks)} tasks to {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(fn, tasks))

import asyncio
import dataclasses
import logging
import math
from enum import Enum, StrEnum
from typing import Any, Callable, Sequence

import numpy as np


class TaskQueueExecutor:
    """
    Runs blocking callables on worker threads fed from an asyncio queue, results are
    collected by submission index so callers can reassemble them in declared order.
    """

    def __init__(self, workers: int = 4, max_queue_size: int = 1000):
        self.logger = logging.getLogger(self.__class__.__name__)

        self.workers = max(1, int(workers))
        self.max_queue_size = max_queue_size
        self._queue: asyncio.Queue[tuple[int, Callable[[], Any]]] = asyncio.Queue(maxsize=max_queue_size)
        self._results: dict[int, Any] = {}
        self._submitted = 0

    async def _worker(self):
        while True:
            try:
                index, func = await self._queue.get()
                try:
                    self._results[index] = await asyncio.to_thread(func)
                except Exception as e:
                    self.logger.exception("Task resulted in an error")
                    self._results[index] = e
                finally:
                    self._queue.task_done()
            except asyncio.CancelledError:
                break

    async def add_to_queue(self, func: Callable[[], Any]) -> int:
        index = self._submitted
        self._submitted += 1
        await self._queue.put((index, func))
        return index

    def results(self) -> list[Any]:
        return [self._results.get(i) for i in range(self._submitted)]

    async def __aenter__(self):
        # drain any tasks left over from a previous use
        if not self._queue.empty():
            remaining = []
            while not self._queue.empty():
                try:
                    remaining.append(self._queue.get_nowait())
                    self._queue.task_done()
                except asyncio.QueueEmpty:
                    break
            self.logger.warning(f"Tasks never executed: {remaining}")

        self._results = {}
        self._submitted = 0
        self._worker_tasks = [asyncio.create_task(self._worker()) for _ in range(self.workers)]
        return self

    async def __aexit__(self, exc_type, exc, tb):
        await self._queue.join()
        for task in self._worker_tasks:
            task.cancel()
        for task in self._worker_tasks:
            try:
                await task
            except asyncio.CancelledError:
                pass


def run_in_order(funcs: Sequence[Callable[[], Any]], workers: int = 4) -> list[Any]:
    """Runs `funcs` concurrently and returns their results (or raised exceptions) in order."""

    async def _run():
        async with TaskQueueExecutor(workers=workers) as executor:
            for func in funcs:
                await executor.add_to_queue(func)
        return executor.results()

    return asyncio.run(_run())


# helpers


def load_dotenv():
    # load environment variables
    try:
        import dotenv  # pyright: ignore[reportMissingImports]
    except ImportError:
        logging.warning("dotenv is not installed, install it using `pip install dotenv`")
    else:
        dotenv.load_dotenv()


def format_elapsed(delta: float, max_length: int = 2) -> str:
    """Return a duration in seconds as a human-readable string"""

    periods = (
        ("hour", 3600),
        ("minute", 60),
    )

    fmt_list = []
    for period, seconds_each in periods:
        if delta >= seconds_each:
            how_many = int(delta / seconds_each)
            fmt_list.append(f"{how_many} {period}{'s' if how_many >= 2 else ''}")
            delta -= seconds_each * how_many
            if len(fmt_list) >= max_length:
                return " and ".join(fmt_list)

    fmt_list.append(f"{delta:.2f} seconds")
    return " and ".join(fmt_list)


def to_jsonable(value: Any) -> Any:
    """Converts numpy scalars/arrays, dataclasses, enums and tuples to plain JSON values."""
    if isinstance(value, StrEnum):
        return str(value)
    if isinstance(value, Enum):
        return value.name
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        if hasattr(value, "to_dict"):
            return to_jsonable(value.to_dict())
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


class Ansi(StrEnum):
    END = '\33[0m'
    BOLD = '\33[1m'

    RED = '\33[31m'
    GREEN = '\33[32m'
    YELLOW = '\33[33m'
    BLUE = '\33[34m'
    BEIGE = '\33[36m'
    WHITE = '\33[37m'

    GREY = '\33[90m'
    RED2 = '\33[91m'
    GREEN2 = '\33[92m'
    YELLOW2 = '\33[93m'
    WHITE2 = '\33[97m'

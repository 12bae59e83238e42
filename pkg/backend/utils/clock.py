"""Simulated and realtime clocks for the scheduler."""

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple

logger = logging.getLogger(__name__)


@dataclass(order=True)
class _Completion:
    """
    Heap ordering:
    1. completion time
    2. worker index (lower wins)
    3. submission order
    """

    time: float
    worker: int
    seq: int
    payload: Any = field(compare=False)


class SimulatedClock:
    """Virtual time that only moves when the next completion is popped."""

    mode = "simulated"

    def __init__(self):
        self._now = 0.0
        self._queue: List[_Completion] = []
        self._seq = itertools.count()

    def now(self) -> float:
        return self._now

    def schedule(self, delay: float, worker: int, payload: Any) -> float:
        if delay < 0:
            raise ValueError("cannot schedule a completion in the past")
        finish = self._now + delay
        heapq.heappush(self._queue, _Completion(finish, worker, next(self._seq), payload))
        return finish

    def has_pending(self) -> bool:
        return bool(self._queue)

    def peek_time(self) -> Optional[float]:
        return self._queue[0].time if self._queue else None

    def pop_next(self) -> Tuple[float, int, Any]:
        item = heapq.heappop(self._queue)
        self._now = max(self._now, item.time)
        return item.time, item.worker, item.payload

    def pop_simultaneous(self) -> List[Tuple[float, int, Any]]:
        """All completions sharing the earliest timestamp, in worker order."""
        if not self._queue:
            return []
        first = self.pop_next()
        batch = [first]
        while self._queue and self._queue[0].time == first[0]:
            batch.append(self.pop_next())
        return batch


class RealtimeClock:
    """Wall-clock seconds since construction."""

    mode = "realtime"

    def __init__(self):
        self._start = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._start

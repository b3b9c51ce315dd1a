"""Discrete-event scheduler and named random streams.

Events are ordered by ``(fire_at, seq)`` where ``seq`` is an insertion
counter, so two runs that schedule the same events in the same order
dispatch them identically.
"""

from __future__ import annotations

import csv
import heapq
import zlib
from typing import Any, Callable

import numpy as np


class SchedulingError(ValueError):
    """Raised when an event is scheduled in the past."""


class Simulator:
    """Single-threaded event loop with a continuous clock."""

    def __init__(self, record_events: bool = False):
        self.now = 0.0
        self._queue: list = []
        self._seq = 0
        self._live: set[int] = set()
        self.record_events = record_events
        self.event_log: list[tuple[float, int, int, str]] = []
        self.dispatched = 0

    def schedule(self, fire_at: float, action: Callable[..., Any], *args,
                 target: int = -1, kind: str = "") -> int:
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule at {fire_at!r}, clock is already {self.now!r}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (fire_at, seq, action, args, target, kind))
        self._live.add(seq)
        return seq

    def schedule_in(self, delay: float, action, *args, target=-1, kind=""):
        return self.schedule(self.now + delay, action, *args, target=target, kind=kind)

    def cancel(self, event_id: int) -> bool:
        if event_id in self._live:
            self._live.discard(event_id)
            return True
        return False

    def pending(self) -> int:
        return len(self._live)

    def peek_time(self) -> float | None:
        q = self._queue
        while q and q[0][1] not in self._live:
            heapq.heappop(q)
        return q[0][0] if q else None

    def step(self) -> bool:
        """Dispatch the next live event. Returns False when the queue is empty."""
        q = self._queue
        live = self._live
        while q:
            fire_at, seq, action, args, target, kind = heapq.heappop(q)
            if seq not in live:
                continue
            live.discard(seq)
            self.now = fire_at
            if self.record_events:
                self.event_log.append((fire_at, seq, target, kind))
            self.dispatched += 1
            action(*args)
            return True
        return False

    def run_until(self, t_end: float) -> int:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end!r}) is before clock {self.now!r}")
        q = self._queue
        live = self._live
        log = self.event_log if self.record_events else None
        count = 0
        while q and q[0][0] <= t_end:
            fire_at, seq, action, args, target, kind = heapq.heappop(q)
            if seq not in live:
                continue
            live.discard(seq)
            self.now = fire_at
            if log is not None:
                log.append((fire_at, seq, target, kind))
            count += 1
            action(*args)
        self.now = t_end
        self.dispatched += count
        return count

    def write_event_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "seq", "target", "kind"])
            for t, seq, target, kind in self.event_log:
                w.writerow([repr(t), seq, target, kind])


def stream_seed(seed: int, stream_id: str) -> list[int]:
    return [seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(stream_id.encode())]


class RngStreams:
    """Factory of independent generators keyed by stream label.

    The same ``(seed, stream_id)`` pair always yields the same sequence,
    regardless of which other streams were created or consumed.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, stream_id: str) -> np.random.Generator:
        rng = self._streams.get(stream_id)
        if rng is None:
            rng = np.random.default_rng(stream_seed(self.seed, stream_id))
            self._streams[stream_id] = rng
        return rng

    __getitem__ = get

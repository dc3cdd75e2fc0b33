"""Append-only lifecycle event log with cursor-based readers.

The log is the single source of truth for everything the runtime did:
sequence numbers are gap-free and strictly increasing, appends happen only
from the lifecycle executor, and any number of readers can tail the log
concurrently. Retention is bounded; a reader whose cursor fell off the
window is restarted from the oldest retained event (resync semantics).
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from ..errors import CursorTooOld


class Action(str, Enum):
    SCANNED = "Scanned"
    LOADED = "Loaded"
    UPDATED = "Updated"
    UNLOADED = "Unloaded"
    INSTANTIATED = "Instantiated"
    ACTIVATED = "Activated"
    REBOUND = "Rebound"
    DRAIN_STARTED = "DrainStarted"
    RELEASED = "Released"
    CONFIG_CHANGED = "ConfigChanged"


@dataclass(frozen=True)
class LifecycleEvent:
    seq: int
    time: float
    subject: str
    action: Action
    detail: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "seq": self.seq,
            "time": self.time,
            "subject": self.subject,
            "action": self.action.value,
            "detail": self.detail,
        }


class EventLog:
    def __init__(self, capacity: int = 4096, clock=time.time):
        self._events: deque[LifecycleEvent] = deque(maxlen=capacity)
        self._next_seq = 1
        self._lock = threading.Lock()
        self._appended = threading.Condition(self._lock)
        self._clock = clock

    def append(self, subject: str, action: Action, detail: dict | None = None) -> LifecycleEvent:
        with self._lock:
            event = LifecycleEvent(
                seq=self._next_seq,
                time=self._clock(),
                subject=subject,
                action=action,
                detail=detail or {},
            )
            self._next_seq += 1
            self._events.append(event)
            self._appended.notify_all()
            return event

    @property
    def latest_seq(self) -> int:
        with self._lock:
            return self._next_seq - 1

    @property
    def oldest_seq(self) -> int | None:
        with self._lock:
            return self._events[0].seq if self._events else None

    def read_after(self, cursor: int) -> list[LifecycleEvent]:
        """Events with seq > cursor. Raises CursorTooOld when truncated past it."""
        with self._lock:
            return self._read_after_locked(cursor)

    def _read_after_locked(self, cursor: int) -> list[LifecycleEvent]:
        if self._events and cursor < self._events[0].seq - 1:
            raise CursorTooOld(
                f"cursor {cursor} predates retained window (oldest {self._events[0].seq})"
            )
        return [e for e in self._events if e.seq > cursor]

    def wait_after(self, cursor: int, timeout: float) -> list[LifecycleEvent]:
        """Like read_after but blocks up to `timeout` for something new."""
        deadline = time.monotonic() + timeout
        with self._lock:
            while True:
                batch = self._read_after_locked(cursor)
                if batch:
                    return batch
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._appended.wait(remaining)

    def tail(self, n: int) -> list[LifecycleEvent]:
        with self._lock:
            if n <= 0:
                return []
            return list(self._events)[-n:]

    def stream(self, cursor: int, *, poll_timeout: float = 0.5) -> Iterator[dict]:
        """Endless iterator of event objects; yields a resync record on truncation.

        Control records carry a "control" key and no "seq"; consumers resolving
        a resync should refetch a snapshot, then continue from the given seq.
        """
        while True:
            try:
                batch = self.wait_after(cursor, poll_timeout)
            except CursorTooOld:
                oldest = self.oldest_seq
                cursor = (oldest - 1) if oldest is not None else self.latest_seq
                yield {"control": "resync", "oldest": oldest}
                continue
            for event in batch:
                cursor = event.seq
                yield event.to_obj()
            if not batch:
                yield {"control": "idle"}

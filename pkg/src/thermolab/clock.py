"""Clock abstraction so protocol timing is testable with a simulated clock."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Protocol


def utc(dt: datetime) -> datetime:
    """Normalize a datetime to an aware UTC instant."""
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


class Clock(Protocol):
    def now(self) -> datetime: ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class SimulatedClock:
    """Manually advanced clock; microsecond-exact arithmetic."""

    def __init__(self, start: datetime):
        self._now = utc(start)

    def now(self) -> datetime:
        return self._now

    def advance(self, seconds: float) -> datetime:
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        self._now = self._now + timedelta(seconds=seconds)
        return self._now

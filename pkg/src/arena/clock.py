"""Clock abstraction so every "now" in the system is injectable.

Wall-clock reads are confined to the long-running server; everything else
(tick pipeline, simulation, tests) runs on a manually advanced clock.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

UTC = timezone.utc


class Clock:
    def now(self) -> datetime:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> datetime:
        return datetime.now(UTC)


class ManualClock(Clock):
    """Deterministic clock; only ever moves forward."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            raise ValueError("ManualClock start must be timezone-aware")
        self._now = start.astimezone(UTC)

    def now(self) -> datetime:
        return self._now

    def set(self, instant: datetime) -> None:
        instant = instant.astimezone(UTC)
        if instant < self._now:
            raise ValueError(f"clock may not move backwards: {instant} < {self._now}")
        self._now = instant

    def advance(self, delta: timedelta) -> None:
        if delta < timedelta(0):
            raise ValueError("clock may not move backwards")
        self._now = self._now + delta

"""Gate closures and DST-correct target grids.

All calendar math is done in instant space against the IANA tz database:
the target grid is built by stepping UTC instants between the two local
midnights bounding the delivery day, so short (23h) and long (25h) days
fall out by construction instead of by special-casing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

from .config import ChallengeSpec

UTC = timezone.utc
log = logging.getLogger(__name__)

try:
    from importlib.metadata import version as _pkg_version

    TZDATA_VERSION = _pkg_version("tzdata")
except Exception:  # pragma: no cover - system tz database
    TZDATA_VERSION = "system"


@dataclass(frozen=True)
class ForecastEvent:
    """One submission round: a gate closure plus the grid it covers."""

    challenge_id: str
    area: str
    delivery_date: date
    gate_closure: datetime
    target_timestamps: tuple[datetime, ...]
    tzdata_version: str = TZDATA_VERSION

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.challenge_id, self.area, self.delivery_date.isoformat())

    @property
    def period_end(self) -> datetime:
        """End of the delivery day: last interval start plus one resolution step."""
        step = self.target_timestamps[1] - self.target_timestamps[0] if len(self.target_timestamps) > 1 else timedelta(hours=1)
        return self.target_timestamps[-1] + step

    @property
    def n_slots(self) -> int:
        return len(self.target_timestamps)


def resolve_local(tz: ZoneInfo, day: date, wall: time) -> tuple[datetime, str]:
    """Map a local wall-clock time to a UTC instant, resolving DST edge cases.

    Returns ``(instant, flag)`` where flag is one of ``unique``,
    ``ambiguous`` (resolved to the earlier, pre-transition instant) or
    ``nonexistent`` (mapped forward to the end of the transition gap).
    """
    naive = datetime.combine(day, wall)
    u0 = naive.replace(tzinfo=tz, fold=0).astimezone(UTC)
    u1 = naive.replace(tzinfo=tz, fold=1).astimezone(UTC)
    if u0 == u1:
        return u0, "unique"

    round_trip = u0.astimezone(tz).replace(tzinfo=None)
    if round_trip != naive:
        # Spring-forward gap: find the transition instant (= the first
        # instant carrying the post-transition offset), i.e. the gap end.
        lo, hi = min(u0, u1), max(u0, u1)
        target_offset = hi.astimezone(tz).utcoffset()
        while hi - lo > timedelta(seconds=1):
            mid = lo + (hi - lo) / 2
            mid = mid.replace(microsecond=0)
            if mid <= lo:
                mid = lo + timedelta(seconds=1)
            if mid.astimezone(tz).utcoffset() == target_offset:
                hi = mid
            else:
                lo = mid
        return hi, "nonexistent"

    # Fall-back overlap: the earlier instant never admits extra information.
    return min(u0, u1), "ambiguous"


def gate_closure(spec: ChallengeSpec, delivery_date: date) -> datetime:
    """UTC instant of the submission deadline for one delivery day.

    The deadline is the challenge's wall-clock time in its reference
    timezone on the day ``target_offset_days`` before delivery. DST edge
    cases are resolved (never silently: a warning is logged).
    """
    tz = ZoneInfo(spec.reference_timezone)
    submission_day = delivery_date - timedelta(days=spec.target_offset_days)
    instant, flag = resolve_local(tz, submission_day, spec.deadline_local_time)
    if flag != "unique":
        log.warning(
            "deadline %s on %s is %s in %s; resolved to %s",
            spec.deadline_local_time,
            submission_day,
            flag,
            spec.reference_timezone,
            instant.isoformat(),
        )
    return instant


def target_timestamps(spec: ChallengeSpec, delivery_date: date) -> tuple[datetime, ...]:
    """Interval-start UTC instants covering the local delivery day.

    From local midnight inclusive to the next local midnight exclusive,
    stepped by the challenge resolution in instant space.
    """
    tz = ZoneInfo(spec.reference_timezone)
    start, _ = resolve_local(tz, delivery_date, time(0, 0))
    end, _ = resolve_local(tz, delivery_date + timedelta(days=1), time(0, 0))
    out: list[datetime] = []
    t = start
    while t < end:
        out.append(t)
        t = t + spec.resolution
    return tuple(out)


def make_event(spec: ChallengeSpec, area: str, delivery_date: date) -> ForecastEvent:
    return ForecastEvent(
        challenge_id=spec.id,
        area=area,
        delivery_date=delivery_date,
        gate_closure=gate_closure(spec, delivery_date),
        target_timestamps=target_timestamps(spec, delivery_date),
    )


def enumerate_events(spec: ChallengeSpec, from_date: date, to_date: date) -> list[ForecastEvent]:
    """One event per (delivery day, area), ordered by delivery date then area."""
    if from_date > to_date:
        raise ValueError(f"from {from_date} is after to {to_date}")
    events: list[ForecastEvent] = []
    day = from_date
    while day <= to_date:
        gate = gate_closure(spec, day)
        grid = target_timestamps(spec, day)
        for area in sorted(spec.areas):
            events.append(
                ForecastEvent(
                    challenge_id=spec.id,
                    area=area,
                    delivery_date=day,
                    gate_closure=gate,
                    target_timestamps=grid,
                )
            )
        day += timedelta(days=1)
    return events


def is_open(event: ForecastEvent, now: datetime) -> bool:
    """Strictly before the gate: a submission at the gate instant is late."""
    return now < event.gate_closure

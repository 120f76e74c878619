"""Versioned ground-truth ingestion and scoreability decisions.

Observations are append-only: revisions add versions, nothing is ever
overwritten, so any past view can be replayed. The version instant of a
first ingestion is the observation's *publication* instant (interval end
plus the source's publication lag), not the wall time the fetch happened
to run; that keeps views and version hashes deterministic no matter when
ticks fire. Revisions are stamped with the ingestion clock.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Iterable

from .config import ChallengeSpec, SourceKind, SourceRef
from .temporal import ForecastEvent

if TYPE_CHECKING:  # pragma: no cover
    from .store import ArenaStore

UTC = timezone.utc
log = logging.getLogger(__name__)

PARSE_FAILURE_THRESHOLD = 0.05
STALE_GRACE = timedelta(hours=72)
RETRY_CAP = timedelta(minutes=60)


class SourceUnavailable(Exception):
    """Transient fetch failure; the scheduler retries with backoff."""


class ParseError(Exception):
    pass


@dataclass(frozen=True)
class Observation:
    area: str
    timestamp: datetime
    value: float
    version_at: datetime
    source: str

    def to_dict(self) -> dict:
        return {
            "area": self.area,
            "timestamp": self.timestamp.isoformat(),
            "value": self.value,
            "version_at": self.version_at.isoformat(),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        return cls(
            area=d["area"],
            timestamp=datetime.fromisoformat(d["timestamp"]),
            value=float(d["value"]),
            version_at=datetime.fromisoformat(d["version_at"]),
            source=d["source"],
        )


@dataclass(frozen=True)
class GroundTruthView:
    """Latest-version values on one event's grid as of a given instant."""

    event_key: tuple[str, str, str]
    values: tuple[float | None, ...]
    completeness: float
    version_id: str

    @property
    def complete(self) -> bool:
        return self.completeness == 1.0


def parse_observation_csv(
    text: str, area: str, frm: datetime | None = None, to: datetime | None = None
) -> list[tuple[datetime, float]]:
    """Parse ``area,timestamp_utc,value`` rows for one area and window.

    Non-finite values and rows outside [frm, to) are dropped (count
    logged); a missing bound is unbounded. Malformed rows beyond the 5%
    threshold abort the batch.
    """
    rows: list[tuple[datetime, float]] = []
    malformed = 0
    dropped = 0
    total = 0
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or (lineno == 1 and row[0].strip().lower() == "area"):
            continue
        total += 1
        try:
            row_area, ts_text, value_text = row[0].strip(), row[1].strip(), row[2].strip()
            ts = datetime.fromisoformat(ts_text.replace("Z", "+00:00"))
            if ts.tzinfo is None:
                ts = ts.replace(tzinfo=UTC)
            ts = ts.astimezone(UTC)
            value = float(value_text)
        except (IndexError, ValueError):
            malformed += 1
            continue
        if row_area != area:
            continue
        out_of_window = (frm is not None and ts < frm) or (to is not None and ts >= to)
        if not math.isfinite(value) or out_of_window:
            dropped += 1
            continue
        rows.append((ts, value))
    if total and malformed / total > PARSE_FAILURE_THRESHOLD:
        raise ParseError(f"{malformed}/{total} rows malformed, batch aborted")
    if dropped or malformed:
        log.info("dropped %d out-of-window/non-finite rows, %d malformed", dropped, malformed)
    return rows


def fetch(
    source: SourceRef,
    area: str,
    frm: datetime,
    to: datetime,
    http_get: Callable[[str], str] | None = None,
) -> list[tuple[datetime, float]]:
    """Raw (timestamp, value) rows from the configured source, UTC, in-window."""
    if source.kind is SourceKind.FILE_FIXTURE:
        path = Path(source.location)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SourceUnavailable(f"fixture {path} unreadable: {exc}") from exc
        return parse_observation_csv(text, area, frm, to)

    url = (
        source.location.replace("{area}", area)
        .replace("{from}", frm.isoformat())
        .replace("{to}", to.isoformat())
    )
    getter = http_get if http_get is not None else _requests_get
    try:
        body = getter(url)
    except SourceUnavailable:
        raise
    except Exception as exc:
        raise SourceUnavailable(f"GET {url} failed: {exc}") from exc
    return parse_observation_csv(body, area, frm, to)


def _requests_get(url: str) -> str:
    import requests

    response = requests.get(url, timeout=30)
    if response.status_code != 200:
        raise SourceUnavailable(f"GET {url} -> {response.status_code}")
    return response.text


def version_hash(versions: Iterable[tuple[datetime, datetime]]) -> str:
    """Deterministic id for a (timestamp -> version_at) map."""
    digest = hashlib.sha256()
    for ts, version_at in sorted(versions):
        digest.update(f"{ts.isoformat()}={version_at.isoformat()}\n".encode())
    return digest.hexdigest()[:16]


@dataclass
class _RetryState:
    attempts: int = 0
    next_attempt_at: datetime | None = None


class IngestService:
    """Fetch, version, and expose ground truth for one deployment."""

    def __init__(self, store: "ArenaStore", http_get: Callable[[str], str] | None = None):
        self.store = store
        self.http_get = http_get
        self._retry: dict[tuple, _RetryState] = {}

    # -- ingestion ---------------------------------------------------------

    def upsert(
        self,
        spec: ChallengeSpec,
        area: str,
        rows: Iterable[tuple[datetime, float]],
        now: datetime,
    ) -> int:
        """Write new versions for changed values; identical re-ingestion is a no-op.

        First versions carry the publication instant; revisions carry the
        ingestion clock (kept strictly increasing per key).
        """
        source_id = spec.ground_truth_source.identity()
        lag = spec.ground_truth_source.publication_lag
        new_versions = 0
        for ts, value in rows:
            versions = self.store.observation_versions(source_id, area, ts)
            if versions:
                latest = versions[-1]
                if abs(value - latest.value) <= 1e-9:
                    continue
                version_at = max(now, latest.version_at + timedelta(microseconds=1))
            else:
                version_at = ts + spec.resolution + lag
            self.store.append_observation(
                Observation(area=area, timestamp=ts, value=value, version_at=version_at, source=source_id)
            )
            new_versions += 1
        return new_versions

    def ingest_event(self, spec: ChallengeSpec, event: ForecastEvent, now: datetime) -> int:
        """Fetch and upsert one event's delivery window, honoring retry backoff."""
        retry_key = (spec.ground_truth_source.identity(), event.area, event.delivery_date)
        state = self._retry.setdefault(retry_key, _RetryState())
        if state.next_attempt_at is not None and now < state.next_attempt_at:
            return 0
        frm = event.target_timestamps[0]
        to = event.period_end
        try:
            rows = fetch(spec.ground_truth_source, event.area, frm, to, http_get=self.http_get)
        except SourceUnavailable as exc:
            state.attempts += 1
            backoff = min(RETRY_CAP, timedelta(minutes=2 ** (state.attempts - 1)))
            state.next_attempt_at = now + backoff
            log.warning("fetch failed (%s); retry in %s", exc, backoff)
            return 0
        state.attempts = 0
        state.next_attempt_at = None
        return self.upsert(spec, event.area, rows, now)

    # -- views -------------------------------------------------------------

    def view(self, spec: ChallengeSpec, event: ForecastEvent, as_of: datetime) -> GroundTruthView:
        """Latest versions with version_at <= as_of on the event grid."""
        source_id = spec.ground_truth_source.identity()
        values: list[float | None] = []
        versions: list[tuple[datetime, datetime]] = []
        present = 0
        for ts in event.target_timestamps:
            chosen = None
            for obs in self.store.observation_versions(source_id, event.area, ts):
                if obs.version_at <= as_of:
                    chosen = obs
                else:
                    break
            if chosen is None:
                values.append(None)
            else:
                values.append(chosen.value)
                versions.append((ts, chosen.version_at))
                present += 1
        return GroundTruthView(
            event_key=event.key,
            values=tuple(values),
            completeness=present / event.n_slots,
            version_id=version_hash(versions),
        )

    # -- scoring triggers ----------------------------------------------------

    def is_frozen(self, spec: ChallengeSpec, event: ForecastEvent, as_of: datetime) -> bool:
        return event.period_end + spec.freeze_after <= as_of

    def is_stale(self, spec: ChallengeSpec, event: ForecastEvent, as_of: datetime) -> bool:
        """Past the retry horizon with ground truth still incomplete."""
        horizon = event.period_end + spec.ground_truth_source.publication_lag + STALE_GRACE
        return as_of > horizon and not self.view(spec, event, as_of).complete

    def rescore_candidates(
        self,
        spec: ChallengeSpec,
        events: Iterable[ForecastEvent],
        last_scored: dict[tuple[str, str, str], str],
        as_of: datetime,
    ) -> list[ForecastEvent]:
        """Previously scored events whose truth changed, still inside the freeze horizon."""
        out: list[ForecastEvent] = []
        for event in events:
            scored_version = last_scored.get(event.key)
            if scored_version is None:
                continue
            if self.is_frozen(spec, event, as_of):
                continue
            if self.view(spec, event, as_of).version_id != scored_version:
                out.append(event)
        return out

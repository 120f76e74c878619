"""Deployment wiring and the ingest -> score -> leaderboard tick pipeline.

A tick is idempotent: re-running with the same clock reading ingests no
new observation versions, finds no version changes, and therefore scores
nothing. Ticks are mutually exclusive; leaderboard caching is invalidated
whenever new score records appear.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import threading
import time as _time
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta
from typing import Callable, Iterable
from zoneinfo import ZoneInfo

from .clock import Clock, SystemClock
from .config import ChallengeSpec, SourceKind
from .gateway import SubmissionGateway, UnknownEventError
from .ingest import IngestService, parse_observation_csv
from .leaderboard import LeaderboardRow, LeaderboardWindow, query, rows_to_csv
from .scoring import score_event
from .store import ArenaStore
from .temporal import ForecastEvent, make_event

log = logging.getLogger(__name__)

_LB_CACHE_MAX = 128


@dataclass(frozen=True)
class TickReport:
    as_of: datetime
    events_ingested: int = 0
    events_scored: int = 0
    events_rescored: int = 0
    stale_events: int = 0
    duration_seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["as_of"] = self.as_of.isoformat()
        return d


class Arena:
    """One deployment: challenge registry, store, clock, and pipelines."""

    def __init__(
        self,
        specs: Iterable[ChallengeSpec],
        store: ArenaStore,
        clock: Clock | None = None,
        http_get: Callable[[str], str] | None = None,
    ):
        self.specs: dict[str, ChallengeSpec] = {s.id: s for s in specs}
        self.store = store
        self.clock = clock if clock is not None else SystemClock()
        store.attach_registry(self.specs.values())
        self.gateway = SubmissionGateway(store, self.clock)
        self.ingest = IngestService(store, http_get=http_get)
        self._tick_lock = threading.Lock()
        self._lb_cache: dict[tuple, tuple[LeaderboardWindow, list[LeaderboardRow]]] = {}

    # -- events ----------------------------------------------------------------

    def spec(self, challenge_id: str) -> ChallengeSpec:
        spec = self.specs.get(challenge_id)
        if spec is None:
            raise UnknownEventError(f"unknown challenge {challenge_id!r}")
        return spec

    def resolve_event(self, challenge_id: str, area: str, delivery: date) -> ForecastEvent:
        spec = self.spec(challenge_id)
        if area not in spec.areas:
            raise UnknownEventError(f"unknown area {area!r} for challenge {challenge_id!r}")
        return make_event(spec, area, delivery)

    def _candidate_dates(self, spec: ChallengeSpec, area: str, as_of: datetime) -> list[date]:
        """Delivery days with any trace of activity: fixture rows, submissions,
        or previously ingested observations."""
        tz = ZoneInfo(spec.reference_timezone)
        dates: set[date] = set()

        source = spec.ground_truth_source
        if source.kind is SourceKind.FILE_FIXTURE:
            span = _fixture_span(source.location, area)
            if span is not None:
                day = span[0].astimezone(tz).date()
                last = span[1].astimezone(tz).date()
                while day <= last:
                    dates.add(day)
                    day += timedelta(days=1)

        for sub in self.store.submissions:
            if sub.challenge_id == spec.id and sub.area == area:
                dates.add(date.fromisoformat(sub.delivery_date))

        for ts in self.store.observed_timestamps(source.identity(), area):
            dates.add(ts.astimezone(tz).date())

        horizon = as_of.astimezone(tz).date()
        return sorted(d for d in dates if d <= horizon)

    # -- tick --------------------------------------------------------------------

    def tick(self, as_of: datetime | None = None) -> TickReport:
        """Run fetch -> upsert -> score/rescore across every challenge and area."""
        started = _time.perf_counter()
        now = as_of if as_of is not None else self.clock.now()
        ingested = scored = rescored = stale = 0

        with self._tick_lock:
            for spec in self.specs.values():
                lag = spec.ground_truth_source.publication_lag
                for area in sorted(spec.areas):
                    for day in self._candidate_dates(spec, area, now):
                        event = make_event(spec, area, day)
                        scored_versions = self.store.last_scored_versions()
                        already = event.key in scored_versions
                        frozen = self.ingest.is_frozen(spec, event, now)
                        if already and frozen:
                            continue
                        if now < event.period_end + lag:
                            continue
                        if self.ingest.ingest_event(spec, event, now) > 0:
                            ingested += 1
                        view = self.ingest.view(spec, event, now)
                        if not view.complete:
                            if self.ingest.is_stale(spec, event, now):
                                stale += 1
                                log.warning("stale event %s: completeness %.2f", event.key, view.completeness)
                            continue
                        if not already:
                            self._score(spec, event, view, now)
                            scored += 1
                        elif scored_versions[event.key] != view.version_id:
                            self._score(spec, event, view, now)
                            rescored += 1

        if scored or rescored:
            self._lb_cache.clear()
        return TickReport(
            as_of=now,
            events_ingested=ingested,
            events_scored=scored,
            events_rescored=rescored,
            stale_events=stale,
            duration_seconds=_time.perf_counter() - started,
        )

    def _score(self, spec: ChallengeSpec, event: ForecastEvent, view, now: datetime) -> None:
        submissions = self.gateway.effective_submissions(event.key)
        records = score_event(spec, event, submissions, view, scored_at=now)
        self.store.add_score_records(records)
        self.store.mark_scored(event.key, view.version_id, now)

    # -- leaderboards ---------------------------------------------------------------

    def leaderboard(
        self,
        challenge_id: str,
        area: str,
        n: int,
        as_of: datetime | None = None,
        sort_metric: str | None = None,
        data_regime: str | None = None,
    ) -> tuple[LeaderboardWindow, list[LeaderboardRow]]:
        as_of = as_of if as_of is not None else self.clock.now()
        key = (challenge_id, area, n, as_of, sort_metric, data_regime)
        cached = self._lb_cache.get(key)
        if cached is not None:
            return cached
        result = query(
            self.store,
            self.spec(challenge_id),
            area,
            n,
            as_of,
            sort_metric=sort_metric,
            data_regime=data_regime,
        )
        if len(self._lb_cache) >= _LB_CACHE_MAX:
            self._lb_cache.pop(next(iter(self._lb_cache)))
        self._lb_cache[key] = result
        return result

    def series(
        self,
        challenge_id: str,
        area: str,
        from_date: date,
        to_date: date,
        participant_ids: list[str],
        as_of: datetime | None = None,
    ) -> dict:
        """Forecast trajectories plus ground truth, public participants only."""
        as_of = as_of if as_of is not None else self.clock.now()
        spec = self.spec(challenge_id)
        if area not in spec.areas:
            raise UnknownEventError(f"unknown area {area!r}")

        included: list[str] = []
        excluded: list[str] = []
        for pid in participant_ids:
            participant = self.store.participants.get(pid)
            if participant is not None and participant.forecasts_public:
                included.append(pid)
            else:
                excluded.append(pid)

        timestamps: list[str] = []
        truth: list[float | None] = []
        forecasts: dict[str, list[float | None]] = {pid: [] for pid in included}
        day = from_date
        while day <= to_date:
            event = make_event(spec, area, day)
            view = self.ingest.view(spec, event, as_of)
            from .scoring import derived_point_series

            day_series: dict[str, list[float | None]] = {}
            for pid in included:
                sub = self.gateway.effective_submission(pid, event.key)
                series = derived_point_series(sub) if sub is not None else None
                day_series[pid] = (
                    [float(v) for v in series] if series is not None else [None] * event.n_slots
                )
            for i, ts in enumerate(event.target_timestamps):
                timestamps.append(ts.isoformat())
                truth.append(view.values[i])
                for pid in included:
                    forecasts[pid].append(day_series[pid][i])
            day += timedelta(days=1)

        return {
            "challenge": challenge_id,
            "area": area,
            "timestamps": timestamps,
            "ground_truth": truth,
            "forecasts": forecasts,
            "excluded_participants": sorted(excluded),
        }

    # -- operator views ----------------------------------------------------------------

    def ingest_status(self, as_of: datetime | None = None) -> list[dict]:
        as_of = as_of if as_of is not None else self.clock.now()
        rows: list[dict] = []
        for spec in self.specs.values():
            for area in sorted(spec.areas):
                for day in self._candidate_dates(spec, area, as_of):
                    event = make_event(spec, area, day)
                    view = self.ingest.view(spec, event, as_of)
                    rows.append(
                        {
                            "challenge": spec.id,
                            "area": area,
                            "delivery_date": day.isoformat(),
                            "completeness": view.completeness,
                            "stale": self.ingest.is_stale(spec, event, as_of),
                            "frozen": self.ingest.is_frozen(spec, event, as_of),
                        }
                    )
        return rows

    # -- exports --------------------------------------------------------------------------

    def export_scores(self, challenge_id: str | None = None, area: str | None = None) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(
            ["participant", "challenge", "area", "delivery_date", "metric", "value", "ground_truth_version", "scored_at"]
        )
        for record in self.store.score_records:
            if challenge_id is not None and record.challenge_id != challenge_id:
                continue
            if area is not None and record.area != area:
                continue
            writer.writerow(
                [
                    record.participant_id,
                    record.challenge_id,
                    record.area,
                    record.delivery_date,
                    record.metric,
                    repr(record.value),
                    record.ground_truth_version,
                    record.scored_at.isoformat(),
                ]
            )
        return out.getvalue()

    def export_leaderboard(
        self,
        challenge_id: str,
        area: str,
        n: int,
        as_of: datetime | None = None,
        sort_metric: str | None = None,
        data_regime: str | None = None,
    ) -> str:
        spec = self.spec(challenge_id)
        _, rows = self.leaderboard(
            challenge_id, area, n, as_of=as_of, sort_metric=sort_metric, data_regime=data_regime
        )
        return rows_to_csv(rows, [m.key() for m in spec.metrics])

    def export_submissions(self, include_private: bool = False) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(
            ["submission_id", "participant", "challenge", "area", "delivery_date", "received_at", "payload"]
        )
        for sub in self.store.submissions:
            participant = self.store.participants.get(sub.participant_id)
            if not include_private and (participant is None or not participant.forecasts_public):
                continue
            writer.writerow(
                [
                    sub.id,
                    sub.participant_id,
                    sub.challenge_id,
                    sub.area,
                    sub.delivery_date,
                    sub.received_at.isoformat(),
                    json.dumps(sub.payload.to_dict(), separators=(",", ":")),
                ]
            )
        return out.getvalue()

    def next_events(self, challenge_id: str, now: datetime | None = None) -> dict[str, dict]:
        """Per area, the next delivery whose gate is still open."""
        now = now if now is not None else self.clock.now()
        spec = self.spec(challenge_id)
        tz = ZoneInfo(spec.reference_timezone)
        out: dict[str, dict] = {}
        for area in sorted(spec.areas):
            day = now.astimezone(tz).date()
            for _ in range(spec.target_offset_days + 3):
                event = make_event(spec, area, day)
                if event.gate_closure > now:
                    out[area] = {
                        "delivery_date": day.isoformat(),
                        "gate_closure": event.gate_closure.isoformat(),
                    }
                    break
                day += timedelta(days=1)
        return out


def _fixture_span(path: str, area: str) -> tuple[datetime, datetime] | None:
    """Min/max UTC timestamps present for one area in a fixture file."""
    from pathlib import Path

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        return None
    try:
        rows = parse_observation_csv(text, area)
    except Exception:
        rows = []
    if not rows:
        return None
    timestamps = [ts for ts, _ in rows]
    return min(timestamps), max(timestamps)

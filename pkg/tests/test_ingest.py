from __future__ import annotations

from datetime import date, timedelta, timezone

import pytest

from arena.config import SourceKind, SourceRef
from arena.ingest import (
    IngestService,
    ParseError,
    SourceUnavailable,
    fetch,
    parse_observation_csv,
)
from arena.store import ArenaStore
from arena.temporal import make_event
from helpers import point_spec

UTC = timezone.utc

SPEC = point_spec("unused.csv")
EVENT = make_event(SPEC, "DE", date(2025, 1, 2))
DAY_START = EVENT.target_timestamps[0]
DAY_END = EVENT.period_end


def day_csv(values, area="DE") -> str:
    lines = ["area,timestamp_utc,value"]
    for ts, v in zip(EVENT.target_timestamps, values):
        lines.append(f"{area},{ts.isoformat()},{v}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def service():
    return IngestService(ArenaStore())


class TestParseAndFetch:
    def test_full_day_24_rows(self):
        rows = parse_observation_csv(day_csv(range(24)), "DE", DAY_START, DAY_END)
        assert len(rows) == 24

    def test_nan_row_dropped(self):
        values = list(range(24))
        values[5] = "NaN"
        rows = parse_observation_csv(day_csv(values), "DE", DAY_START, DAY_END)
        assert len(rows) == 23

    def test_out_of_window_rows_dropped(self):
        rows = parse_observation_csv(
            day_csv(range(24)), "DE", DAY_START, DAY_END - timedelta(hours=2)
        )
        assert len(rows) == 22

    def test_other_areas_ignored(self):
        text = day_csv(range(24), area="AT") + day_csv(range(24), area="DE").split("\n", 1)[1]
        rows = parse_observation_csv(text, "DE", DAY_START, DAY_END)
        assert len(rows) == 24

    def test_malformed_beyond_threshold_aborts(self):
        text = day_csv(range(24))
        text += "\n".join("garbage,row" for _ in range(3)) + "\n"
        with pytest.raises(ParseError):
            parse_observation_csv(text, "DE", DAY_START, DAY_END)

    def test_fixture_fetch(self, tmp_path):
        fixture = tmp_path / "truth.csv"
        fixture.write_text(day_csv(range(24)), encoding="utf-8")
        source = SourceRef(SourceKind.FILE_FIXTURE, str(fixture), timedelta(hours=1))
        rows = fetch(source, "DE", DAY_START, DAY_END)
        assert len(rows) == 24
        assert rows[0][0].tzinfo is not None

    def test_missing_fixture_is_source_unavailable(self):
        source = SourceRef(SourceKind.FILE_FIXTURE, "/nonexistent/truth.csv", timedelta(0))
        with pytest.raises(SourceUnavailable):
            fetch(source, "DE", DAY_START, DAY_END)

    def test_http_template_and_failure(self):
        calls = []

        def failing_get(url: str) -> str:
            calls.append(url)
            raise SourceUnavailable("503")

        source = SourceRef(SourceKind.HTTP, "https://x/{area}?from={from}&to={to}", timedelta(0))
        with pytest.raises(SourceUnavailable):
            fetch(source, "DE", DAY_START, DAY_END, http_get=failing_get)
        assert "DE" in calls[0] and "from=" in calls[0]

    def test_http_success_parses_body(self):
        source = SourceRef(SourceKind.HTTP, "https://x/{area}?from={from}&to={to}", timedelta(0))
        rows = fetch(source, "DE", DAY_START, DAY_END, http_get=lambda url: day_csv(range(24)))
        assert len(rows) == 24


class TestUpsert:
    def test_first_ingestion_counts_all(self, service):
        rows = [(ts, 100.0 + i) for i, ts in enumerate(EVENT.target_timestamps)]
        assert service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1)) == 24

    def test_identical_reingestion_is_noop(self, service):
        rows = [(ts, 100.0) for ts in EVENT.target_timestamps]
        service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        assert service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=2)) == 0

    def test_revision_writes_one_version(self, service):
        ts = EVENT.target_timestamps[0]
        service.upsert(SPEC, "DE", [(ts, 100.0)], now=DAY_END + timedelta(hours=1))
        assert service.upsert(SPEC, "DE", [(ts, 105.0)], now=DAY_END + timedelta(days=1)) == 1
        versions = service.store.observation_versions(
            SPEC.ground_truth_source.identity(), "DE", ts
        )
        assert [v.value for v in versions] == [100.0, 105.0]
        assert versions[0].version_at < versions[1].version_at

    def test_sub_tolerance_revision_ignored(self, service):
        ts = EVENT.target_timestamps[0]
        service.upsert(SPEC, "DE", [(ts, 100.0)], now=DAY_END + timedelta(hours=1))
        assert service.upsert(SPEC, "DE", [(ts, 100.0 + 1e-12)], now=DAY_END + timedelta(days=1)) == 0

    def test_first_version_carries_publication_instant(self, service):
        ts = EVENT.target_timestamps[3]
        late = DAY_END + timedelta(days=5)  # ingested very late
        service.upsert(SPEC, "DE", [(ts, 100.0)], now=late)
        versions = service.store.observation_versions(
            SPEC.ground_truth_source.identity(), "DE", ts
        )
        expected = ts + SPEC.resolution + SPEC.ground_truth_source.publication_lag
        assert versions[0].version_at == expected


class TestView:
    def _ingest_full_day(self, service, now=None):
        rows = [(ts, 100.0 + i) for i, ts in enumerate(EVENT.target_timestamps)]
        service.upsert(SPEC, "DE", rows, now=now or DAY_END + timedelta(hours=1))

    def test_complete_view(self, service):
        self._ingest_full_day(service)
        view = service.view(SPEC, EVENT, as_of=DAY_END + timedelta(hours=2))
        assert view.completeness == 1.0
        assert view.values[5] == 105.0

    def test_half_ingested(self, service):
        rows = [(ts, 1.0) for ts in EVENT.target_timestamps[:12]]
        service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        view = service.view(SPEC, EVENT, as_of=DAY_END + timedelta(hours=2))
        assert view.completeness == 0.5

    def test_as_of_before_any_ingestion(self, service):
        self._ingest_full_day(service)
        view = service.view(SPEC, EVENT, as_of=DAY_START - timedelta(days=1))
        assert view.completeness == 0.0
        assert all(v is None for v in view.values)

    def test_publication_lag_gates_visibility(self, service):
        self._ingest_full_day(service)
        # At mid-day only the slots whose interval ended lag-ago are visible.
        mid = EVENT.target_timestamps[12] + timedelta(minutes=45)  # lag is 30m
        view = service.view(SPEC, EVENT, as_of=mid)
        assert 0.0 < view.completeness < 1.0
        visible = sum(1 for v in view.values if v is not None)
        assert visible == 12  # slots 0..11 ended and published; slot 12 still open

    def test_version_id_deterministic_across_stores(self, tmp_path):
        a, b = IngestService(ArenaStore()), IngestService(ArenaStore())
        rows = [(ts, 100.0 + i) for i, ts in enumerate(EVENT.target_timestamps)]
        a.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        b.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(days=9))  # different wall time
        as_of = DAY_END + timedelta(days=10)
        assert a.view(SPEC, EVENT, as_of).version_id == b.view(SPEC, EVENT, as_of).version_id

    def test_time_travel_view_stable_after_revision(self, service):
        self._ingest_full_day(service)
        before_revision = DAY_END + timedelta(hours=3)
        snapshot = service.view(SPEC, EVENT, before_revision)
        ts = EVENT.target_timestamps[0]
        service.upsert(SPEC, "DE", [(ts, 999.0)], now=DAY_END + timedelta(days=2))
        replay = service.view(SPEC, EVENT, before_revision)
        assert replay == snapshot
        after = service.view(SPEC, EVENT, DAY_END + timedelta(days=3))
        assert after.values[0] == 999.0
        assert after.version_id != snapshot.version_id


class TestRescoreCandidates:
    def _scored_setup(self, service):
        rows = [(ts, 100.0) for ts in EVENT.target_timestamps]
        service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        scored_at = DAY_END + timedelta(hours=6)
        version = service.view(SPEC, EVENT, scored_at).version_id
        return {EVENT.key: version}

    def test_revision_inside_freeze_listed(self, service):
        last_scored = self._scored_setup(service)
        revision_at = DAY_END + timedelta(days=3)
        service.upsert(SPEC, "DE", [(EVENT.target_timestamps[0], 105.0)], now=revision_at)
        out = service.rescore_candidates(SPEC, [EVENT], last_scored, as_of=revision_at)
        assert out == [EVENT]

    def test_revision_past_freeze_not_listed(self, service):
        last_scored = self._scored_setup(service)
        revision_at = DAY_END + timedelta(days=20)  # freeze is 14 days
        service.upsert(SPEC, "DE", [(EVENT.target_timestamps[0], 105.0)], now=revision_at)
        out = service.rescore_candidates(SPEC, [EVENT], last_scored, as_of=revision_at)
        assert out == []

    def test_no_revisions_empty(self, service):
        last_scored = self._scored_setup(service)
        out = service.rescore_candidates(SPEC, [EVENT], last_scored, as_of=DAY_END + timedelta(days=1))
        assert out == []

    def test_never_scored_not_listed(self, service):
        rows = [(ts, 100.0) for ts in EVENT.target_timestamps]
        service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        out = service.rescore_candidates(SPEC, [EVENT], {}, as_of=DAY_END + timedelta(days=1))
        assert out == []


class TestRetryAndStale:
    def test_backoff_skips_until_next_attempt(self, tmp_path):
        service = IngestService(ArenaStore())
        from dataclasses import replace

        spec = replace(
            SPEC,
            ground_truth_source=SourceRef(
                SourceKind.FILE_FIXTURE, str(tmp_path / "missing.csv"), timedelta(minutes=30)
            ),
        )
        t0 = DAY_END + timedelta(hours=1)
        assert service.ingest_event(spec, EVENT, now=t0) == 0
        state = next(iter(service._retry.values()))
        assert state.attempts == 1
        assert state.next_attempt_at == t0 + timedelta(minutes=1)
        # Within the backoff window nothing is attempted.
        assert service.ingest_event(spec, EVENT, now=t0 + timedelta(seconds=30)) == 0
        assert state.attempts == 1
        # After it, another attempt is made and the backoff doubles.
        assert service.ingest_event(spec, EVENT, now=t0 + timedelta(minutes=2)) == 0
        assert service._retry[next(iter(service._retry))].attempts == 2

    def test_backoff_caps_at_60_minutes(self, tmp_path):
        service = IngestService(ArenaStore())
        from dataclasses import replace

        spec = replace(
            SPEC,
            ground_truth_source=SourceRef(
                SourceKind.FILE_FIXTURE, str(tmp_path / "missing.csv"), timedelta(minutes=30)
            ),
        )
        t = DAY_END + timedelta(hours=1)
        for i in range(10):
            service.ingest_event(spec, EVENT, now=t)
            state = next(iter(service._retry.values()))
            t = state.next_attempt_at
        assert state.next_attempt_at - t <= timedelta(minutes=60)

    def test_stale_after_72h_grace(self, service):
        assert not service.is_stale(SPEC, EVENT, DAY_END + timedelta(hours=71))
        assert service.is_stale(SPEC, EVENT, DAY_END + timedelta(hours=73))

    def test_complete_event_never_stale(self, service):
        rows = [(ts, 100.0) for ts in EVENT.target_timestamps]
        service.upsert(SPEC, "DE", rows, now=DAY_END + timedelta(hours=1))
        assert not service.is_stale(SPEC, EVENT, DAY_END + timedelta(days=30))

from __future__ import annotations

import json
from datetime import date, datetime, time, timedelta, timezone

import numpy as np
import pytest

from arena import leaderboard as lb
from arena.clock import ManualClock
from arena.gateway import ForecastPayload
from arena.service import Arena
from arena.store import ArenaStore
from arena.temporal import make_event
from helpers import (
    FIRST_DELIVERY,
    build_history,
    naive_rank,
    naive_window_metrics,
    point_spec,
    write_fixture,
)

UTC = timezone.utc


def make_row(pid, mae=None, coverage=1.0, regime="UNDECLARED"):
    metrics = {} if mae is None else {"MAE": mae}
    return lb.LeaderboardRow(
        participant_id=pid, display_name=pid, metrics=metrics, coverage=coverage, data_regime=regime
    )


class TestRank:
    def test_two_rows(self):
        rows = lb.rank([make_row("B", 2.0), make_row("A", 1.0)], "MAE")
        assert [(r.participant_id, r.rank) for r in rows] == [("A", 1), ("B", 2)]

    def test_competition_ranking_on_ties(self):
        rows = lb.rank([make_row("A", 1.0), make_row("B", 1.0), make_row("C", 2.0)], "MAE")
        assert [(r.participant_id, r.rank) for r in rows] == [("A", 1), ("B", 1), ("C", 3)]

    def test_partial_coverage_unranked_regardless_of_value(self):
        rows = lb.rank(
            [make_row("A", 5.0), make_row("C", 0.001, coverage=0.5), make_row("B", 7.0)], "MAE"
        )
        assert [(r.participant_id, r.rank) for r in rows] == [("A", 1), ("B", 2), ("C", None)]

    def test_unranked_ordered_by_coverage_desc(self):
        rows = lb.rank(
            [make_row("A", 1.0), make_row("X", 1.0, coverage=0.25), make_row("Y", 1.0, coverage=0.75)],
            "MAE",
        )
        assert [r.participant_id for r in rows] == ["A", "Y", "X"]

    def test_missing_sort_metric_unranked(self):
        rows = lb.rank([make_row("A", 1.0), make_row("B", None)], "MAE")
        assert rows[-1].participant_id == "B"
        assert rows[-1].rank is None


class FrozenHistory:
    """History fixture shared across leaderboard tests (built once)."""

    _cache = None

    @classmethod
    def get(cls, tmp_path_factory):
        if cls._cache is None:
            rng = np.random.default_rng(2024)
            tmp = tmp_path_factory.mktemp("history")
            cls._cache = build_history(tmp, rng, days=12, n_participants=4)
        return cls._cache


@pytest.fixture
def history(tmp_path_factory):
    return FrozenHistory.get(tmp_path_factory)


class TestAggregate:
    def _window(self, history, n):
        return lb.build_window(
            history.arena.store, history.spec, "DE", n, history.as_of
        )

    def test_window_is_last_n_scored_days(self, history):
        window = self._window(history, 7)
        assert len(window.delivery_dates) == 7
        assert window.delivery_dates[-1] == history.delivery_days[-1]

    def test_uniform_errors_pool_to_exact_value(self, tmp_path):
        # Two days of constant absolute error 1 -> pooled MAE exactly 1.
        result = _constant_error_history(tmp_path, day_errors=[1.0, 1.0])
        assert result == pytest.approx(1.0, abs=0.0)

    def test_unequal_days_pool_by_slots(self, tmp_path):
        # day1 all-1 errors, day2 all-3 errors, equal slot counts -> 2.
        result = _constant_error_history(tmp_path, day_errors=[1.0, 3.0])
        assert result == pytest.approx(2.0, abs=1e-12)

    def test_dst_day_weighted_pooling(self, tmp_path):
        # 23-slot DST day with zero error + 24-slot day with error 1 -> 24/47.
        result = _constant_error_history(
            tmp_path,
            day_errors=[0.0, 1.0],
            tz="Europe/Berlin",
            first_delivery=date(2025, 3, 30),
        )
        assert result == pytest.approx(24.0 / 47.0, abs=1e-12)

    def test_matches_naive_recomputation(self, history):
        spec = history.spec
        for n in (1, 7):
            window = self._window(history, n)
            window_days = list(window.delivery_dates)
            naive = naive_window_metrics(history, "DE", window_days)
            for metric in spec.metrics:
                values = lb.aggregate(history.arena.store, spec, window, metric)
                for pid, value in values.items():
                    assert value == pytest.approx(naive[pid][metric.key()], abs=1e-12)

    def test_single_day_window_equals_event_scalar(self, history):
        window = self._window(history, 1)
        day = window.delivery_dates[0]
        event_key = (history.spec.id, "DE", day.isoformat())
        records = history.arena.store.latest_scores_for_event(event_key)
        values = lb.aggregate(history.arena.store, history.spec, window, history.spec.metrics[0])
        for pid, value in values.items():
            assert value == records[(pid, "MAE")].value

    def test_unscored_event_rejected(self, history):
        window = lb.LeaderboardWindow(
            challenge_id=history.spec.id,
            area="DE",
            n=1,
            as_of=history.as_of,
            delivery_dates=(history.delivery_days[-1] + timedelta(days=30),),
        )
        with pytest.raises(lb.UnscoredEventError):
            lb.aggregate(history.arena.store, history.spec, window, history.spec.metrics[0])


class TestQuery:
    def test_regime_filter(self, history):
        _, rows = lb.query(
            history.arena.store, history.spec, "DE", 7, history.as_of, data_regime="PUBLIC_ONLY"
        )
        assert rows
        assert all(r.data_regime == "PUBLIC_ONLY" for r in rows)

    def test_unknown_window(self, history):
        with pytest.raises(lb.UnknownWindowError):
            lb.query(history.arena.store, history.spec, "DE", 13, history.as_of)

    def test_unknown_area(self, history):
        with pytest.raises(lb.UnknownAreaError):
            lb.query(history.arena.store, history.spec, "XX", 7, history.as_of)

    def test_deterministic_pages(self, history):
        one = lb.query(history.arena.store, history.spec, "DE", 7, history.as_of)
        two = lb.query(history.arena.store, history.spec, "DE", 7, history.as_of)
        as_json = lambda page: json.dumps([r.to_dict() for r in page[1]], sort_keys=True)
        assert as_json(one) == as_json(two)

    def test_display_rounding_applied(self, history):
        _, rows = lb.query(history.arena.store, history.spec, "DE", 7, history.as_of)
        for row in rows:
            for value in row.metrics.values():
                assert value == round(value, 4)

    def test_rank_invariance_under_error_scaling(self, tmp_path):
        # Scaling every participant's errors by the same positive constant
        # leaves the MAE/RMSE ranking permutation unchanged.
        base = _scaled_error_leaderboard(tmp_path / "a", scale=1.0)
        scaled = _scaled_error_leaderboard(tmp_path / "b", scale=7.5)
        assert [r.participant_id for r in base] == [r.participant_id for r in scaled]
        assert [r.rank for r in base] == [r.rank for r in scaled]


class TestFreezeStability:
    def test_rows_stable_once_window_frozen(self, history):
        spec = history.spec
        window, rows = lb.query(history.arena.store, spec, "DE", 7, history.as_of)
        later = history.as_of + spec.freeze_after + timedelta(days=30)
        window2, rows2 = lb.query(history.arena.store, spec, "DE", 7, later)
        assert window.delivery_dates == window2.delivery_dates
        assert json.dumps([r.to_dict() for r in rows]) == json.dumps([r.to_dict() for r in rows2])


def _constant_error_history(
    tmp_path, day_errors, tz="UTC", first_delivery=FIRST_DELIVERY
) -> float:
    """Pooled MAE of one participant whose per-day absolute error is constant."""
    tmp_path.mkdir(parents=True, exist_ok=True)
    fixture = tmp_path / "truth.csv"
    spec = point_spec(fixture, tz=tz, windows=(1, 2, 7, 30))
    days = [first_delivery + timedelta(days=i) for i in range(len(day_errors))]
    truth = {}
    for day in days:
        event = make_event(spec, "DE", day)
        truth[("DE", day)] = np.full(event.n_slots, 100.0)

    lines = ["area,timestamp_utc,value"]
    for (area, day), values in sorted(truth.items()):
        event = make_event(spec, area, day)
        for ts, value in zip(event.target_timestamps, values):
            lines.append(f"{area},{ts.isoformat()},{float(value)!r}")
    fixture.write_text("\n".join(lines) + "\n", encoding="utf-8")

    store = ArenaStore()
    clock = ManualClock(datetime.combine(days[0] - timedelta(days=1), time(0, 0), UTC))
    arena = Arena([spec], store, clock)
    participant = arena.gateway.create_participant("solo")

    for day, error in zip(days, day_errors):
        event = make_event(spec, "DE", day)
        gate = event.gate_closure
        clock.set(gate - timedelta(hours=1))
        series = truth[("DE", day)] + error
        arena.gateway.accept_submission(
            participant, event, ForecastPayload(point=tuple(float(v) for v in series))
        )
    clock.set(datetime.combine(days[-1] + timedelta(days=1), time(6, 0), UTC))
    arena.tick()

    window = lb.build_window(store, spec, "DE", len(days), clock.now())
    values = lb.aggregate(store, spec, window, spec.metrics[0])
    return values[participant.id]


def _scaled_error_leaderboard(tmp_path, scale: float):
    tmp_path.mkdir(parents=True, exist_ok=True)
    fixture = tmp_path / "truth.csv"
    spec = point_spec(fixture, windows=(1, 3, 7))
    days = [FIRST_DELIVERY + timedelta(days=i) for i in range(3)]
    rng = np.random.default_rng(5)
    truth = {("DE", day): 100.0 + rng.uniform(-10, 10, size=24) for day in days}
    write_fixture(fixture, spec, truth)

    store = ArenaStore()
    clock = ManualClock(datetime.combine(days[0] - timedelta(days=1), time(0, 0), UTC))
    arena = Arena([spec], store, clock)
    errors = {"alpha": 1.0, "beta": 3.0, "gamma": 2.0}
    participants = {
        name: arena.gateway.create_participant(name) for name in errors
    }
    for day in days:
        event = make_event(spec, "DE", day)
        clock.set(event.gate_closure - timedelta(hours=1))
        for name, base_error in errors.items():
            series = truth[("DE", day)] + base_error * scale
            arena.gateway.accept_submission(
                participants[name], event, ForecastPayload(point=tuple(float(v) for v in series))
            )
    clock.set(datetime.combine(days[-1] + timedelta(days=1), time(6, 0), UTC))
    arena.tick()
    _, rows = lb.query(store, spec, "DE", 3, clock.now())
    return rows


class TestNaiveRankAgreement:
    def test_rank_vectors_match_naive(self, history):
        spec = history.spec
        window, rows = lb.query(history.arena.store, spec, "DE", 7, history.as_of)
        window_days = list(window.delivery_dates)
        naive_values = naive_window_metrics(history, "DE", window_days)
        coverage = {
            pid: sum(1 for d in window_days if (pid, "DE", d) in history.submitted) / len(window_days)
            for pid in history.participants
        }
        expected = naive_rank(
            {pid: vals["MAE"] for pid, vals in naive_values.items()}, coverage
        )
        actual = {r.participant_id: r.rank for r in rows}
        assert actual == expected

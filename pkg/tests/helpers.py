"""Shared builders for synthetic deployments and histories."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np

from arena.clock import ManualClock
from arena.config import ChallengeSpec, MetricName, MetricSpec, PayloadKind, SourceKind, SourceRef
from arena.gateway import ForecastPayload, Participant
from arena.service import Arena
from arena.store import ArenaStore
from arena.temporal import make_event

UTC = timezone.utc

FIRST_DELIVERY = date(2025, 1, 2)


def point_spec(
    fixture_path: str | Path,
    areas: tuple[str, ...] = ("DE",),
    windows: tuple[int, ...] = (1, 7, 30),
    tz: str = "UTC",
    publication_lag: timedelta = timedelta(minutes=30),
    freeze_after: timedelta = timedelta(days=14),
    value_range: tuple[float, float] = (-1000.0, 1000.0),
) -> ChallengeSpec:
    return ChallengeSpec(
        id="test-load",
        title="Test day-ahead load",
        target_variable="load",
        areas=areas,
        reference_timezone=tz,
        deadline_local_time=time(12, 0),
        resolution=timedelta(hours=1),
        payload_kinds=frozenset({PayloadKind.POINT}),
        value_range=value_range,
        metrics=(MetricSpec(MetricName.MAE), MetricSpec(MetricName.RMSE)),
        windows=windows,
        ground_truth_source=SourceRef(
            kind=SourceKind.FILE_FIXTURE,
            location=str(fixture_path),
            publication_lag=publication_lag,
        ),
        freeze_after=freeze_after,
    )


def write_fixture(path: Path, spec: ChallengeSpec, truth: dict[tuple[str, date], np.ndarray]) -> None:
    lines = ["area,timestamp_utc,value"]
    for (area, day), values in sorted(truth.items()):
        event = make_event(spec, area, day)
        for ts, value in zip(event.target_timestamps, values):
            lines.append(f"{area},{ts.isoformat()},{float(value)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class History:
    """A fully scored synthetic deployment plus the raw data that built it."""

    arena: Arena
    spec: ChallengeSpec
    delivery_days: list[date]
    participants: dict[str, Participant]
    truth: dict[tuple[str, date], np.ndarray]
    forecasts: dict[tuple[str, str, date], np.ndarray]  # (pid, area, day) -> series
    submitted: set[tuple[str, str, date]] = field(default_factory=set)
    as_of: datetime | None = None


def build_history(
    tmp_path: Path,
    rng: np.random.Generator,
    days: int = 10,
    n_participants: int = 3,
    areas: tuple[str, ...] = ("DE",),
    submit_probability: float = 1.0,
    windows: tuple[int, ...] = (1, 7, 30),
) -> History:
    """Random truth and forecasts pushed through the real pipeline day by day."""
    fixture = tmp_path / "truth.csv"
    spec = point_spec(fixture, areas=areas, windows=windows)
    delivery_days = [FIRST_DELIVERY + timedelta(days=i) for i in range(days)]

    truth: dict[tuple[str, date], np.ndarray] = {}
    for area in areas:
        base = rng.uniform(50.0, 150.0)
        for day in delivery_days:
            truth[(area, day)] = base + rng.uniform(-20.0, 20.0, size=24)
    write_fixture(fixture, spec, truth)

    store = ArenaStore()
    clock = ManualClock(datetime.combine(delivery_days[0] - timedelta(days=1), time(0, 0), UTC))
    arena = Arena([spec], store, clock)

    participants = {}
    for i in range(n_participants):
        participant = arena.gateway.create_participant(
            display_name=f"team-{i:02d}",
            data_regime="PUBLIC_ONLY" if i % 2 == 0 else "PROPRIETARY",
            forecasts_public=i % 2 == 0,
        )
        participants[participant.id] = participant

    forecasts: dict[tuple[str, str, date], np.ndarray] = {}
    submitted: set[tuple[str, str, date]] = set()

    submission_day = delivery_days[0] - timedelta(days=1)
    last_submission_day = delivery_days[-1] - timedelta(days=1)
    while submission_day <= last_submission_day:
        clock.set(datetime.combine(submission_day, time(6, 0), UTC))
        arena.tick()
        clock.set(datetime.combine(submission_day, time(11, 0), UTC))
        delivery = submission_day + timedelta(days=1)
        for area in areas:
            event = make_event(spec, area, delivery)
            for pid, participant in participants.items():
                if rng.uniform() > submit_probability:
                    continue
                series = truth[(area, delivery)] + rng.normal(0.0, 5.0, size=24)
                series = np.clip(series, spec.value_range[0], spec.value_range[1])
                forecasts[(pid, area, delivery)] = series
                submitted.add((pid, area, delivery))
                arena.gateway.accept_submission(
                    participant, event, ForecastPayload(point=tuple(float(v) for v in series))
                )
        submission_day += timedelta(days=1)

    clock.set(datetime.combine(delivery_days[-1] + timedelta(days=1), time(6, 0), UTC))
    arena.tick()
    return History(
        arena=arena,
        spec=spec,
        delivery_days=delivery_days,
        participants=participants,
        truth=truth,
        forecasts=forecasts,
        submitted=submitted,
        as_of=clock.now(),
    )


def naive_window_metrics(
    history: History, area: str, window_days: list[date]
) -> dict[str, dict[str, float]]:
    """Recompute pooled MAE/RMSE per participant straight from raw arrays."""
    out: dict[str, dict[str, float]] = {}
    for pid in history.participants:
        errors: list[np.ndarray] = []
        for day in window_days:
            key = (pid, area, day)
            if key in history.forecasts:
                errors.append(history.forecasts[key] - history.truth[(area, day)])
        if not errors:
            continue
        concat = np.concatenate(errors)
        out[pid] = {
            "MAE": float(np.mean(np.abs(concat))),
            "RMSE": float(np.sqrt(np.mean(concat**2))),
        }
    return out


def naive_rank(values: dict[str, float], coverage: dict[str, float]) -> dict[str, int | None]:
    """Independent competition ranking with the coverage rule."""
    ranked = sorted(
        ((v, pid) for pid, v in values.items() if coverage.get(pid) == 1.0),
    )
    out: dict[str, int | None] = {pid: None for pid in values}
    prev_value: float | None = None
    prev_rank = 0
    for i, (value, pid) in enumerate(ranked, start=1):
        if prev_value is not None and value == prev_value:
            out[pid] = prev_rank
        else:
            out[pid] = i
            prev_rank = i
            prev_value = value
    return out

"""Deterministic end-to-end simulation with baseline forecasters.

The simulator drives the real gateway/ingest/scoring/leaderboard code
paths through their public interfaces on a virtual clock; there is no
parallel test implementation. Ground truth is a per-area sinusoid whose
amplitude and offset derive from the seed, written to a fixture file up
front; availability stamps keep unpublished slots invisible, so the same
run is reproducible byte for byte.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np

from .baselines import BaselineForecaster
from .clock import ManualClock
from .config import ChallengeSpec, MetricName, MetricSpec, PayloadKind, SourceKind, SourceRef
from .gateway import Participant
from .service import Arena, TickReport
from .store import ArenaStore
from .temporal import make_event

UTC = timezone.utc

SIM_FIRST_DELIVERY = date(2025, 1, 2)


@dataclass(frozen=True)
class AreaTruth:
    amplitude: float
    offset: float

    def value(self, slot: int, slots_per_day: int, day_index: int, phase_drift: float) -> float:
        angle = 2.0 * math.pi * slot / slots_per_day + phase_drift * day_index
        return self.amplitude * math.sin(angle) + self.offset


@dataclass
class SimulationResult:
    arena: Arena
    spec: ChallengeSpec
    participants: dict[str, Participant]
    truth: dict[str, AreaTruth]
    delivery_days: list[date]
    as_of: datetime
    tick_reports: list[TickReport] = field(default_factory=list)
    _tmpdir: tempfile.TemporaryDirectory | None = None

    def leaderboard_csv(self, n: int, area: str | None = None, sort_metric: str | None = None) -> str:
        area = area if area is not None else self.spec.areas[0]
        return self.arena.export_leaderboard(self.spec.id, area, n, as_of=self.as_of, sort_metric=sort_metric)

    def leaderboard_rows(self, n: int, area: str | None = None, sort_metric: str | None = None):
        area = area if area is not None else self.spec.areas[0]
        _, rows = self.arena.leaderboard(self.spec.id, area, n, as_of=self.as_of, sort_metric=sort_metric)
        return rows

    def scores_csv(self) -> str:
        return self.arena.export_scores(challenge_id=self.spec.id)


def simulation_spec(fixture_path: str | Path, areas: tuple[str, ...] = ("DE",)) -> ChallengeSpec:
    """Built-in day-ahead challenge used when no config is supplied."""
    return ChallengeSpec(
        id="sim-load",
        title="Simulated day-ahead load",
        target_variable="load",
        areas=tuple(areas),
        reference_timezone="UTC",
        deadline_local_time=time(12, 0),
        resolution=timedelta(hours=1),
        payload_kinds=frozenset({PayloadKind.POINT}),
        value_range=(-1000.0, 1000.0),
        metrics=(MetricSpec(MetricName.MAE), MetricSpec(MetricName.RMSE)),
        windows=(1, 7, 30),
        ground_truth_source=SourceRef(
            kind=SourceKind.FILE_FIXTURE,
            location=str(fixture_path),
            publication_lag=timedelta(minutes=30),
        ),
    )


def write_truth_fixture(
    path: Path,
    spec: ChallengeSpec,
    truth: dict[str, AreaTruth],
    delivery_days: list[date],
    phase_drift: float = 0.0,
) -> None:
    slots = spec.slots_per_standard_day
    lines = ["area,timestamp_utc,value"]
    for area in spec.areas:
        params = truth[area]
        for day_index, day in enumerate(delivery_days):
            event = make_event(spec, area, day)
            for slot, ts in enumerate(event.target_timestamps):
                value = params.value(slot, slots, day_index, phase_drift)
                lines.append(f"{area},{ts.isoformat()},{value!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_simulation(
    days: int = 30,
    baselines: list[BaselineForecaster] | None = None,
    seed: int = 0,
    store_path: str | Path | None = None,
    spec: ChallengeSpec | None = None,
    phase_drift: float = 0.0,
) -> SimulationResult:
    """Advance a virtual clock through `days` delivery days end to end."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if baselines is None:
        from .baselines import BaselineKind

        baselines = [
            BaselineForecaster(BaselineKind.SEASONAL_NAIVE),
            BaselineForecaster(BaselineKind.CLIMATOLOGY_MEAN),
        ]

    tmpdir: tempfile.TemporaryDirectory | None = None
    if store_path is not None:
        root = Path(store_path)
        root.mkdir(parents=True, exist_ok=True)
    else:
        tmpdir = tempfile.TemporaryDirectory(prefix="arena-sim-")
        root = Path(tmpdir.name)

    fixture_path = root / "truth_fixture.csv"
    if spec is None:
        spec = simulation_spec(fixture_path)
    else:
        # Honor a supplied challenge but repoint its truth at the synthetic fixture.
        from dataclasses import replace

        spec = replace(
            spec,
            ground_truth_source=SourceRef(
                kind=SourceKind.FILE_FIXTURE,
                location=str(fixture_path),
                publication_lag=timedelta(minutes=30),
            ),
        )
        if PayloadKind.POINT not in spec.payload_kinds:
            raise ValueError("simulation baselines submit point forecasts; allow POINT")

    rng = np.random.default_rng(seed)
    truth: dict[str, AreaTruth] = {}
    for area in sorted(spec.areas):
        truth[area] = AreaTruth(
            amplitude=float(rng.uniform(80.0, 120.0)),
            offset=float(rng.uniform(100.0, 200.0)),
        )

    delivery_days = [SIM_FIRST_DELIVERY + timedelta(days=i) for i in range(days)]
    write_truth_fixture(fixture_path, spec, truth, delivery_days, phase_drift)

    store = ArenaStore(root / "store" if store_path is not None else None)
    first_submission = delivery_days[0] - timedelta(days=spec.target_offset_days)
    clock = ManualClock(datetime.combine(first_submission, time(0, 0), UTC))
    arena = Arena([spec], store, clock)

    participants: dict[str, Participant] = {}
    for baseline in baselines:
        participants[baseline.participant_name] = arena.gateway.create_participant(
            display_name=baseline.participant_name,
            method_description=f"{baseline.kind.value} reference forecaster",
            data_regime="PUBLIC_ONLY",
            forecasts_public=True,
        )

    reports: list[TickReport] = []
    last_submission_day = delivery_days[-1] - timedelta(days=spec.target_offset_days)

    day = first_submission
    while day <= last_submission_day:
        clock.set(datetime.combine(day, time(6, 0), UTC))
        reports.append(arena.tick())
        clock.set(datetime.combine(day, time(11, 0), UTC))
        delivery = day + timedelta(days=spec.target_offset_days)
        for area in sorted(spec.areas):
            event = arena.resolve_event(spec.id, area, delivery)
            for baseline in baselines:
                payload = baseline.payload_for(arena.ingest, spec, event, clock.now())
                if payload is not None:
                    arena.gateway.accept_submission(
                        participants[baseline.participant_name], event, payload
                    )
        day += timedelta(days=1)

    # Final ticks: score the remaining delivery days once they publish.
    clock.set(datetime.combine(delivery_days[-1] + timedelta(days=1), time(6, 0), UTC))
    reports.append(arena.tick())

    return SimulationResult(
        arena=arena,
        spec=spec,
        participants=participants,
        truth=truth,
        delivery_days=delivery_days,
        as_of=clock.now(),
        tick_reports=reports,
        _tmpdir=tmpdir,
    )

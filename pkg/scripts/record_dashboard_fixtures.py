#!/usr/bin/env python3
"""Record real API responses as fixtures for the dashboard test suite.

Builds a small scored deployment (three participants, one of them private),
hits the HTTP API with FastAPI's test client, and writes the raw response
bodies under frontend/tests/fixtures/. The dashboard's fidelity tests assert
that every number they render is byte-identical to these recorded fields.
"""

from __future__ import annotations

import json
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from arena.api import create_app
from arena.clock import ManualClock
from arena.config import (
    ChallengeSpec,
    MetricName,
    MetricSpec,
    PayloadKind,
    SourceKind,
    SourceRef,
)
from arena.gateway import ForecastPayload
from arena.service import Arena
from arena.store import ArenaStore
from arena.temporal import make_event

UTC = timezone.utc
ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "tests" / "fixtures"

FIRST_DELIVERY = date(2025, 1, 2)
DAYS = 10

TEAMS = [
    ("open-lab", "PUBLIC_ONLY", True, "seasonal ARX with public weather", 1.0),
    ("grid-works", "PROPRIETARY", True, None, 3.0),
    ("stealth-fund", "PROPRIETARY", False, None, 2.0),
]


def build_deployment(tmp: Path) -> tuple[Arena, dict]:
    fixture = tmp / "truth.csv"
    spec = ChallengeSpec(
        id="load-da",
        title="Day-ahead load",
        target_variable="load",
        areas=("DE", "AT"),
        reference_timezone="UTC",
        deadline_local_time=time(12, 0),
        resolution=timedelta(hours=1),
        payload_kinds=frozenset({PayloadKind.POINT}),
        value_range=(-1000.0, 1000.0),
        metrics=(MetricSpec(MetricName.MAE), MetricSpec(MetricName.RMSE)),
        windows=(1, 7, 30),
        ground_truth_source=SourceRef(SourceKind.FILE_FIXTURE, str(fixture), timedelta(minutes=30)),
    )
    days = [FIRST_DELIVERY + timedelta(days=i) for i in range(DAYS)]
    rng = np.random.default_rng(2025)
    truth = {}
    for area in spec.areas:
        base = 100.0 if area == "DE" else 40.0
        for day in days:
            truth[(area, day)] = base + rng.uniform(-15.0, 15.0, size=24)

    lines = ["area,timestamp_utc,value"]
    for (area, day), values in sorted(truth.items()):
        event = make_event(spec, area, day)
        for ts, value in zip(event.target_timestamps, values):
            lines.append(f"{area},{ts.isoformat()},{float(value)!r}")
    fixture.write_text("\n".join(lines) + "\n", encoding="utf-8")

    store = ArenaStore()
    clock = ManualClock(datetime.combine(days[0] - timedelta(days=1), time(0, 0), UTC))
    arena = Arena([spec], store, clock)

    participants = {}
    for name, regime, public, method, _bias in TEAMS:
        participants[name] = arena.gateway.create_participant(
            display_name=name,
            data_regime=regime,
            forecasts_public=public,
            method_description=method,
        )

    day = days[0] - timedelta(days=1)
    while day <= days[-1] - timedelta(days=1):
        clock.set(datetime.combine(day, time(6, 0), UTC))
        arena.tick()
        clock.set(datetime.combine(day, time(11, 0), UTC))
        delivery = day + timedelta(days=1)
        for area in spec.areas:
            event = make_event(spec, area, delivery)
            for name, _, _, _, bias in TEAMS:
                series = truth[(area, delivery)] + bias + rng.normal(0.0, 1.0, size=24)
                arena.gateway.accept_submission(
                    participants[name],
                    event,
                    ForecastPayload(point=tuple(float(v) for v in series)),
                )
        day += timedelta(days=1)
    clock.set(datetime.combine(days[-1] + timedelta(days=1), time(6, 0), UTC))
    arena.tick()

    key_id, secret = arena.gateway.create_key(participants["open-lab"])
    return arena, {"secret": secret, "key_id": key_id, "days": [d.isoformat() for d in days]}


def main() -> None:
    import tempfile

    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        arena, meta = build_deployment(Path(tmp))
        client = TestClient(create_app(arena))
        as_of = arena.clock.now().isoformat()
        secret = meta["secret"]

        def record(name: str, response) -> None:
            assert response.status_code < 500, (name, response.status_code, response.text)
            (OUT / f"{name}.json").write_bytes(response.content)
            print(f"recorded {name}.json ({response.status_code})")

        record("challenges", client.get("/v1/challenges"))
        record(
            "leaderboard_w7",
            client.get("/v1/leaderboards/load-da/DE", params={"window": 7, "sort": "MAE", "as_of": as_of}),
        )
        record(
            "leaderboard_w1",
            client.get("/v1/leaderboards/load-da/DE", params={"window": 1, "sort": "RMSE", "as_of": as_of}),
        )
        record(
            "leaderboard_public_only",
            client.get(
                "/v1/leaderboards/load-da/DE",
                params={"window": 7, "sort": "MAE", "regime": "PUBLIC_ONLY", "as_of": as_of},
            ),
        )
        day5 = meta["days"][5]
        record(
            "series",
            client.get(
                "/v1/leaderboards/load-da/DE/series",
                params={
                    "participants": "open-lab,grid-works,stealth-fund",
                    "from_date": day5,
                    "to_date": day5,
                    "as_of": as_of,
                },
            ),
        )
        pending_from = meta["days"][-1]
        pending_to = (date.fromisoformat(meta["days"][-1]) + timedelta(days=1)).isoformat()
        record(
            "series_with_gap",
            client.get(
                "/v1/leaderboards/load-da/DE/series",
                params={
                    "participants": "open-lab",
                    "from_date": pending_from,
                    "to_date": pending_to,
                    "as_of": as_of,
                },
            ),
        )
        record("me", client.get("/v1/me", headers={"X-Api-Key": secret}))
        record("keys", client.get("/v1/keys", headers={"X-Api-Key": secret}))
        record(
            "put_me_invalid",
            client.put("/v1/me", json={"data_regime": "SECRET"}, headers={"X-Api-Key": secret}),
        )
        (OUT / "meta.json").write_text(
            json.dumps({"as_of": as_of, "days": meta["days"]}, indent=2), encoding="utf-8"
        )
        print(f"fixtures in {OUT}")


if __name__ == "__main__":
    main()

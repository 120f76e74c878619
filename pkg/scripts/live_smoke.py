#!/usr/bin/env python3
"""Live smoke test: drive a real `arena serve` process over HTTP.

Builds a throwaway deployment whose gate closes two hours from now, seeds a
week of history, then exercises the production loop end to end with the wall
clock: key auth, an accepted ex-ante submission, a GATE_CLOSED rejection, a
validation rejection, scheduler ticks, leaderboard + CSV + series + admin
status. Exits non-zero on the first failed expectation.

Usage:
    python scripts/live_smoke.py
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time as walltime
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path

import requests

from arena.clock import ManualClock
from arena.config import load_challenge_dir
from arena.gateway import ForecastPayload, SubmissionGateway
from arena.store import ArenaStore
from arena.temporal import make_event

UTC = timezone.utc


def expect(condition: bool, message: str) -> None:
    status = "ok" if condition else "FAIL"
    print(f"[{status}] {message}")
    if not condition:
        sys.exit(1)


def main() -> None:
    now = datetime.now(UTC)
    deadline = (now + timedelta(hours=2)).time().replace(second=0, microsecond=0)
    today = now.date()
    history_days = [today - timedelta(days=i) for i in range(8, 0, -1)]

    root = Path(tempfile.mkdtemp(prefix="arena-live-"))
    config_dir = root / "challenges"
    (config_dir / "fixtures").mkdir(parents=True)
    (config_dir / "live.yaml").write_text(
        f"""\
id: live-load
title: Live smoke challenge
target_variable: load
areas: [DE]
reference_timezone: UTC
deadline_local_time: "{deadline.strftime('%H:%M')}"
resolution: PT1H
payload_kinds: [POINT]
value_range: [-1000, 1000]
metrics:
  - name: MAE
  - name: RMSE
windows: [1, 3, 7]
ground_truth_source:
  kind: FILE_FIXTURE
  location: fixtures/truth.csv
  publication_lag: PT1M
freeze_after: P14D
""",
        encoding="utf-8",
    )

    specs = [s.with_source_root(config_dir) for s in load_challenge_dir(config_dir)]
    spec = specs[0]
    lines = ["area,timestamp_utc,value"]
    for day in history_days:
        event = make_event(spec, "DE", day)
        for slot, ts in enumerate(event.target_timestamps):
            lines.append(f"DE,{ts.isoformat()},{100.0 + slot}")
    (config_dir / "fixtures" / "truth.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # Seed historical submissions through the library (their gates are long past).
    store_dir = root / "store"
    store = ArenaStore(store_dir)
    store.attach_registry(specs)
    gateway = SubmissionGateway(store, ManualClock(datetime.combine(history_days[0] - timedelta(days=2), time(0, 0), UTC)))
    good = gateway.create_participant("steady-team", forecasts_public=True, data_regime="PUBLIC_ONLY")
    rough = gateway.create_participant("rough-team")
    for day in history_days:
        event = make_event(spec, "DE", day)
        for participant, bias in ((good, 1.0), (rough, 5.0)):
            gateway.accept_submission(
                participant,
                event,
                ForecastPayload(point=tuple(100.0 + s + bias for s in range(event.n_slots))),
                now=event.gate_closure - timedelta(hours=1),
            )
    store.close()

    keygen = subprocess.run(
        [sys.executable, "-m", "arena.cli", "keygen", "--store", str(store_dir), "--name", "Live Submitter"],
        capture_output=True,
        text=True,
        check=True,
    )
    secret = json.loads(keygen.stdout)["secret"]
    expect("." in secret, "keygen issued a one-time secret")

    import socket

    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    base = f"http://127.0.0.1:{port}"

    server = subprocess.Popen(
        [
            sys.executable, "-m", "arena.cli",
            "serve",
            "--config-dir", str(config_dir),
            "--store", str(store_dir),
            "--bind", f"127.0.0.1:{port}",
            "--tick-interval", "2",
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        body = None
        for _ in range(60):
            try:
                body = requests.get(f"{base}/v1/challenges", timeout=1).json()
                break
            except Exception:
                walltime.sleep(0.25)
        expect(body is not None, "server is up")
        expect(body["challenges"][0]["spec"]["id"] == "live-load", "challenge listed")

        upcoming = body["challenges"][0]["upcoming"]["DE"]
        open_delivery = upcoming["delivery_date"]
        expect(datetime.fromisoformat(upcoming["gate_closure"]) > datetime.now(UTC), "gate still open")

        url = f"{base}/v1/challenges/live-load/areas/DE/deliveries/{open_delivery}/submissions"
        n_slots = len(make_event(spec, "DE", date.fromisoformat(open_delivery)).target_timestamps)
        accepted = requests.post(url, json={"point": [101.5] * n_slots}, headers={"X-Api-Key": secret})
        expect(accepted.status_code == 201, f"ex-ante submission accepted ({accepted.status_code})")

        yesterday = (date.fromisoformat(open_delivery) - timedelta(days=2)).isoformat()
        closed_url = f"{base}/v1/challenges/live-load/areas/DE/deliveries/{yesterday}/submissions"
        closed = requests.post(closed_url, json={"point": [101.5] * 24}, headers={"X-Api-Key": secret})
        expect(
            closed.status_code == 403 and closed.json()["error"] == "GATE_CLOSED",
            "late submission rejected GATE_CLOSED",
        )

        invalid = requests.post(url, json={"point": [101.5] * (n_slots - 3)}, headers={"X-Api-Key": secret})
        expect(
            invalid.status_code == 422
            and invalid.json()["diagnostics"][0]["code"] == "MISSING_TIMESTAMP",
            "wrong-length payload rejected with diagnostics",
        )

        unauth = requests.post(url, json={"point": [101.5] * n_slots})
        expect(unauth.status_code == 401, "missing key rejected")

        rows = []
        for _ in range(20):  # wait for the scheduler to tick
            lb = requests.get(f"{base}/v1/leaderboards/live-load/DE", params={"window": 7, "sort": "MAE"}).json()
            rows = lb.get("rows", [])
            if rows:
                break
            walltime.sleep(1.0)
        expect(len(rows) == 2, f"leaderboard has both seeded teams ({len(rows)})")
        expect(rows[0]["participant"] == "steady-team" and rows[0]["rank"] == 1, "lower error ranks first")
        expect(all(r["coverage"] == 1.0 for r in rows), "full coverage window")

        csv_text = requests.get(
            f"{base}/v1/leaderboards/live-load/DE/export.csv", params={"window": 7}
        ).text
        expect(csv_text.splitlines()[1].startswith("1,steady-team"), "CSV mirrors ranking")

        series = requests.get(
            f"{base}/v1/leaderboards/live-load/DE/series",
            params={
                "participants": "steady-team,rough-team",
                "from_date": history_days[-1].isoformat(),
                "to_date": history_days[-1].isoformat(),
            },
        ).json()
        expect("steady-team" in series["forecasts"], "public trajectory served")
        expect(series["excluded_participants"] == ["rough-team"], "private trajectory excluded")

        status = requests.get(f"{base}/v1/admin/ingest/status").json()["events"]
        expect(
            sum(1 for e in status if e["completeness"] == 1.0) >= len(history_days),
            "ingest status reports complete history",
        )
        print("live smoke: all checks passed")
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    main()

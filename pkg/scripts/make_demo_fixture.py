#!/usr/bin/env python3
"""Generate a demo ground-truth fixture for the load-da challenge.

Writes challenges/fixtures/load.csv covering the requested day range with a
plausible daily load shape per area, so `arena tick` has something to score.

Usage:
    python scripts/make_demo_fixture.py --days 30 --start 2025-01-02
"""

from __future__ import annotations

import argparse
import math
from datetime import date, timedelta
from pathlib import Path

from arena.config import load_challenge_dir
from arena.temporal import make_event

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--days", type=int, default=30)
    parser.add_argument("--start", type=lambda s: date.fromisoformat(s), default=date(2025, 1, 2))
    parser.add_argument("--config-dir", default=ROOT / "challenges")
    args = parser.parse_args()

    config_dir = Path(args.config_dir)
    spec = next(s for s in load_challenge_dir(config_dir) if s.id == "load-da")
    out = config_dir / "fixtures" / "load.csv"
    out.parent.mkdir(parents=True, exist_ok=True)

    base = {"DE": 55000.0, "AT": 7000.0}
    swing = {"DE": 12000.0, "AT": 1800.0}
    lines = ["area,timestamp_utc,value"]
    for area in spec.areas:
        for i in range(args.days):
            day = args.start + timedelta(days=i)
            event = make_event(spec, area, day)
            weekday_factor = 1.0 if day.weekday() < 5 else 0.85
            for slot, ts in enumerate(event.target_timestamps):
                hour_angle = 2.0 * math.pi * slot / len(event.target_timestamps)
                value = weekday_factor * (
                    base[area] - swing[area] * math.cos(hour_angle) * 0.8
                    + swing[area] * 0.3 * math.sin(2 * hour_angle)
                )
                lines.append(f"{area},{ts.isoformat()},{value:.1f}")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out} ({args.days} days x {len(spec.areas)} areas)")


if __name__ == "__main__":
    main()

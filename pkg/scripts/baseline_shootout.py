#!/usr/bin/env python3
"""Compare the reference forecasters across seeds and drift settings.

Runs the deterministic simulation for every baseline on stationary and
drifting truth, and prints the pooled 7-day-window MAE per configuration.

Usage:
    python scripts/baseline_shootout.py --days 21 --seeds 0 1 2
"""

from __future__ import annotations

import argparse
import math

from arena import leaderboard as lb
from arena.baselines import BaselineForecaster, BaselineKind
from arena.simulate import run_simulation


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--days", type=int, default=21)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--window", type=int, default=7)
    args = parser.parse_args()

    baselines = [BaselineForecaster(kind) for kind in BaselineKind]
    print(f"{'truth':<12} {'seed':>4} " + " ".join(f"{b.participant_name:>18}" for b in baselines))
    for drift_name, drift in (("stationary", 0.0), ("drift-pi/8", math.pi / 8)):
        for seed in args.seeds:
            sim = run_simulation(days=args.days, baselines=baselines, seed=seed, phase_drift=drift)
            window = lb.build_window(sim.arena.store, sim.spec, "DE", args.window, sim.as_of)
            mae = lb.aggregate(sim.arena.store, sim.spec, window, sim.spec.metrics[0])
            cells = " ".join(
                f"{mae.get(b.participant_name, float('nan')):>18.4f}" for b in baselines
            )
            print(f"{drift_name:<12} {seed:>4} {cells}")


if __name__ == "__main__":
    main()

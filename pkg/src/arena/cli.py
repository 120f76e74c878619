"""Operator command line: serve, tick, simulate, export, keygen, load-challenge.

Exit codes are fixed for scripting: 0 ok, 2 config, 3 store, 4 bind,
5 export. Logs go to stderr as line-delimited JSON.
"""

from __future__ import annotations

import json
import logging
import socket
import sys
import threading
from datetime import datetime, timezone
from pathlib import Path

import click

from .baselines import parse_baseline_list
from .clock import SystemClock
from .config import ChallengeConfigError, load_challenge_dir
from .service import Arena
from .simulate import run_simulation
from .store import ArenaStore, StoreError

UTC = timezone.utc

EXIT_CONFIG = 2
EXIT_STORE = 3
EXIT_BIND = 4
EXIT_EXPORT = 5


class _JsonLogHandler(logging.Handler):
    def emit(self, record: logging.LogRecord) -> None:
        line = json.dumps(
            {
                "ts": datetime.now(UTC).isoformat(),
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
            },
            separators=(",", ":"),
        )
        print(line, file=sys.stderr)


def _setup_logging(verbose: bool) -> None:
    root = logging.getLogger()
    root.handlers = [_JsonLogHandler()]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _load_specs(config_dir: str):
    try:
        specs = load_challenge_dir(config_dir)
    except ChallengeConfigError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    except OSError as exc:
        print(f"cannot read config dir {config_dir}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    root = Path(config_dir)
    return [s.with_source_root(root) for s in specs]


def _open_store(path: str | None) -> ArenaStore:
    try:
        return ArenaStore(path)
    except StoreError as exc:
        print(str(exc), file=sys.stderr)
        raise SystemExit(EXIT_STORE)


def _parse_instant(text: str | None) -> datetime | None:
    if text is None:
        return None
    instant = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=UTC)
    return instant.astimezone(UTC)


@click.group()
@click.option("--verbose", is_flag=True, default=False)
def main(verbose: bool) -> None:
    _setup_logging(verbose)


@main.command()
@click.option("--config-dir", required=True, type=click.Path(exists=False))
@click.option("--store", "store_path", envvar="ARENA_STORE", required=True)
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--tick-interval", default=300, show_default=True, help="seconds between ticks")
def serve(config_dir: str, store_path: str, bind: str, tick_interval: int) -> None:
    """Run the HTTP API with a background ingest/score scheduler."""
    specs = _load_specs(config_dir)
    store = _open_store(store_path)
    arena = Arena(specs, store, SystemClock())

    host, _, port_text = bind.partition(":")
    port = int(port_text or "8000")
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        print(f"cannot bind {bind}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BIND)
    finally:
        probe.close()

    stop = threading.Event()

    def scheduler() -> None:
        while not stop.is_set():
            try:
                report = arena.tick()
                logging.getLogger("arena.tick").info(json.dumps(report.to_dict()))
            except Exception:  # keep the scheduler alive
                logging.getLogger("arena.tick").exception("tick failed")
            stop.wait(tick_interval)

    threading.Thread(target=scheduler, daemon=True).start()

    from .api import create_app

    import uvicorn

    app = create_app(arena, config_dir=config_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        stop.set()
        store.close()


@main.command()
@click.option("--config-dir", required=True)
@click.option("--store", "store_path", envvar="ARENA_STORE", required=True)
@click.option("--as-of", default=None, help="RFC 3339 instant; defaults to now")
def tick(config_dir: str, store_path: str, as_of: str | None) -> None:
    """Run one ingest -> score pass and print the report."""
    specs = _load_specs(config_dir)
    store = _open_store(store_path)
    arena = Arena(specs, store, SystemClock())
    report = arena.tick(as_of=_parse_instant(as_of))
    click.echo(json.dumps(report.to_dict(), indent=2))
    store.close()


@main.command()
@click.option("--days", default=30, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--participants", default="seasonal_naive,climatology_mean", show_default=True)
@click.option("--phase-drift", default=0.0, show_default=True, help="radians of daily phase drift")
@click.option("--window", default=7, show_default=True)
@click.option("--out", "out_dir", default=None, help="write leaderboard.csv and scores.csv here")
@click.option("--store", "store_path", default=None, help="persist the simulated deployment")
def simulate(
    days: int,
    seed: int,
    participants: str,
    phase_drift: float,
    window: int,
    out_dir: str | None,
    store_path: str | None,
) -> None:
    """Deterministic end-to-end run with baseline forecasters."""
    try:
        baselines = parse_baseline_list(participants)
    except ValueError as exc:
        print(f"bad --participants: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    result = run_simulation(
        days=days, baselines=baselines, seed=seed, store_path=store_path, phase_drift=phase_drift
    )
    leaderboard_csv = result.leaderboard_csv(window)
    click.echo(leaderboard_csv, nl=False)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "leaderboard.csv").write_text(leaderboard_csv, encoding="utf-8")
        (out / "scores.csv").write_text(result.scores_csv(), encoding="utf-8")


@main.command()
@click.argument("kind")
@click.option("--config-dir", required=True)
@click.option("--store", "store_path", envvar="ARENA_STORE", required=True)
@click.option("--out", "out_path", required=True)
@click.option("--challenge", default=None)
@click.option("--area", default=None)
@click.option("--window", default=7, show_default=True)
@click.option("--sort", "sort_metric", default=None)
@click.option("--regime", default=None)
@click.option("--as-of", default=None)
@click.option("--include-private", is_flag=True, default=False)
def export(
    kind: str,
    config_dir: str,
    store_path: str,
    out_path: str,
    challenge: str | None,
    area: str | None,
    window: int,
    sort_metric: str | None,
    regime: str | None,
    as_of: str | None,
    include_private: bool,
) -> None:
    """Write scores, a leaderboard page, or submissions as CSV."""
    if kind not in ("scores", "leaderboard", "submissions"):
        print(f"unknown export kind {kind!r}; expected scores|leaderboard|submissions", file=sys.stderr)
        raise SystemExit(EXIT_EXPORT)
    specs = _load_specs(config_dir)
    store = _open_store(store_path)
    arena = Arena(specs, store, SystemClock())
    try:
        if kind == "scores":
            text = arena.export_scores(challenge_id=challenge, area=area)
        elif kind == "leaderboard":
            if challenge is None or area is None:
                print("leaderboard export needs --challenge and --area", file=sys.stderr)
                raise SystemExit(EXIT_EXPORT)
            text = arena.export_leaderboard(
                challenge,
                area,
                window,
                as_of=_parse_instant(as_of),
                sort_metric=sort_metric,
                data_regime=regime,
            )
        else:
            text = arena.export_submissions(include_private=include_private)
        Path(out_path).write_text(text, encoding="utf-8")
    except SystemExit:
        raise
    except Exception as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_EXPORT)
    finally:
        store.close()


@main.command()
@click.option("--store", "store_path", envvar="ARENA_STORE", required=True)
@click.option("--name", required=True, help="participant display name")
@click.option("--regime", default="UNDECLARED", type=click.Choice(["PUBLIC_ONLY", "PROPRIETARY", "UNDECLARED"]))
@click.option("--public-forecasts", is_flag=True, default=False)
@click.option("--method", default=None, help="short method description")
@click.option("--link", default=None, help="repository or service URL")
def keygen(
    store_path: str,
    name: str,
    regime: str,
    public_forecasts: bool,
    method: str | None,
    link: str | None,
) -> None:
    """Create a participant (if new) and print a fresh API key once."""
    store = _open_store(store_path)
    arena = Arena([], store, SystemClock())
    existing = next(
        (p for p in store.participants.values() if p.display_name == name), None
    )
    if existing is None:
        participant = arena.gateway.create_participant(
            display_name=name,
            method_description=method,
            repo_or_service_link=link,
            data_regime=regime,
            forecasts_public=public_forecasts,
        )
    else:
        participant = existing
    key_id, secret = arena.gateway.create_key(participant)
    click.echo(
        json.dumps(
            {"participant_id": participant.id, "key_id": key_id, "secret": secret}, indent=2
        )
    )
    store.close()


@main.command("load-challenge")
@click.option("--config-dir", required=True)
def load_challenge(config_dir: str) -> None:
    """Validate every challenge file in a directory and summarize the registry."""
    specs = _load_specs(config_dir)
    for spec in specs:
        click.echo(
            f"{spec.id}: {len(spec.areas)} areas, tz {spec.reference_timezone}, "
            f"deadline {spec.deadline_local_time.strftime('%H:%M')}, "
            f"windows {list(spec.windows)}, metrics {[m.key() for m in spec.metrics]}"
        )
    click.echo(f"{len(specs)} challenge(s) ok")


if __name__ == "__main__":
    main()

"""Rolling-window aggregation and ranked, filterable leaderboards.

Windows cover the last N *fully scored* delivery days: a pending day
shifts the window back instead of shrinking it. Aggregation pools per
timestamp, so a 23-slot DST day counts proportionally; the pooled value
equals the slot-count-weighted combination of per-event scalars. Ranking
is competition style ("1,2,2,4") on full-precision values; rows without
complete coverage are appended unranked rather than penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import TYPE_CHECKING

from .config import ChallengeSpec, MetricName, MetricSpec
from .temporal import ForecastEvent, make_event

if TYPE_CHECKING:  # pragma: no cover
    from .store import ArenaStore

DISPLAY_DECIMALS = 4


class UnknownWindowError(Exception):
    pass


class UnknownAreaError(Exception):
    pass


class UnscoredEventError(Exception):
    pass


@dataclass(frozen=True)
class LeaderboardWindow:
    challenge_id: str
    area: str
    n: int
    as_of: datetime
    delivery_dates: tuple[date, ...]

    @property
    def event_keys(self) -> tuple[tuple[str, str, str], ...]:
        return tuple((self.challenge_id, self.area, d.isoformat()) for d in self.delivery_dates)


@dataclass
class LeaderboardRow:
    participant_id: str
    display_name: str
    metrics: dict[str, float] = field(default_factory=dict)
    coverage: float = 0.0
    rank: int | None = None  # None renders as UNRANKED
    data_regime: str = "UNDECLARED"
    has_method_info: bool = False
    forecasts_public: bool = False

    def to_dict(self) -> dict:
        return {
            "participant": self.participant_id,
            "display_name": self.display_name,
            "metrics": {k: self.metrics[k] for k in sorted(self.metrics)},
            "coverage": self.coverage,
            "rank": self.rank if self.rank is not None else "UNRANKED",
            "data_regime": self.data_regime,
            "has_method_info": self.has_method_info,
            "forecasts_public": self.forecasts_public,
        }


def build_window(
    store: "ArenaStore", spec: ChallengeSpec, area: str, n: int, as_of: datetime
) -> LeaderboardWindow:
    """The maximal suffix (length <= N) of fully scored delivery days."""
    scored = store.last_scored_versions(as_of=as_of)
    dates = sorted(
        date.fromisoformat(key[2])
        for key in scored
        if key[0] == spec.id and key[1] == area
    )
    return LeaderboardWindow(
        challenge_id=spec.id,
        area=area,
        n=n,
        as_of=as_of,
        delivery_dates=tuple(dates[-n:]),
    )


def _window_events(spec: ChallengeSpec, window: LeaderboardWindow) -> list[ForecastEvent]:
    return [make_event(spec, window.area, d) for d in window.delivery_dates]


def aggregate(
    store: "ArenaStore", spec: ChallengeSpec, window: LeaderboardWindow, metric: MetricSpec
) -> dict[str, float]:
    """Pooled per-timestamp aggregate of one metric over the window.

    MAE and the probabilistic scores pool as slot-weighted means of the
    per-event scalars; RMSE pools the mean square before the root.
    """
    scored = store.last_scored_versions(as_of=window.as_of)
    for key in window.event_keys:
        if key not in scored:
            raise UnscoredEventError(f"window includes unscored event {key}")

    events = _window_events(spec, window)
    key = metric.key()
    num: dict[str, float] = {}
    den: dict[str, int] = {}
    for event in events:
        records = store.latest_scores_for_event(event.key, as_of=window.as_of)
        for (pid, metric_key), record in records.items():
            if metric_key != key:
                continue
            contribution = record.value**2 if metric.name is MetricName.RMSE else record.value
            num[pid] = num.get(pid, 0.0) + contribution * event.n_slots
            den[pid] = den.get(pid, 0) + event.n_slots
    out: dict[str, float] = {}
    for pid in num:
        pooled = num[pid] / den[pid]
        out[pid] = math.sqrt(pooled) if metric.name is MetricName.RMSE else pooled
    return out


def rank(rows: list[LeaderboardRow], sort_metric: str) -> list[LeaderboardRow]:
    """Ascending competition ranking on the sort metric; partial coverage unranked."""
    rankable = [r for r in rows if r.coverage == 1.0 and sort_metric in r.metrics]
    rankable_ids = {id(r) for r in rankable}
    unranked = [r for r in rows if id(r) not in rankable_ids]
    rankable.sort(key=lambda r: (r.metrics[sort_metric], r.participant_id))
    previous_value: float | None = None
    previous_rank = 0
    for i, row in enumerate(rankable, start=1):
        value = row.metrics[sort_metric]
        if previous_value is not None and value == previous_value:
            row.rank = previous_rank
        else:
            row.rank = i
            previous_rank = i
            previous_value = value
    unranked.sort(key=lambda r: (-r.coverage, r.participant_id))
    for row in unranked:
        row.rank = None
    return rankable + unranked


def query(
    store: "ArenaStore",
    spec: ChallengeSpec,
    area: str,
    n: int,
    as_of: datetime,
    sort_metric: str | None = None,
    data_regime: str | None = None,
) -> tuple[LeaderboardWindow, list[LeaderboardRow]]:
    """Deterministic leaderboard page; identical inputs yield identical pages."""
    if area not in spec.areas:
        raise UnknownAreaError(f"{area!r} is not an area of challenge {spec.id!r}")
    if n not in spec.windows:
        raise UnknownWindowError(f"window {n} not in challenge windows {list(spec.windows)}")
    metric_keys = [m.key() for m in spec.metrics]
    if sort_metric is None:
        sort_metric = metric_keys[0]
    if sort_metric not in metric_keys:
        raise UnknownWindowError(f"sort metric {sort_metric!r} not in challenge metrics {metric_keys}")

    window = build_window(store, spec, area, n, as_of)
    events = _window_events(spec, window)

    # Participants appear once they have an effective submission in the window.
    participant_ids: set[str] = set()
    covered: dict[str, int] = {}
    for event in events:
        seen = {s.participant_id for s in store.submissions_for(event.key)}
        for pid in seen:
            participant_ids.add(pid)
            covered[pid] = covered.get(pid, 0) + 1

    aggregates = {m.key(): aggregate(store, spec, window, m) for m in spec.metrics}

    rows: list[LeaderboardRow] = []
    for pid in sorted(participant_ids):
        participant = store.participants.get(pid)
        if participant is None:
            continue
        if data_regime is not None and participant.data_regime != data_regime:
            continue
        metrics = {
            key: values[pid] for key, values in aggregates.items() if pid in values
        }
        rows.append(
            LeaderboardRow(
                participant_id=pid,
                display_name=participant.display_name,
                metrics=metrics,
                coverage=covered.get(pid, 0) / len(events) if events else 0.0,
                data_regime=participant.data_regime,
                has_method_info=participant.has_method_info,
                forecasts_public=participant.forecasts_public,
            )
        )

    rows = rank(rows, sort_metric)
    for row in rows:
        row.metrics = {k: round(v, DISPLAY_DECIMALS) for k, v in row.metrics.items()}
        row.coverage = round(row.coverage, DISPLAY_DECIMALS)
    return window, rows


def rows_to_csv(rows: list[LeaderboardRow], metric_keys: list[str]) -> str:
    """CSV mirror of the JSON rows, field for field."""
    import csv
    import io

    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["rank", "participant", "display_name"]
        + metric_keys
        + ["coverage", "data_regime", "has_method_info", "forecasts_public"]
    )
    for row in rows:
        writer.writerow(
            [
                row.rank if row.rank is not None else "UNRANKED",
                row.participant_id,
                row.display_name,
            ]
            + [row.metrics.get(k, "") for k in metric_keys]
            + [row.coverage, row.data_regime, row.has_method_info, row.forecasts_public]
        )
    return out.getvalue()

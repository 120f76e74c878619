"""Reference forecasters used by the end-to-end simulation.

Ex-ante discipline applies to baselines too: history is read through the
same as-of view the scoring pipeline uses, so nothing published at or
after the gate closure can leak into a payload. Slots are aligned across
days by local wall-clock label; a label missing on the source day (DST)
falls back to that day's mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from zoneinfo import ZoneInfo

import numpy as np

from .config import ChallengeSpec
from .gateway import ForecastPayload
from .ingest import IngestService
from .temporal import ForecastEvent, make_event

HISTORY_LOOKBACK_DAYS = 60


class BaselineKind(str, Enum):
    SEASONAL_NAIVE = "SEASONAL_NAIVE"
    PERSISTENCE = "PERSISTENCE"
    CLIMATOLOGY_MEAN = "CLIMATOLOGY_MEAN"


def _slot_labels(spec: ChallengeSpec, event: ForecastEvent) -> list[str]:
    tz = ZoneInfo(spec.reference_timezone)
    return [ts.astimezone(tz).strftime("%H:%M") for ts in event.target_timestamps]


def observed_days(
    ingest: IngestService,
    spec: ChallengeSpec,
    area: str,
    before: date,
    as_of: datetime,
    lookback: int = HISTORY_LOOKBACK_DAYS,
) -> dict[date, dict[str, float]]:
    """Fully observed delivery days before `before`, as label->value maps."""
    out: dict[date, dict[str, float]] = {}
    for back in range(1, lookback + 1):
        day = before - timedelta(days=back)
        event = make_event(spec, area, day)
        view = ingest.view(spec, event, as_of)
        if not view.complete:
            continue
        labels = _slot_labels(spec, event)
        out[day] = {label: float(v) for label, v in zip(labels, view.values)}
    return out


def _series_from_day(day_values: dict[str, float], labels: list[str]) -> tuple[float, ...]:
    filler = float(np.mean(list(day_values.values())))
    return tuple(day_values.get(label, filler) for label in labels)


@dataclass
class BaselineForecaster:
    kind: BaselineKind
    seasonal_lag_days: int = 7

    @property
    def participant_name(self) -> str:
        return self.kind.value.lower().replace("_", "-")

    def payload_for(
        self,
        ingest: IngestService,
        spec: ChallengeSpec,
        event: ForecastEvent,
        now: datetime,
    ) -> ForecastPayload | None:
        """Point payload for one event, or None when history is insufficient."""
        history = observed_days(ingest, spec, event.area, event.delivery_date, now)
        if not history:
            return None
        labels = _slot_labels(spec, event)

        if self.kind is BaselineKind.SEASONAL_NAIVE:
            seasonal_day = event.delivery_date - timedelta(days=self.seasonal_lag_days)
            source = history.get(seasonal_day)
            if source is None:
                source = history[max(history)]  # fall back to the freshest complete day
            return ForecastPayload(point=_series_from_day(source, labels))

        if self.kind is BaselineKind.PERSISTENCE:
            return ForecastPayload(point=_series_from_day(history[max(history)], labels))

        if self.kind is BaselineKind.CLIMATOLOGY_MEAN:
            per_label: dict[str, list[float]] = {}
            for day_values in history.values():
                for label, value in day_values.items():
                    per_label.setdefault(label, []).append(value)
            overall = float(np.mean([v for vs in per_label.values() for v in vs]))
            point = tuple(
                float(np.mean(per_label[label])) if label in per_label else overall
                for label in labels
            )
            return ForecastPayload(point=point)

        raise ValueError(self.kind)  # pragma: no cover


def parse_baseline_list(text: str) -> list[BaselineForecaster]:
    """Comma-separated kinds, case-insensitive, e.g. 'seasonal_naive,persistence'."""
    out = []
    for token in text.split(","):
        token = token.strip().upper().replace("-", "_")
        if token:
            out.append(BaselineForecaster(kind=BaselineKind(token)))
    if not out:
        raise ValueError("no baselines given")
    return out

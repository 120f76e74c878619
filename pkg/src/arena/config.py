"""Declarative challenge definitions.

Challenges are YAML documents; adding one means adding a file, never
touching platform code. Parsing is two-phase: document syntax first, then
semantic validation that reports *every* violation with its document path.
A machine-readable schema for the file format ships in ``schema/``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from datetime import time, timedelta
from enum import Enum
from zoneinfo import ZoneInfo

import yaml

from .diagnostics import Diagnostic, DiagnosticError

HOURS_PER_DAY = timedelta(hours=24)

_DURATION_RE = re.compile(
    r"^P(?:(?P<days>\d+)D)?"
    r"(?:T(?:(?P<hours>\d+)H)?(?:(?P<minutes>\d+)M)?(?:(?P<seconds>\d+)S)?)?$"
)
_TIME_RE = re.compile(r"^(?P<h>[01]?\d|2[0-3]):(?P<m>[0-5]\d)$")
_SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


class PayloadKind(str, Enum):
    POINT = "POINT"
    QUANTILE = "QUANTILE"
    ENSEMBLE = "ENSEMBLE"


class MetricName(str, Enum):
    MAE = "MAE"
    RMSE = "RMSE"
    PINBALL = "PINBALL"
    CRPS_QUANTILE = "CRPS_QUANTILE"
    CRPS_ENSEMBLE = "CRPS_ENSEMBLE"
    WIS = "WIS"


class SourceKind(str, Enum):
    FILE_FIXTURE = "FILE_FIXTURE"
    HTTP = "HTTP"


def parse_duration(text: str) -> timedelta:
    """Parse the ISO-8601 duration subset used in challenge files (PnDTnHnMnS)."""
    m = _DURATION_RE.match(text.strip()) if isinstance(text, str) else None
    if not m or not any(m.groups()):
        raise ValueError(f"not an ISO-8601 duration: {text!r}")
    days = int(m.group("days") or 0)
    hours = int(m.group("hours") or 0)
    minutes = int(m.group("minutes") or 0)
    seconds = int(m.group("seconds") or 0)
    return timedelta(days=days, hours=hours, minutes=minutes, seconds=seconds)


def format_duration(value: timedelta) -> str:
    """Canonical ISO-8601 rendering, inverse of :func:`parse_duration`."""
    total = int(value.total_seconds())
    if total < 0:
        raise ValueError("negative durations are not representable")
    days, rem = divmod(total, 86400)
    hours, rem = divmod(rem, 3600)
    minutes, seconds = divmod(rem, 60)
    out = "P"
    if days:
        out += f"{days}D"
    if hours or minutes or seconds or not days:
        out += "T"
        if hours:
            out += f"{hours}H"
        if minutes:
            out += f"{minutes}M"
        if seconds or not (hours or minutes):
            out += f"{seconds}S"
    return out


@dataclass(frozen=True)
class MetricSpec:
    name: MetricName
    params: dict = field(default_factory=dict)

    def key(self) -> str:
        """Stable identifier used in score records, exports, and leaderboards."""
        if self.name is MetricName.PINBALL:
            return f"PINBALL@{self.params['level']:g}"
        return self.name.value

    def to_dict(self) -> dict:
        out: dict = {"name": self.name.value}
        if self.params:
            out["params"] = dict(self.params)
        return out

    def __hash__(self) -> int:
        return hash(self.key())


@dataclass(frozen=True)
class SourceRef:
    kind: SourceKind
    location: str
    publication_lag: timedelta = timedelta(0)

    def identity(self) -> str:
        """Stable key for grouping observations by their origin."""
        return f"{self.kind.value}:{self.location}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "location": self.location,
            "publication_lag": format_duration(self.publication_lag),
        }


@dataclass(frozen=True)
class ChallengeSpec:
    id: str
    title: str
    target_variable: str
    areas: tuple[str, ...]
    reference_timezone: str
    deadline_local_time: time
    resolution: timedelta
    payload_kinds: frozenset[PayloadKind]
    value_range: tuple[float, float]
    metrics: tuple[MetricSpec, ...]
    windows: tuple[int, ...]
    ground_truth_source: SourceRef
    cadence: str = "DAILY"
    target_offset_days: int = 1
    quantile_levels: tuple[float, ...] = ()
    max_ensemble_members: int | None = None
    freeze_after: timedelta = timedelta(days=14)

    @property
    def slots_per_standard_day(self) -> int:
        return int(HOURS_PER_DAY / self.resolution)

    def metric(self, key: str) -> MetricSpec:
        for m in self.metrics:
            if m.key() == key:
                return m
        raise KeyError(key)

    def to_dict(self) -> dict:
        out: dict = {
            "id": self.id,
            "title": self.title,
            "target_variable": self.target_variable,
            "areas": list(self.areas),
            "reference_timezone": self.reference_timezone,
            "cadence": self.cadence,
            "deadline_local_time": self.deadline_local_time.strftime("%H:%M"),
            "target_offset_days": self.target_offset_days,
            "resolution": format_duration(self.resolution),
            "payload_kinds": sorted(k.value for k in self.payload_kinds),
            "value_range": [self.value_range[0], self.value_range[1]],
            "metrics": [m.to_dict() for m in self.metrics],
            "windows": list(self.windows),
            "ground_truth_source": self.ground_truth_source.to_dict(),
            "freeze_after": format_duration(self.freeze_after),
        }
        if self.quantile_levels:
            out["quantile_levels"] = list(self.quantile_levels)
        if self.max_ensemble_members is not None:
            out["max_ensemble_members"] = self.max_ensemble_members
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_source_root(self, root) -> "ChallengeSpec":
        """Resolve a FILE_FIXTURE location against the deployment data root."""
        src = self.ground_truth_source
        if src.kind is SourceKind.FILE_FIXTURE:
            resolved = str((root / src.location).resolve()) if root is not None else src.location
            return replace(self, ground_truth_source=replace(src, location=resolved))
        return self


class ChallengeConfigError(DiagnosticError):
    pass


_REQUIRED_FIELDS = (
    "id",
    "title",
    "target_variable",
    "areas",
    "reference_timezone",
    "deadline_local_time",
    "resolution",
    "payload_kinds",
    "value_range",
    "metrics",
    "windows",
    "ground_truth_source",
)


def parse_challenge(config_text: str) -> ChallengeSpec:
    """Parse one YAML challenge document.

    Raises :class:`ChallengeConfigError` carrying every violation found,
    each tagged with its document path, not just the first.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ChallengeConfigError([Diagnostic("SYNTAX", "$", f"malformed YAML: {exc}")]) from exc
    if not isinstance(doc, dict):
        raise ChallengeConfigError([Diagnostic("SYNTAX", "$", "document must be a mapping")])

    diags: list[Diagnostic] = []
    for name in _REQUIRED_FIELDS:
        if name not in doc:
            diags.append(Diagnostic("MISSING_FIELD", name, "required field is missing"))

    def bad(path: str, message: str) -> None:
        diags.append(Diagnostic("BAD_VALUE", path, message))

    challenge_id = doc.get("id")
    if "id" in doc and (not isinstance(challenge_id, str) or not _SLUG_RE.match(challenge_id)):
        bad("id", "must be a lowercase slug like 'load-da'")

    for name in ("title", "target_variable"):
        if name in doc and (not isinstance(doc[name], str) or not doc[name].strip()):
            bad(name, "must be a non-empty string")

    areas: tuple[str, ...] = ()
    raw_areas = doc.get("areas")
    if "areas" in doc:
        if not isinstance(raw_areas, list) or not raw_areas:
            bad("areas", "must be a non-empty list of area codes")
        elif not all(isinstance(a, str) and a.strip() for a in raw_areas):
            bad("areas", "area codes must be non-empty strings")
        elif len(set(raw_areas)) != len(raw_areas):
            bad("areas", "area codes must be distinct")
        else:
            areas = tuple(raw_areas)

    tz_name = doc.get("reference_timezone")
    if "reference_timezone" in doc:
        try:
            ZoneInfo(str(tz_name))
        except Exception:
            bad("reference_timezone", f"unknown IANA timezone {tz_name!r}")

    cadence = doc.get("cadence", "DAILY")
    if cadence != "DAILY":
        bad("cadence", f"unsupported cadence {cadence!r}; only DAILY is supported")

    deadline = time(12, 0)
    if "deadline_local_time" in doc:
        m = _TIME_RE.match(str(doc["deadline_local_time"]))
        if not m:
            bad("deadline_local_time", "must be a wall-clock time 'HH:MM'")
        else:
            deadline = time(int(m.group("h")), int(m.group("m")))

    offset_days = doc.get("target_offset_days", 1)
    if not isinstance(offset_days, int) or isinstance(offset_days, bool) or offset_days < 1:
        bad("target_offset_days", "must be an integer >= 1")
        offset_days = 1

    resolution = timedelta(hours=1)
    if "resolution" in doc:
        try:
            resolution = parse_duration(str(doc["resolution"]))
        except ValueError as exc:
            bad("resolution", str(exc))
        else:
            if resolution <= timedelta(0) or (
                HOURS_PER_DAY.total_seconds() % resolution.total_seconds() != 0
            ):
                bad("resolution", "must be positive and evenly divide 24 hours")

    kinds: frozenset[PayloadKind] = frozenset()
    raw_kinds = doc.get("payload_kinds")
    if "payload_kinds" in doc:
        if not isinstance(raw_kinds, list) or not raw_kinds:
            bad("payload_kinds", "must be a non-empty list")
        else:
            parsed = []
            for i, k in enumerate(raw_kinds):
                try:
                    parsed.append(PayloadKind(str(k)))
                except ValueError:
                    bad(f"payload_kinds[{i}]", f"unknown payload kind {k!r}")
            kinds = frozenset(parsed)

    levels: tuple[float, ...] = ()
    raw_levels = doc.get("quantile_levels")
    if PayloadKind.QUANTILE in kinds and raw_levels is None:
        diags.append(
            Diagnostic("MISSING_FIELD", "quantile_levels", "required when QUANTILE payloads are allowed")
        )
    if raw_levels is not None:
        if PayloadKind.QUANTILE not in kinds and kinds:
            bad("quantile_levels", "only meaningful when QUANTILE payloads are allowed")
        if not isinstance(raw_levels, list) or not raw_levels:
            bad("quantile_levels", "must be a non-empty list of probabilities")
        elif not all(isinstance(v, (int, float)) and 0.0 < float(v) < 1.0 for v in raw_levels):
            bad("quantile_levels", "every level must lie in the open interval (0, 1)")
        elif any(b <= a for a, b in zip(raw_levels, raw_levels[1:])):
            bad("quantile_levels", "levels must be strictly increasing")
        else:
            levels = tuple(float(v) for v in raw_levels)

    max_members = doc.get("max_ensemble_members")
    if PayloadKind.ENSEMBLE in kinds and max_members is None:
        diags.append(
            Diagnostic("MISSING_FIELD", "max_ensemble_members", "required when ENSEMBLE payloads are allowed")
        )
    if max_members is not None:
        if not isinstance(max_members, int) or isinstance(max_members, bool) or max_members < 1:
            bad("max_ensemble_members", "must be an integer >= 1")
            max_members = None
        elif PayloadKind.ENSEMBLE not in kinds and kinds:
            bad("max_ensemble_members", "only meaningful when ENSEMBLE payloads are allowed")

    value_range = (0.0, 1.0)
    raw_range = doc.get("value_range")
    if "value_range" in doc:
        if (
            not isinstance(raw_range, list)
            or len(raw_range) != 2
            or not all(isinstance(v, (int, float)) and math.isfinite(float(v)) for v in raw_range)
        ):
            bad("value_range", "must be a two-element list [min, max] of finite numbers")
        elif float(raw_range[0]) >= float(raw_range[1]):
            bad("value_range", "min must be strictly less than max")
        else:
            value_range = (float(raw_range[0]), float(raw_range[1]))

    metrics = _parse_metrics(doc.get("metrics"), kinds, levels, diags)

    windows: tuple[int, ...] = ()
    raw_windows = doc.get("windows")
    if "windows" in doc:
        if not isinstance(raw_windows, list) or not raw_windows:
            bad("windows", "must be a non-empty list of window lengths")
        else:
            ok = True
            for i, w in enumerate(raw_windows):
                if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                    bad(f"windows[{i}]", "window lengths must be positive integers")
                    ok = False
            if ok and any(b <= a for a, b in zip(raw_windows, raw_windows[1:])):
                bad("windows", "window lengths must be strictly increasing")
            elif ok:
                windows = tuple(raw_windows)

    source = _parse_source(doc.get("ground_truth_source"), diags)

    freeze_after = timedelta(days=14)
    if "freeze_after" in doc:
        try:
            freeze_after = parse_duration(str(doc["freeze_after"]))
        except ValueError as exc:
            bad("freeze_after", str(exc))

    known = set(_REQUIRED_FIELDS) | {
        "cadence",
        "target_offset_days",
        "quantile_levels",
        "max_ensemble_members",
        "freeze_after",
    }
    for name in doc:
        if name not in known:
            bad(str(name), "unknown field")

    if diags:
        raise ChallengeConfigError(diags)

    return ChallengeSpec(
        id=challenge_id,
        title=doc["title"],
        target_variable=doc["target_variable"],
        areas=areas,
        reference_timezone=str(tz_name),
        cadence="DAILY",
        deadline_local_time=deadline,
        target_offset_days=offset_days,
        resolution=resolution,
        payload_kinds=kinds,
        quantile_levels=levels,
        max_ensemble_members=max_members,
        value_range=value_range,
        metrics=metrics,
        windows=windows,
        ground_truth_source=source,
        freeze_after=freeze_after,
    )


def _grid_is_symmetric(levels: tuple[float, ...]) -> bool:
    return all(abs((a + b) - 1.0) <= 1e-12 for a, b in zip(levels, reversed(levels)))


def _has_median(levels: tuple[float, ...]) -> bool:
    return any(abs(v - 0.5) <= 1e-12 for v in levels)


def _parse_metrics(
    raw,
    kinds: frozenset[PayloadKind],
    levels: tuple[float, ...],
    diags: list[Diagnostic],
) -> tuple[MetricSpec, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list) or not raw:
        diags.append(Diagnostic("BAD_VALUE", "metrics", "must be a non-empty list"))
        return ()

    # Point metrics accept an explicit point series or one derivable from the
    # other representations (median quantile, ensemble member-wise mean).
    point_derivable = (
        PayloadKind.POINT in kinds
        or (PayloadKind.QUANTILE in kinds and _has_median(levels))
        or PayloadKind.ENSEMBLE in kinds
    )

    metrics: list[MetricSpec] = []
    for i, entry in enumerate(raw):
        path = f"metrics[{i}]"
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            diags.append(Diagnostic("BAD_VALUE", path, "must be a mapping with a 'name'"))
            continue
        try:
            name = MetricName(str(entry["name"]))
        except ValueError:
            diags.append(Diagnostic("BAD_VALUE", f"{path}.name", f"unknown metric {entry['name']!r}"))
            continue
        params = entry.get("params") or {}
        if not isinstance(params, dict):
            diags.append(Diagnostic("BAD_VALUE", f"{path}.params", "must be a mapping"))
            continue

        if name is MetricName.PINBALL:
            tau = params.get("level")
            if not isinstance(tau, (int, float)) or not 0.0 < float(tau) < 1.0 or len(params) != 1:
                diags.append(
                    Diagnostic("BAD_VALUE", f"{path}.params", "PINBALL takes exactly one level in (0, 1)")
                )
                continue
            params = {"level": float(tau)}
            if PayloadKind.QUANTILE not in kinds or not any(
                abs(lv - float(tau)) <= 1e-12 for lv in levels
            ):
                diags.append(
                    Diagnostic(
                        "INCOMPATIBLE_METRIC",
                        path,
                        "PINBALL needs QUANTILE payloads declaring its level",
                    )
                )
                continue
        elif params:
            diags.append(Diagnostic("BAD_VALUE", f"{path}.params", f"{name.value} takes no params"))
            continue

        incompatible = None
        if name in (MetricName.MAE, MetricName.RMSE) and not point_derivable:
            incompatible = f"{name.value} needs a point series or one derivable from quantiles/ensemble"
        elif name is MetricName.CRPS_QUANTILE and PayloadKind.QUANTILE not in kinds:
            incompatible = "CRPS_QUANTILE needs QUANTILE payloads"
        elif name is MetricName.CRPS_ENSEMBLE and PayloadKind.ENSEMBLE not in kinds:
            incompatible = "CRPS_ENSEMBLE needs ENSEMBLE payloads"
        elif name is MetricName.WIS and (
            PayloadKind.QUANTILE not in kinds or not _has_median(levels) or not _grid_is_symmetric(levels)
        ):
            incompatible = "WIS needs QUANTILE payloads on a symmetric level grid containing 0.5"
        if incompatible and kinds:
            diags.append(Diagnostic("INCOMPATIBLE_METRIC", path, incompatible))
            continue

        metrics.append(MetricSpec(name=name, params=params))

    seen: set[str] = set()
    for i, m in enumerate(metrics):
        if m.key() in seen:
            diags.append(Diagnostic("BAD_VALUE", f"metrics[{i}]", f"duplicate metric {m.key()}"))
        seen.add(m.key())
    return tuple(metrics)


def _parse_source(raw, diags: list[Diagnostic]) -> SourceRef:
    fallback = SourceRef(kind=SourceKind.FILE_FIXTURE, location="unset.csv")
    if raw is None:
        return fallback
    if not isinstance(raw, dict):
        diags.append(Diagnostic("BAD_VALUE", "ground_truth_source", "must be a mapping"))
        return fallback

    kind = None
    if "kind" not in raw:
        diags.append(Diagnostic("MISSING_FIELD", "ground_truth_source.kind", "required field is missing"))
    else:
        try:
            kind = SourceKind(str(raw["kind"]))
        except ValueError:
            diags.append(
                Diagnostic("BAD_VALUE", "ground_truth_source.kind", f"unknown source kind {raw['kind']!r}")
            )

    location = raw.get("location")
    if not isinstance(location, str) or not location.strip():
        diags.append(
            Diagnostic("BAD_VALUE", "ground_truth_source.location", "must be a non-empty path or URL template")
        )
        location = "unset.csv"
    elif kind is SourceKind.HTTP:
        for placeholder in ("{area}", "{from}", "{to}"):
            if placeholder not in location:
                diags.append(
                    Diagnostic(
                        "BAD_VALUE",
                        "ground_truth_source.location",
                        f"HTTP template must contain {placeholder}",
                    )
                )

    lag = timedelta(0)
    if "publication_lag" in raw:
        try:
            lag = parse_duration(str(raw["publication_lag"]))
        except ValueError as exc:
            diags.append(Diagnostic("BAD_VALUE", "ground_truth_source.publication_lag", str(exc)))

    return SourceRef(kind=kind or SourceKind.FILE_FIXTURE, location=location, publication_lag=lag)


def validate_registry(specs: list[ChallengeSpec]) -> set[tuple[str, str]]:
    """Check cross-challenge constraints; returns the (challenge, area) leaderboard keys."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for i, spec in enumerate(specs):
        if spec.id in seen:
            diags.append(Diagnostic("DUPLICATE_ID", f"[{i}].id", f"duplicate challenge id {spec.id!r}"))
        seen.add(spec.id)
    if diags:
        raise ChallengeConfigError(diags)
    return {(spec.id, area) for spec in specs for area in spec.areas}


def load_challenge_dir(config_dir) -> list[ChallengeSpec]:
    """Scan a directory of ``*.yaml`` challenge files, newest validation rules applied.

    File-level failures are reported together, prefixed with the file name.
    """
    from pathlib import Path

    config_dir = Path(config_dir)
    specs: list[ChallengeSpec] = []
    diags: list[Diagnostic] = []
    for path in sorted(config_dir.glob("*.y*ml")):
        try:
            specs.append(parse_challenge(path.read_text(encoding="utf-8")))
        except ChallengeConfigError as exc:
            diags.extend(Diagnostic(d.code, f"{path.name}:{d.path}", d.message) for d in exc.diagnostics)
    if diags:
        raise ChallengeConfigError(diags)
    validate_registry(specs)
    return specs

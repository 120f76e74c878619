"""Authenticated ingestion and immutable storage of forecast submissions.

The ex-ante guarantee lives here: ``received_at`` is stamped from the
server clock at ingress, the gate check is strict (a submission at the
gate-closure instant is late), and the store is append-only, so nothing
can be overwritten after the fact. Resubmission before the gate is
allowed; the latest valid one wins, earlier ones are retained for audit.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import re
import secrets
from dataclasses import dataclass, replace
from datetime import datetime
from typing import TYPE_CHECKING, Optional

from .config import ChallengeSpec, PayloadKind
from .diagnostics import Diagnostic, DiagnosticError
from .temporal import ForecastEvent

if TYPE_CHECKING:  # pragma: no cover
    from .clock import Clock
    from .store import ArenaStore

CROSSING_TOLERANCE = 1e-9

DATA_REGIMES = ("PUBLIC_ONLY", "PROPRIETARY", "UNDECLARED")


class UnauthenticatedError(Exception):
    """Unknown and revoked keys are indistinguishable on purpose."""


class GateClosedError(Exception):
    def __init__(self, now: datetime, gate: datetime):
        self.now, self.gate = now, gate
        super().__init__(f"gate closed at {gate.isoformat()}, received {now.isoformat()}")


class UnknownEventError(Exception):
    pass


class KeyNotFoundError(Exception):
    pass


class PayloadRejected(DiagnosticError):
    pass


@dataclass(frozen=True)
class Participant:
    id: str
    display_name: str
    method_description: str | None = None
    repo_or_service_link: str | None = None
    data_regime: str = "UNDECLARED"
    forecasts_public: bool = False

    @property
    def has_method_info(self) -> bool:
        return bool(self.method_description or self.repo_or_service_link)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "method_description": self.method_description,
            "repo_or_service_link": self.repo_or_service_link,
            "data_regime": self.data_regime,
            "forecasts_public": self.forecasts_public,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Participant":
        return cls(**d)


@dataclass(frozen=True)
class ApiKey:
    key_id: str
    secret_hash: str
    salt: str
    participant_id: str
    created_at: datetime
    revoked_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "key_id": self.key_id,
            "secret_hash": self.secret_hash,
            "salt": self.salt,
            "participant_id": self.participant_id,
            "created_at": self.created_at.isoformat(),
            "revoked_at": self.revoked_at.isoformat() if self.revoked_at else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ApiKey":
        return cls(
            key_id=d["key_id"],
            secret_hash=d["secret_hash"],
            salt=d["salt"],
            participant_id=d["participant_id"],
            created_at=datetime.fromisoformat(d["created_at"]),
            revoked_at=datetime.fromisoformat(d["revoked_at"]) if d["revoked_at"] else None,
        )


@dataclass(frozen=True)
class ForecastPayload:
    """One forecast in up to three representations, aligned to the event grid.

    Series are positional: index t belongs to target_timestamps[t].
    """

    point: tuple[float, ...] | None = None
    quantiles: tuple[tuple[float, ...], tuple[tuple[float, ...], ...]] | None = None
    ensemble: tuple[tuple[float, ...], ...] | None = None

    def to_dict(self) -> dict:
        out: dict = {}
        if self.point is not None:
            out["point"] = list(self.point)
        if self.quantiles is not None:
            levels, values = self.quantiles
            out["quantiles"] = {"levels": list(levels), "values": [list(r) for r in values]}
        if self.ensemble is not None:
            out["ensemble"] = [list(r) for r in self.ensemble]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ForecastPayload":
        point = tuple(float(v) for v in d["point"]) if d.get("point") is not None else None
        quantiles = None
        if d.get("quantiles") is not None:
            q = d["quantiles"]
            quantiles = (
                tuple(float(v) for v in q.get("levels", ())),
                tuple(tuple(float(v) for v in row) for row in q.get("values", ())),
            )
        ensemble = None
        if d.get("ensemble") is not None:
            ensemble = tuple(tuple(float(v) for v in row) for row in d["ensemble"])
        return cls(point=point, quantiles=quantiles, ensemble=ensemble)


@dataclass(frozen=True)
class Submission:
    id: str
    seq: int
    participant_id: str
    challenge_id: str
    area: str
    delivery_date: str
    payload: ForecastPayload
    received_at: datetime

    @property
    def event_key(self) -> tuple[str, str, str]:
        return (self.challenge_id, self.area, self.delivery_date)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "seq": self.seq,
            "participant_id": self.participant_id,
            "challenge_id": self.challenge_id,
            "area": self.area,
            "delivery_date": self.delivery_date,
            "payload": self.payload.to_dict(),
            "received_at": self.received_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Submission":
        return cls(
            id=d["id"],
            seq=d["seq"],
            participant_id=d["participant_id"],
            challenge_id=d["challenge_id"],
            area=d["area"],
            delivery_date=d["delivery_date"],
            payload=ForecastPayload.from_dict(d["payload"]),
            received_at=datetime.fromisoformat(d["received_at"]),
        )


def _check_series(
    values, n_slots: int, path: str, value_range: tuple[float, float], diags: list[Diagnostic]
) -> None:
    if len(values) < n_slots:
        diags.append(
            Diagnostic("MISSING_TIMESTAMP", path, f"expected {n_slots} values, got {len(values)}")
        )
    elif len(values) > n_slots:
        diags.append(
            Diagnostic("EXTRA_TIMESTAMP", path, f"expected {n_slots} values, got {len(values)}")
        )
    lo, hi = value_range
    for t, v in enumerate(values):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(float(v)):
            diags.append(Diagnostic("NON_FINITE", f"{path}[{t}]", f"value {v!r} is not finite"))
        elif not lo <= float(v) <= hi:
            diags.append(
                Diagnostic("OUT_OF_RANGE", f"{path}[{t}]", f"value {v} outside [{lo}, {hi}]")
            )


def validate_payload(
    spec: ChallengeSpec, event: ForecastEvent, payload: ForecastPayload
) -> list[Diagnostic]:
    """Every violation against this event's grid, with coordinates. Empty means ok."""
    diags: list[Diagnostic] = []
    n = event.n_slots

    if payload.point is None and payload.quantiles is None and payload.ensemble is None:
        return [Diagnostic("EMPTY_PAYLOAD", "$", "at least one representation is required")]

    if payload.point is not None:
        if PayloadKind.POINT not in spec.payload_kinds:
            diags.append(Diagnostic("KIND_NOT_ALLOWED", "point", "challenge does not accept point forecasts"))
        else:
            _check_series(payload.point, n, "point", spec.value_range, diags)

    if payload.quantiles is not None:
        if PayloadKind.QUANTILE not in spec.payload_kinds:
            diags.append(
                Diagnostic("KIND_NOT_ALLOWED", "quantiles", "challenge does not accept quantile forecasts")
            )
        else:
            levels, values = payload.quantiles
            declared = tuple(float(v) for v in levels)
            if declared != spec.quantile_levels:
                diags.append(
                    Diagnostic(
                        "LEVEL_MISMATCH",
                        "quantiles.levels",
                        f"declared levels {list(declared)} != challenge levels {list(spec.quantile_levels)}",
                    )
                )
            elif len(values) != len(declared):
                diags.append(
                    Diagnostic(
                        "LEVEL_MISMATCH",
                        "quantiles.values",
                        f"{len(values)} rows for {len(declared)} levels",
                    )
                )
            else:
                for r, row in enumerate(values):
                    _check_series(row, n, f"quantiles.values[{r}]", spec.value_range, diags)
                if all(len(row) == n for row in values):
                    for t in range(n):
                        for r in range(len(values) - 1):
                            if values[r + 1][t] < values[r][t] - CROSSING_TOLERANCE:
                                diags.append(
                                    Diagnostic(
                                        "QUANTILE_CROSSING",
                                        f"quantiles.values[{r + 1}][{t}]",
                                        f"level {declared[r + 1]} value {values[r + 1][t]} below "
                                        f"level {declared[r]} value {values[r][t]}",
                                    )
                                )

    if payload.ensemble is not None:
        if PayloadKind.ENSEMBLE not in spec.payload_kinds:
            diags.append(
                Diagnostic("KIND_NOT_ALLOWED", "ensemble", "challenge does not accept ensemble forecasts")
            )
        else:
            members = payload.ensemble
            if len(members) == 0:
                diags.append(Diagnostic("EMPTY_PAYLOAD", "ensemble", "no members given"))
            if spec.max_ensemble_members is not None and len(members) > spec.max_ensemble_members:
                diags.append(
                    Diagnostic(
                        "TOO_MANY_MEMBERS",
                        "ensemble",
                        f"{len(members)} members exceed the maximum {spec.max_ensemble_members}",
                    )
                )
            for r, row in enumerate(members):
                _check_series(row, n, f"ensemble[{r}]", spec.value_range, diags)

    return diags


_slug_strip = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    slug = _slug_strip.sub("-", name.strip().lower()).strip("-")
    return slug or "participant"


class SubmissionGateway:
    """Participant, key, and submission lifecycle against one store."""

    def __init__(self, store: "ArenaStore", clock: "Clock"):
        self.store = store
        self.clock = clock

    # -- participants ------------------------------------------------------

    def create_participant(
        self,
        display_name: str,
        method_description: str | None = None,
        repo_or_service_link: str | None = None,
        data_regime: str = "UNDECLARED",
        forecasts_public: bool = False,
    ) -> Participant:
        if data_regime not in DATA_REGIMES:
            raise ValueError(f"data_regime must be one of {DATA_REGIMES}")
        if any(p.display_name == display_name for p in self.store.participants.values()):
            raise ValueError(f"display name {display_name!r} already taken")
        pid = slugify(display_name)
        base, i = pid, 2
        while pid in self.store.participants:
            pid = f"{base}-{i}"
            i += 1
        participant = Participant(
            id=pid,
            display_name=display_name,
            method_description=method_description,
            repo_or_service_link=repo_or_service_link,
            data_regime=data_regime,
            forecasts_public=forecasts_public,
        )
        self.store.put_participant(participant)
        return participant

    def update_participant(self, participant_id: str, **changes) -> Participant:
        current = self.store.participants.get(participant_id)
        if current is None:
            raise KeyNotFoundError(participant_id)
        allowed = {
            "display_name",
            "method_description",
            "repo_or_service_link",
            "data_regime",
            "forecasts_public",
        }
        unknown = set(changes) - allowed
        if unknown:
            raise ValueError(f"unknown fields: {sorted(unknown)}")
        if "data_regime" in changes and changes["data_regime"] not in DATA_REGIMES:
            raise ValueError(f"data_regime must be one of {DATA_REGIMES}")
        if "display_name" in changes:
            name = changes["display_name"]
            if any(
                p.display_name == name and p.id != participant_id
                for p in self.store.participants.values()
            ):
                raise ValueError(f"display name {name!r} already taken")
        updated = replace(current, **changes)
        self.store.put_participant(updated)
        return updated

    # -- API keys ----------------------------------------------------------

    def create_key(self, participant: Participant) -> tuple[str, str]:
        """Returns (key_id, one-time secret). Only the salted hash persists."""
        if participant.id not in self.store.participants:
            raise KeyNotFoundError(participant.id)
        key_id = secrets.token_hex(4)
        while key_id in self.store.api_keys:
            key_id = secrets.token_hex(4)
        secret = secrets.token_urlsafe(24)
        salt = secrets.token_hex(16)
        record = ApiKey(
            key_id=key_id,
            secret_hash=_hash_secret(salt, secret),
            salt=salt,
            participant_id=participant.id,
            created_at=self.clock.now(),
        )
        self.store.put_api_key(record)
        return key_id, f"{key_id}.{secret}"

    def revoke_key(self, participant: Participant, key_id: str) -> None:
        """Idempotent; revoking a foreign key is NOT_FOUND, not forbidden."""
        record = self.store.api_keys.get(key_id)
        if record is None or record.participant_id != participant.id:
            raise KeyNotFoundError(key_id)
        if record.revoked_at is None:
            self.store.put_api_key(replace(record, revoked_at=self.clock.now()))

    def authenticate(self, presented_key: str) -> Participant:
        key_id, _, secret = (presented_key or "").partition(".")
        record = self.store.api_keys.get(key_id)
        if record is None or record.revoked_at is not None or not secret:
            raise UnauthenticatedError()
        if not hmac.compare_digest(record.secret_hash, _hash_secret(record.salt, secret)):
            raise UnauthenticatedError()
        participant = self.store.participants.get(record.participant_id)
        if participant is None:
            raise UnauthenticatedError()
        return participant

    # -- submissions -------------------------------------------------------

    def accept_submission(
        self,
        participant: Participant,
        event: ForecastEvent,
        payload: ForecastPayload,
        now: datetime | None = None,
    ) -> Submission:
        """Validate, gate-check, and append. Strict gate: now == gate is rejected."""
        received_at = now if now is not None else self.clock.now()
        if received_at >= event.gate_closure:
            raise GateClosedError(received_at, event.gate_closure)
        spec = self.store.registry_spec(event.challenge_id)
        if spec is None or event.area not in spec.areas:
            raise UnknownEventError(f"{event.challenge_id}/{event.area}")
        diags = validate_payload(spec, event, payload)
        if diags:
            raise PayloadRejected(diags)
        return self.store.append_submission(
            participant_id=participant.id,
            event=event,
            payload=payload,
            received_at=received_at,
        )

    def effective_submission(
        self, participant_id: str, event_key: tuple[str, str, str]
    ) -> Optional[Submission]:
        """Latest-wins: greatest received_at, ties broken by later insert."""
        candidates = self.store.submissions_for(event_key, participant_id)
        if not candidates:
            return None
        return max(candidates, key=lambda s: (s.received_at, s.seq))

    def effective_submissions(self, event_key: tuple[str, str, str]) -> dict[str, Submission]:
        out: dict[str, Submission] = {}
        for sub in self.store.submissions_for(event_key):
            best = out.get(sub.participant_id)
            if best is None or (sub.received_at, sub.seq) > (best.received_at, best.seq):
                out[sub.participant_id] = sub
        return out


def _hash_secret(salt: str, secret: str) -> str:
    return hashlib.sha256(bytes.fromhex(salt) + secret.encode("utf-8")).hexdigest()

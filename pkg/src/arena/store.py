"""Append-only deployment store with JSONL persistence.

Everything that matters is an append: submissions and observation versions
are never mutated, score records are superseded by appending newer
versions, participants and keys are snapshotted last-wins. Reloading a
store directory replays the logs, so replaying the append log reproduces
every derived answer exactly. A single lock serializes appends, giving
``received_at`` a total order; reads never block appends.
"""

from __future__ import annotations

import json
import threading
from bisect import insort
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable

from .config import ChallengeSpec
from .gateway import ApiKey, ForecastPayload, Participant, Submission
from .ingest import Observation
from .scoring import ScoreRecord
from .temporal import ForecastEvent

_KINDS = ("participants", "keys", "submissions", "observations", "scores", "scored_events")


class StoreError(Exception):
    pass


class ArenaStore:
    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._files: dict[str, IO[str]] = {}

        self.participants: dict[str, Participant] = {}
        self.api_keys: dict[str, ApiKey] = {}
        self.submissions: list[Submission] = []
        self._submissions_by_id: dict[str, Submission] = {}
        self._submissions_by_event: dict[tuple, list[Submission]] = {}
        self._seq = 0
        # (source, area, timestamp) -> versions sorted by version_at
        self._observations: dict[tuple, list[Observation]] = {}
        self.score_records: list[ScoreRecord] = []
        # full scoring log for as-of replay: (event_key, version_id, scored_at)
        self.scored_log: list[tuple[tuple[str, str, str], str, datetime]] = []
        self._registry: dict[str, ChallengeSpec] = {}

        if self.path is not None:
            try:
                self.path.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StoreError(f"cannot open store at {self.path}: {exc}") from exc
            self._load()

    # -- persistence ---------------------------------------------------------

    def _load(self) -> None:
        for kind in _KINDS:
            file = self.path / f"{kind}.jsonl"
            if not file.exists():
                continue
            for line in file.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._replay(kind, json.loads(line))

    def _replay(self, kind: str, d: dict) -> None:
        if kind == "participants":
            self.participants[d["id"]] = Participant.from_dict(d)
        elif kind == "keys":
            self.api_keys[d["key_id"]] = ApiKey.from_dict(d)
        elif kind == "submissions":
            sub = Submission.from_dict(d)
            self._index_submission(sub)
        elif kind == "observations":
            self._index_observation(Observation.from_dict(d))
        elif kind == "scores":
            self.score_records.append(ScoreRecord.from_dict(d))
        elif kind == "scored_events":
            self.scored_log.append(
                (tuple(d["event"]), d["version_id"], datetime.fromisoformat(d["scored_at"]))
            )

    def _append_line(self, kind: str, d: dict) -> None:
        if self.path is None:
            return
        handle = self._files.get(kind)
        if handle is None:
            handle = (self.path / f"{kind}.jsonl").open("a", encoding="utf-8")
            self._files[kind] = handle
        handle.write(json.dumps(d, separators=(",", ":")) + "\n")
        handle.flush()

    def close(self) -> None:
        for handle in self._files.values():
            handle.close()
        self._files.clear()

    # -- registry ------------------------------------------------------------

    def attach_registry(self, specs: Iterable[ChallengeSpec]) -> None:
        self._registry = {spec.id: spec for spec in specs}

    def registry_spec(self, challenge_id: str) -> ChallengeSpec | None:
        return self._registry.get(challenge_id)

    @property
    def registry(self) -> dict[str, ChallengeSpec]:
        return dict(self._registry)

    # -- participants / keys ---------------------------------------------------

    def put_participant(self, participant: Participant) -> None:
        with self._lock:
            self.participants[participant.id] = participant
            self._append_line("participants", participant.to_dict())

    def put_api_key(self, key: ApiKey) -> None:
        with self._lock:
            self.api_keys[key.key_id] = key
            self._append_line("keys", key.to_dict())

    # -- submissions -----------------------------------------------------------

    def _index_submission(self, sub: Submission) -> None:
        self.submissions.append(sub)
        self._submissions_by_id[sub.id] = sub
        self._submissions_by_event.setdefault(sub.event_key, []).append(sub)
        self._seq = max(self._seq, sub.seq)

    def append_submission(
        self,
        participant_id: str,
        event: ForecastEvent,
        payload: ForecastPayload,
        received_at: datetime,
    ) -> Submission:
        with self._lock:
            self._seq += 1
            sub = Submission(
                id=f"sub-{self._seq:08d}",
                seq=self._seq,
                participant_id=participant_id,
                challenge_id=event.challenge_id,
                area=event.area,
                delivery_date=event.delivery_date.isoformat(),
                payload=payload,
                received_at=received_at,
            )
            self._index_submission(sub)
            self._append_line("submissions", sub.to_dict())
            return sub

    def submission_by_id(self, submission_id: str) -> Submission | None:
        return self._submissions_by_id.get(submission_id)

    def submissions_for(
        self, event_key: tuple[str, str, str], participant_id: str | None = None
    ) -> list[Submission]:
        subs = self._submissions_by_event.get(tuple(event_key), [])
        if participant_id is None:
            return list(subs)
        return [s for s in subs if s.participant_id == participant_id]

    # -- observations ------------------------------------------------------------

    def _index_observation(self, obs: Observation) -> None:
        versions = self._observations.setdefault((obs.source, obs.area, obs.timestamp), [])
        insort(versions, obs, key=lambda o: o.version_at)

    def append_observation(self, obs: Observation) -> None:
        with self._lock:
            self._index_observation(obs)
            self._append_line("observations", obs.to_dict())

    def observation_versions(self, source: str, area: str, ts: datetime) -> list[Observation]:
        return self._observations.get((source, area, ts), [])

    def observed_timestamps(self, source: str, area: str) -> list[datetime]:
        return [key[2] for key in self._observations if key[0] == source and key[1] == area]

    # -- scores ---------------------------------------------------------------

    def add_score_records(self, records: Iterable[ScoreRecord]) -> None:
        with self._lock:
            for record in records:
                self.score_records.append(record)
                self._append_line("scores", record.to_dict())

    def mark_scored(
        self, event_key: tuple[str, str, str], version_id: str, scored_at: datetime
    ) -> None:
        with self._lock:
            self.scored_log.append((tuple(event_key), version_id, scored_at))
            self._append_line(
                "scored_events",
                {"event": list(event_key), "version_id": version_id, "scored_at": scored_at.isoformat()},
            )

    def last_scored_versions(self, as_of: datetime | None = None) -> dict[tuple[str, str, str], str]:
        """Latest scored ground-truth version per event, optionally as of an instant."""
        out: dict[tuple[str, str, str], str] = {}
        for event_key, version_id, scored_at in self.scored_log:
            if as_of is not None and scored_at > as_of:
                continue
            out[event_key] = version_id
        return out

    def latest_scores_for_event(
        self, event_key: tuple[str, str, str], as_of: datetime | None = None
    ) -> dict[tuple[str, str], ScoreRecord]:
        """Latest record per (participant, metric) for one event."""
        out: dict[tuple[str, str], ScoreRecord] = {}
        for record in self.score_records:
            if record.event_key != tuple(event_key):
                continue
            if as_of is not None and record.scored_at > as_of:
                continue
            out[(record.participant_id, record.metric)] = record
        return out

"""Point and probabilistic scores, lower-is-better, in target units.

Per-event scalars are unweighted means of per-timestamp scores over the
whole delivery grid (23, 24 or 25 terms on DST days at hourly resolution);
pooling across days is the leaderboard's job. Ensemble CRPS uses the
energy-form empirical estimator; quantile CRPS is twice the mean pinball
loss over the declared level grid, which coincides with the standard WIS
weighting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .config import ChallengeSpec, MetricName, MetricSpec
from .temporal import ForecastEvent

if TYPE_CHECKING:  # pragma: no cover
    from .gateway import Submission
    from .ingest import GroundTruthView

log = logging.getLogger(__name__)

CROSSING_TOLERANCE = 1e-9


class ScoringError(ValueError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class ScoreRecord:
    participant_id: str
    challenge_id: str
    area: str
    delivery_date: str
    metric: str
    value: float
    ground_truth_version: str
    scored_at: datetime

    @property
    def event_key(self) -> tuple[str, str, str]:
        return (self.challenge_id, self.area, self.delivery_date)

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "challenge_id": self.challenge_id,
            "area": self.area,
            "delivery_date": self.delivery_date,
            "metric": self.metric,
            "value": self.value,
            "ground_truth_version": self.ground_truth_version,
            "scored_at": self.scored_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRecord":
        return cls(
            participant_id=d["participant_id"],
            challenge_id=d["challenge_id"],
            area=d["area"],
            delivery_date=d["delivery_date"],
            metric=d["metric"],
            value=float(d["value"]),
            ground_truth_version=d["ground_truth_version"],
            scored_at=datetime.fromisoformat(d["scored_at"]),
        )


def _as_series(x: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ScoringError("LENGTH_MISMATCH", f"{name} must be a non-empty 1-d series")
    if not np.all(np.isfinite(arr)):
        raise ScoringError("NON_FINITE", f"{name} contains non-finite values")
    return arr


def _paired(f: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    fa, ya = _as_series(f, "forecast"), _as_series(y, "observation")
    if fa.shape != ya.shape:
        raise ScoringError("LENGTH_MISMATCH", f"forecast has {fa.size} values, observation {ya.size}")
    return fa, ya


def mae(f: Sequence[float], y: Sequence[float]) -> float:
    fa, ya = _paired(f, y)
    return float(np.mean(np.abs(fa - ya)))


def rmse(f: Sequence[float], y: Sequence[float]) -> float:
    fa, ya = _paired(f, y)
    return float(np.sqrt(np.mean((fa - ya) ** 2)))


def pinball(q: float, y: float, tau: float) -> float:
    """Quantile loss: tau*(y-q) above the quantile, (1-tau)*(q-y) below."""
    if not 0.0 < tau < 1.0:
        raise ScoringError("BAD_LEVEL", f"level must be in (0, 1), got {tau}")
    if y >= q:
        return tau * (y - q)
    return (1.0 - tau) * (q - y)


def crps_quantile(levels: Sequence[float], q: Sequence[float], y: float) -> float:
    """CRPS approximation from a quantile grid: twice the mean pinball loss."""
    lv = np.asarray(levels, dtype=float)
    qa = _as_series(q, "quantiles")
    if lv.shape != qa.shape:
        raise ScoringError("LENGTH_MISMATCH", "levels and quantile values differ in length")
    if np.any(lv <= 0.0) or np.any(lv >= 1.0) or np.any(np.diff(lv) <= 0.0):
        raise ScoringError("BAD_LEVEL", "levels must be strictly increasing in (0, 1)")
    if np.any(np.diff(qa) < -CROSSING_TOLERANCE):
        raise ScoringError("CROSSING", "quantile values must be non-decreasing in level")
    losses = np.where(y >= qa, lv * (y - qa), (1.0 - lv) * (qa - y))
    return float(2.0 * np.mean(losses))


def crps_ensemble(x: Sequence[float], y: float) -> float:
    """Energy-form empirical CRPS: mean|x-y| - mean pairwise spread / 2."""
    xa = np.asarray(x, dtype=float)
    if xa.ndim != 1 or xa.size == 0:
        raise ScoringError("EMPTY_ENSEMBLE", "ensemble must contain at least one member")
    if not np.all(np.isfinite(xa)) or not np.isfinite(y):
        raise ScoringError("NON_FINITE", "ensemble and observation must be finite")
    m = xa.size
    term1 = float(np.mean(np.abs(xa - y)))
    # np.sum is pairwise, bounding rounding error on the double sum.
    term2 = float(np.sum(np.abs(xa[:, None] - xa[None, :]))) / (2.0 * m * m)
    return term1 - term2


def interval_score(l: float, u: float, alpha: float, y: float) -> float:
    """Width plus (2/alpha)-weighted penalties for observations outside [l, u]."""
    if l > u:
        raise ScoringError("INVERTED_INTERVAL", f"lower {l} exceeds upper {u}")
    if not 0.0 < alpha < 1.0:
        raise ScoringError("BAD_ALPHA", f"alpha must be in (0, 1), got {alpha}")
    return (u - l) + (2.0 / alpha) * max(l - y, 0.0) + (2.0 / alpha) * max(y - u, 0.0)


def wis(levels: Sequence[float], q: Sequence[float], y: float) -> float:
    """Weighted interval score over a symmetric quantile grid containing 0.5.

    Decomposes the grid into K central intervals with nominal coverage
    1 - alpha_k (alpha_k = twice the lower level of pair k) plus the median,
    weighting each interval score by alpha_k/2 and the median absolute error
    by 1/2.
    """
    lv = list(map(float, levels))
    qa = list(map(float, q))
    if len(lv) != len(qa):
        raise ScoringError("LENGTH_MISMATCH", "levels and quantile values differ in length")
    if len(lv) % 2 == 0 or not any(abs(v - 0.5) <= 1e-12 for v in lv):
        raise ScoringError("NO_MEDIAN", "grid must contain the 0.5 level")
    if any(abs((a + b) - 1.0) > 1e-12 for a, b in zip(lv, reversed(lv))):
        raise ScoringError("ASYMMETRIC_GRID", "for each level t below 0.5, 1-t must be present")

    k_pairs = (len(lv) - 1) // 2
    median = qa[k_pairs]
    total = 0.5 * abs(y - median)
    for k in range(k_pairs):
        alpha = 2.0 * lv[k]
        total += (alpha / 2.0) * interval_score(qa[k], qa[-1 - k], alpha, y)
    return total / (k_pairs + 0.5)


def derived_point_series(submission: "Submission") -> np.ndarray | None:
    """Point series used by MAE/RMSE when no explicit point was sent.

    Fixed, published derivation rule: the explicit point series if present,
    else the 0.5-quantile row, else the ensemble member-wise mean.
    """
    payload = submission.payload
    if payload.point is not None:
        return np.asarray(payload.point, dtype=float)
    if payload.quantiles is not None:
        levels, values = payload.quantiles
        for i, lv in enumerate(levels):
            if abs(lv - 0.5) <= 1e-12:
                return np.asarray(values[i], dtype=float)
    if payload.ensemble is not None:
        return np.mean(np.asarray(payload.ensemble, dtype=float), axis=0)
    return None


def _metric_value(metric: MetricSpec, submission: "Submission", y: np.ndarray) -> float | None:
    """Per-event scalar for one metric, or None when the submission lacks
    every representation the metric needs."""
    payload = submission.payload
    name = metric.name

    if name in (MetricName.MAE, MetricName.RMSE):
        f = derived_point_series(submission)
        if f is None:
            return None
        return mae(f, y) if name is MetricName.MAE else rmse(f, y)

    if name is MetricName.PINBALL:
        if payload.quantiles is None:
            return None
        tau = float(metric.params["level"])
        levels, values = payload.quantiles
        row = None
        for i, lv in enumerate(levels):
            if abs(lv - tau) <= 1e-12:
                row = np.asarray(values[i], dtype=float)
                break
        if row is None:
            return None
        return float(np.mean([pinball(row[t], y[t], tau) for t in range(y.size)]))

    if name is MetricName.CRPS_QUANTILE:
        if payload.quantiles is None:
            return None
        levels, values = payload.quantiles
        mat = np.asarray(values, dtype=float)
        return float(np.mean([crps_quantile(levels, mat[:, t], y[t]) for t in range(y.size)]))

    if name is MetricName.WIS:
        if payload.quantiles is None:
            return None
        levels, values = payload.quantiles
        mat = np.asarray(values, dtype=float)
        return float(np.mean([wis(levels, mat[:, t], y[t]) for t in range(y.size)]))

    if name is MetricName.CRPS_ENSEMBLE:
        if payload.ensemble is None:
            return None
        mat = np.asarray(payload.ensemble, dtype=float)
        return float(np.mean([crps_ensemble(mat[:, t], y[t]) for t in range(y.size)]))

    raise ScoringError("UNSUPPORTED_METRIC", name.value)  # pragma: no cover


def score_event(
    spec: ChallengeSpec,
    event: ForecastEvent,
    submissions: Mapping[str, "Submission"],
    truth: "GroundTruthView",
    scored_at: datetime,
) -> list[ScoreRecord]:
    """Score every effective submission against complete ground truth.

    Deterministic and idempotent for a fixed ground-truth version. A
    submission lacking every representation a metric needs yields no record
    for that pair (logged); other participants and metrics are unaffected.
    """
    if truth.completeness != 1.0:
        raise ScoringError(
            "INCOMPLETE_GROUND_TRUTH",
            f"{event.key}: completeness {truth.completeness:.3f} < 1.0",
        )
    y = np.asarray(truth.values, dtype=float)
    if y.size != event.n_slots:
        raise ScoringError("INCOMPLETE_GROUND_TRUTH", "ground truth does not match the event grid")

    records: list[ScoreRecord] = []
    for pid in sorted(submissions):
        submission = submissions[pid]
        for metric in spec.metrics:
            value = _metric_value(metric, submission, y)
            if value is None:
                log.warning(
                    "no compatible representation: participant=%s event=%s metric=%s",
                    pid,
                    event.key,
                    metric.key(),
                )
                continue
            records.append(
                ScoreRecord(
                    participant_id=pid,
                    challenge_id=event.challenge_id,
                    area=event.area,
                    delivery_date=event.delivery_date.isoformat(),
                    metric=metric.key(),
                    value=value,
                    ground_truth_version=truth.version_id,
                    scored_at=scored_at,
                )
            )
    return records

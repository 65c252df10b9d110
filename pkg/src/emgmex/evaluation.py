"""Detection scoring against ground-truth intervals.

Interval-level metrics are IoU statistics; moment-level metrics are the
absolute onset/offset differences in seconds. Two denominators are
reported for P(IoU > 0.5): ``p_iou_gt_half`` is over detected segments,
``p_iou_gt_half_all`` counts undetected segments against it. The IoU mean
and the moment statistics cover detected segments only; ``n_nan`` counts
the rest.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .model import DetectionInterval, ExpressionAnnotation


def iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Intersection over union of two closed intervals; 0 when disjoint."""
    a0, a1 = float(a[0]), float(a[1])
    b0, b1 = float(b[0]), float(b[1])
    if a1 < a0 or b1 < b0:
        raise DomainError(f"inverted interval in IoU: {a}, {b}")
    len_a = a1 - a0
    len_b = b1 - b0
    if len_a == 0.0 or len_b == 0.0:
        warnings.warn("zero-length interval in IoU, scoring 0", RuntimeWarning)
        return 0.0
    inter = max(0.0, min(a1, b1) - max(a0, b0))
    union = len_a + len_b - inter
    return inter / union


@dataclass(frozen=True)
class MomentStats:
    mean_s: float
    se_s: float
    rmse_s: float

    def to_dict(self) -> dict:
        return {"mean_s": self.mean_s, "se_s": self.se_s, "rmse_s": self.rmse_s}


@dataclass(frozen=True)
class PerSample:
    id: str
    iou: float | None
    d_onset_s: float | None
    d_offset_s: float | None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "iou": self.iou,
            "d_onset_s": self.d_onset_s,
            "d_offset_s": self.d_offset_s,
        }


@dataclass(frozen=True)
class EvalReport:
    n_total: int
    n_nan: int
    mean_iou: float
    p_iou_gt_half: float
    p_iou_gt_half_all: float
    onset_err: MomentStats
    offset_err: MomentStats
    per_sample: tuple[PerSample, ...]

    @property
    def n_detected(self) -> int:
        return self.n_total - self.n_nan

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_nan": self.n_nan,
            "n_detected": self.n_detected,
            "mean_iou": self.mean_iou,
            "p_iou_gt_half": self.p_iou_gt_half,
            "p_iou_gt_half_all": self.p_iou_gt_half_all,
            "onset_err": self.onset_err.to_dict(),
            "offset_err": self.offset_err.to_dict(),
            "per_sample": [row.to_dict() for row in self.per_sample],
        }


def _moment_stats(errors: np.ndarray) -> MomentStats:
    if errors.size == 0:
        return MomentStats(mean_s=0.0, se_s=0.0, rmse_s=0.0)
    mean = float(errors.mean())
    se = float(errors.std(ddof=1) / math.sqrt(errors.size)) if errors.size > 1 else 0.0
    rmse = float(math.sqrt(np.mean(errors**2)))
    # For absolute errors RMSE >= mean by Jensen's inequality; a violation
    # would mean the statistics were computed over different samples.
    assert rmse >= mean - 1e-12, (rmse, mean)
    return MomentStats(mean_s=mean, se_s=se, rmse_s=rmse)


def _truth_seconds(truth) -> tuple[float, float]:
    if isinstance(truth, ExpressionAnnotation):
        return truth.onset_ms / 1000.0, truth.offset_ms / 1000.0
    t0, t1 = truth
    return float(t0), float(t1)


def _pred_seconds(pred, sample_rate_hz: float) -> tuple[float, float]:
    if isinstance(pred, DetectionInterval):
        return pred.onset_sample / sample_rate_hz, pred.offset_sample / sample_rate_hz
    p0, p1 = pred
    return float(p0) / sample_rate_hz, float(p1) / sample_rate_hz


def evaluate(
    preds: Mapping[str, Sequence],
    truths: Mapping[str, object],
    sample_rate_hz: float,
) -> EvalReport:
    """Score predicted intervals against ground truth, keyed by segment id.

    ``preds`` values are sequences of DetectionInterval (or sample-index
    pairs); an empty sequence marks an undetected segment. ``truths``
    values are ExpressionAnnotation (millisecond fields) or second pairs.
    When a segment has several predicted intervals, the one with the best
    IoU against the truth is scored. Segment ids must match exactly.
    """
    pred_ids = set(preds.keys())
    truth_ids = set(truths.keys())
    if pred_ids != truth_ids:
        orphans = sorted(pred_ids ^ truth_ids)
        raise DomainError(
            f"prediction/truth segment ids do not match; orphans: {orphans}"
        )

    rows = []
    ious = []
    d_onsets = []
    d_offsets = []
    n_nan = 0
    for seg_id in sorted(truth_ids):
        truth_s = _truth_seconds(truths[seg_id])
        candidates = [_pred_seconds(p, sample_rate_hz) for p in preds[seg_id]]
        if not candidates:
            n_nan += 1
            rows.append(PerSample(id=seg_id, iou=None, d_onset_s=None, d_offset_s=None))
            continue
        scored = [(iou(c, truth_s), c) for c in candidates]
        best_iou, best = max(scored, key=lambda t: t[0])
        d_on = abs(best[0] - truth_s[0])
        d_off = abs(best[1] - truth_s[1])
        ious.append(best_iou)
        d_onsets.append(d_on)
        d_offsets.append(d_off)
        rows.append(PerSample(id=seg_id, iou=best_iou, d_onset_s=d_on, d_offset_s=d_off))

    n_total = len(rows)
    iou_arr = np.asarray(ious, dtype=np.float64)
    hits = int(np.sum(iou_arr > 0.5)) if iou_arr.size else 0
    return EvalReport(
        n_total=n_total,
        n_nan=n_nan,
        mean_iou=float(iou_arr.mean()) if iou_arr.size else 0.0,
        p_iou_gt_half=hits / iou_arr.size if iou_arr.size else 0.0,
        p_iou_gt_half_all=hits / n_total if n_total else 0.0,
        onset_err=_moment_stats(np.asarray(d_onsets)),
        offset_err=_moment_stats(np.asarray(d_offsets)),
        per_sample=tuple(rows),
    )

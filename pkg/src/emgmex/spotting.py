"""Baseline EMG expression-interval detection.

The envelope of the strongest channel is min-max normalized; a sliding
window marks where the windowed mean exceeds a threshold proportional to
the segment mean; sufficiently long runs of marked windows indicate a
peak, and the interval bounds are the troughs found just before and after
the run. All steps are deterministic, and because the normalization
absorbs any positive scale factor, detections are amplitude-scale
invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from . import dsp
from .errors import DomainError
from .model import DetectionInterval, EmgRecording, SpotParams


@dataclass(frozen=True)
class WindowEnergy:
    window_index: int
    start_sample: int
    energy: float


@dataclass(frozen=True)
class SpotResult:
    intervals: tuple[DetectionInterval, ...]
    threshold: float
    energies: tuple[WindowEnergy, ...]
    channel_id: str
    degenerate: bool = False
    collapsed_fallback: bool = False


def normalize_segment(envelope: np.ndarray) -> tuple[np.ndarray, bool]:
    """Min-max scale to [0, 1]; a constant segment maps to zeros.

    Returns (normalized, degenerate): the flag marks constant input whose
    range is zero, for which no threshold can be defined.
    """
    x = np.asarray(envelope, dtype=np.float64)
    if x.size == 0:
        raise DomainError("cannot normalize an empty segment")
    lo = float(x.min())
    hi = float(x.max())
    if hi <= lo:
        return np.zeros_like(x), True
    return (x - lo) / (hi - lo), False


def window_energies(norm: np.ndarray, params: SpotParams) -> list[WindowEnergy]:
    """Mean of each sliding window; the trailing partial window is dropped."""
    x = np.asarray(norm, dtype=np.float64)
    if x.size < params.window_len:
        raise DomainError(
            f"segment of {x.size} samples is shorter than one window "
            f"({params.window_len} samples)"
        )
    count = (x.size - params.window_len) // params.step + 1
    out = []
    for m in range(count):
        start = m * params.step
        out.append(
            WindowEnergy(
                window_index=m,
                start_sample=start,
                energy=float(x[start : start + params.window_len].mean()),
            )
        )
    return out


def detect_runs(
    energies: Sequence[WindowEnergy | float], threshold: float, min_run: int
) -> list[tuple[int, int]]:
    """Maximal runs of consecutive windows with energy strictly above
    ``threshold`` whose length is at least ``min_run``.

    Returns inclusive (first_window, last_window) pairs in order.
    """
    values = [e.energy if isinstance(e, WindowEnergy) else float(e) for e in energies]
    runs = []
    start = None
    for i, v in enumerate(values):
        if v > threshold:
            if start is None:
                start = i
        elif start is not None:
            if i - start >= min_run:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(values) - start >= min_run:
        runs.append((start, len(values) - 1))
    return runs


def run_extent(run: tuple[int, int], params: SpotParams) -> tuple[int, int]:
    """Inclusive sample span covered by a run of windows."""
    first, last = run
    return first * params.step, last * params.step + params.window_len - 1


def locate_bounds(
    norm: np.ndarray,
    run: tuple[int, int],
    params: SpotParams,
    channel_id: str = "c1",
) -> DetectionInterval:
    """Bound a run by the troughs before and after its sample extent.

    The onset is the argmin over ``back_windows`` steps before the run
    start, the offset the argmin over ``fwd_windows`` steps after the run
    end; both ranges are clamped to the segment and the earliest index
    wins ties.
    """
    x = np.asarray(norm, dtype=np.float64)
    run_start, run_end = run_extent(run, params)
    lo = max(0, run_start - params.back_windows * params.step)
    onset = lo + int(np.argmin(x[lo : run_start + 1]))
    hi = min(x.size - 1, run_end + params.fwd_windows * params.step)
    offset = run_end + int(np.argmin(x[run_end : hi + 1]))
    return DetectionInterval(
        onset_sample=onset, offset_sample=offset, peak_run=run, channel_id=channel_id
    )


def _resolve_overlaps(
    intervals: list[DetectionInterval],
    runs: list[tuple[int, int]],
    norm: np.ndarray,
    params: SpotParams,
) -> list[DetectionInterval]:
    """Split overlapping neighbours at the trough both of them claim."""
    resolved = list(intervals)
    for i in range(len(resolved) - 1):
        cur, nxt = resolved[i], resolved[i + 1]
        if nxt.onset_sample >= cur.offset_sample:
            continue
        _, cur_end = run_extent(runs[i], params)
        nxt_start, _ = run_extent(runs[i + 1], params)
        lo = max(nxt.onset_sample, cur_end)
        hi = min(cur.offset_sample, nxt_start)
        if lo > hi or cur.onset_sample >= lo or hi >= nxt.offset_sample:
            # No room for a shared boundary; merge into one interval.
            merged = DetectionInterval(
                onset_sample=cur.onset_sample,
                offset_sample=nxt.offset_sample,
                peak_run=(cur.peak_run[0], nxt.peak_run[1]),
                channel_id=cur.channel_id,
            )
            resolved[i : i + 2] = [merged, merged]
            continue
        split = lo + int(np.argmin(norm[lo : hi + 1]))
        resolved[i] = DetectionInterval(
            onset_sample=cur.onset_sample,
            offset_sample=split,
            peak_run=cur.peak_run,
            channel_id=cur.channel_id,
        )
        resolved[i + 1] = DetectionInterval(
            onset_sample=split,
            offset_sample=nxt.offset_sample,
            peak_run=nxt.peak_run,
            channel_id=nxt.channel_id,
        )
    deduped = []
    for interval in resolved:
        if not deduped or deduped[-1] != interval:
            deduped.append(interval)
    return deduped


def spot(
    recording: EmgRecording,
    params: SpotParams | None = None,
    mode: str = "tightest",
) -> SpotResult:
    """Detect expression intervals in an envelope-domain segment.

    The channel with the largest envelope amplitude is selected and
    normalized. ``mode="all"`` returns every qualifying interval;
    ``mode="tightest"`` collapses them to a single interval taking the
    latest onset and the earliest offset (the single-expression validation
    rule). When that collapse would invert the interval (clearly disjoint
    runs), the run with the highest peak energy is returned instead and
    flagged. No qualifying run yields an empty interval list.
    """
    params = params or SpotParams()
    if mode not in ("all", "tightest"):
        raise DomainError(f"unknown mode {mode!r}")
    if recording.domain != "envelope":
        raise DomainError(
            f"spotting requires an envelope-domain recording, got {recording.domain!r}"
        )

    # max() keeps the first of equals, so ties go to the lowest channel id.
    best = max(
        sorted(recording.channels, key=lambda c: c.channel_id),
        key=lambda c: float(c.samples.max()),
    )
    norm, degenerate = normalize_segment(best.samples)
    if degenerate:
        return SpotResult(
            intervals=(),
            threshold=0.0,
            energies=(),
            channel_id=best.channel_id,
            degenerate=True,
        )

    threshold = params.threshold_scale * float(norm.mean())
    energies = window_energies(norm, params)
    runs = detect_runs(energies, threshold, params.min_run)
    intervals = [locate_bounds(norm, run, params, best.channel_id) for run in runs]
    intervals = _resolve_overlaps(intervals, runs, norm, params)

    collapsed_fallback = False
    if mode == "tightest" and len(intervals) > 1:
        onset = max(i.onset_sample for i in intervals)
        offset = min(i.offset_sample for i in intervals)
        if onset < offset:
            intervals = [
                DetectionInterval(
                    onset_sample=onset,
                    offset_sample=offset,
                    peak_run=(
                        min(i.peak_run[0] for i in intervals),
                        max(i.peak_run[1] for i in intervals),
                    ),
                    channel_id=best.channel_id,
                )
            ]
        else:
            def run_peak(interval: DetectionInterval) -> float:
                first, last = interval.peak_run
                return max(e.energy for e in energies[first : last + 1])

            intervals = [max(intervals, key=run_peak)]
            collapsed_fallback = True

    return SpotResult(
        intervals=tuple(intervals),
        threshold=threshold,
        energies=tuple(energies),
        channel_id=best.channel_id,
        degenerate=False,
        collapsed_fallback=collapsed_fallback,
    )


def spot_recording(
    recording: EmgRecording,
    params: SpotParams | None = None,
    mode: str = "tightest",
) -> tuple[SpotResult, bool]:
    """Spot a recording, preprocessing it first if it is still raw.

    Returns (result, preprocessed) so callers can record whether the
    envelope was derived on the fly. This is the single entry point the
    CLI and the annotation service share.
    """
    preprocessed = False
    if recording.domain == "raw":
        recording = dsp.preprocess(recording)
        preprocessed = True
    return spot(recording, params, mode), preprocessed


def sweep(
    segments: Mapping[str, EmgRecording],
    truths: Mapping[str, tuple[float, float]],
    grid: Mapping[str, Sequence],
    mode: str = "tightest",
) -> list[dict]:
    """Score every parameter combination of ``grid`` against ground truth.

    ``grid`` maps SpotParams field names to candidate values; omitted
    fields keep their defaults. Combinations are ranked by mean IoU over
    all segments with undetected segments scored 0, so misses are
    penalized rather than silently dropped.
    """
    from .evaluation import evaluate  # local import keeps module load light

    names = list(grid.keys())
    valid = set(SpotParams().to_dict().keys())
    unknown = [n for n in names if n not in valid]
    if unknown:
        raise DomainError(f"unknown sweep parameter(s): {unknown}")

    results = []
    for combo in product(*(grid[n] for n in names)):
        params = SpotParams(**dict(zip(names, combo)))
        preds = {}
        for seg_id, recording in segments.items():
            result, _ = spot_recording(recording, params, mode)
            preds[seg_id] = result.intervals
        fs = next(iter(segments.values())).sample_rate_hz
        report = evaluate(preds, truths, sample_rate_hz=fs)
        detected = [row.iou for row in report.per_sample if row.iou is not None]
        mean_iou_all = sum(detected) / max(len(report.per_sample), 1)
        results.append(
            {
                "params": params.to_dict(),
                "mean_iou_all": mean_iou_all,
                "mean_iou_detected": report.mean_iou,
                "p_iou_gt_half": report.p_iou_gt_half,
                "n_nan": report.n_nan,
                "onset_rmse_s": report.onset_err.rmse_s,
                "offset_rmse_s": report.offset_err.rmse_s,
            }
        )
    results.sort(key=lambda r: -r["mean_iou_all"])
    return results

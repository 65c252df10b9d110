"""Expression intensity indicators computed on envelope-domain signals.

MVC calibration takes the maximum across repeated maximum-contraction
trials per channel. For each expression window the channel with the
largest envelope peak is selected; its peak over the channel MVC gives
the intensity percentage, and the time integral of the normalized
envelope gives the joint duration-intensity indicator. Both ratios are
invariant to any fixed amplifier gain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import CalibrationError, DomainError
from .model import CHANNEL_IDS, EmgRecording, ExpressionAnnotation

NORM_MODES = ("mvc", "minmax")


@dataclass(frozen=True)
class MvcCalibration:
    """Per-channel trial peaks and the resulting MVC values."""

    trials: Mapping[str, tuple[float, ...]]
    mvc: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", dict(self.trials))
        object.__setattr__(self, "mvc", dict(self.mvc))


def calibrate_mvc(trial_segments: Mapping[str, Sequence[np.ndarray]]) -> MvcCalibration:
    """Reduce repeated maximum-contraction envelope segments to MVC values.

    Every trial must show actual activation; a flat-zero trial would later
    turn the intensity ratio into a division by zero, so it is rejected
    here (mirroring the exclusion of uncalibratable expressions upstream).
    """
    trials: dict[str, tuple[float, ...]] = {}
    mvc: dict[str, float] = {}
    for channel_id, segments in trial_segments.items():
        if channel_id not in CHANNEL_IDS:
            raise DomainError(f"unknown channel id {channel_id!r}")
        segments = list(segments)
        if not segments:
            raise CalibrationError(f"channel {channel_id}: no calibration trials")
        peaks = []
        for i, segment in enumerate(segments):
            segment = np.asarray(segment, dtype=np.float64)
            if segment.size == 0:
                raise CalibrationError(f"channel {channel_id}: trial {i} is empty")
            peak = float(segment.max())
            if peak <= 0.0:
                raise CalibrationError(
                    f"channel {channel_id}: trial {i} shows no activation (peak {peak})"
                )
            peaks.append(peak)
        trials[channel_id] = tuple(peaks)
        mvc[channel_id] = max(peaks)
    return MvcCalibration(trials=trials, mvc=mvc)


@dataclass(frozen=True)
class ChannelSelection:
    """Argmax channel for a window plus its peak; flags an all-zero window."""

    channel_id: str
    peak: float
    no_signal: bool = False


def select_channel(
    recording: EmgRecording, window: tuple[int, int]
) -> ChannelSelection:
    """Pick the channel with the largest envelope peak inside ``window``.

    ``window`` is a half-open [start, stop) sample range. Exact ties go to
    the lowest channel index; an all-zero window selects c1-equivalent
    (the first channel) and is flagged ``no_signal``.
    """
    t1, t2 = window
    if t1 >= t2:
        raise DomainError(f"empty selection window [{t1}, {t2})")
    if t1 < 0 or t2 > recording.duration_samples:
        raise DomainError(
            f"window [{t1}, {t2}) outside segment of {recording.duration_samples} samples"
        )
    best_id = None
    best_peak = -np.inf
    for trace in sorted(recording.channels, key=lambda c: c.channel_id):
        peak = float(trace.samples[t1:t2].max())
        if peak > best_peak:
            best_id, best_peak = trace.channel_id, peak
    return ChannelSelection(
        channel_id=best_id, peak=best_peak, no_signal=best_peak <= 0.0
    )


def mvc_percent(peak: float, mvc: float) -> float:
    """Peak amplitude as a percentage of the channel MVC."""
    if mvc <= 0:
        raise DomainError(f"MVC must be positive, got {mvc}")
    return 100.0 * peak / mvc


@dataclass(frozen=True)
class NormContext:
    """How the envelope is normalized before integration.

    "mvc" divides by the channel MVC (the default, matching the intensity
    ratio); "minmax" rescales by the trace's own range. The mode is kept
    so outputs can record which normalization produced them.
    """

    mode: str
    mvc: float | None = None
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in NORM_MODES:
            raise DomainError(f"unknown normalization mode {self.mode!r}")
        if self.mode == "mvc":
            if self.mvc is None or self.mvc <= 0:
                raise DomainError("mvc normalization requires a positive MVC value")
        elif self.hi <= self.lo:
            raise DomainError("minmax normalization requires hi > lo")

    @classmethod
    def for_mvc(cls, mvc: float) -> "NormContext":
        return cls(mode="mvc", mvc=mvc)

    @classmethod
    def for_minmax(cls, trace: np.ndarray) -> "NormContext":
        trace = np.asarray(trace, dtype=np.float64)
        lo, hi = float(trace.min()), float(trace.max())
        if hi <= lo:
            raise DomainError("minmax normalization undefined for a constant trace")
        return cls(mode="minmax", lo=lo, hi=hi)

    def apply(self, values: np.ndarray) -> np.ndarray:
        if self.mode == "mvc":
            return values / self.mvc
        return (values - self.lo) / (self.hi - self.lo)


def iemg(
    segment: np.ndarray,
    t1: int,
    t2: int,
    norm: NormContext,
    sample_rate_hz: float,
) -> float:
    """Rectangular-rule integral of the normalized envelope over [t1, t2).

    The half-open window makes the integral additive over adjacent
    windows: iemg(a, b) + iemg(b, c) == iemg(a, c).
    """
    segment = np.asarray(segment, dtype=np.float64)
    if not 0 <= t1 < t2 <= segment.size:
        raise DomainError(
            f"integration bounds [{t1}, {t2}) invalid for {segment.size} samples"
        )
    normalized = norm.apply(segment[t1:t2])
    return float(normalized.sum() / sample_rate_hz)


@dataclass(frozen=True)
class ExpressionIndicators:
    """Per-expression channel selection, intensity and integrated activity."""

    channel_id: str
    peak_amplitude: float
    mvc_percent: float
    iemg: float
    norm_mode: str = "mvc"
    no_signal: bool = False


def compute_indicators(
    recording: EmgRecording,
    annotation: ExpressionAnnotation,
    mvc: Mapping[str, float],
    norm_mode: str = "mvc",
) -> ExpressionIndicators:
    """Full indicator battery for one annotated expression.

    The recording must be envelope-domain. The channel is re-derived from
    the expression window (largest peak wins) rather than trusted from the
    annotation, matching how expressions are attributed to channels.
    """
    if recording.domain != "envelope":
        raise DomainError(
            f"indicators require an envelope-domain recording, got {recording.domain!r}"
        )
    fs = recording.sample_rate_hz
    t1 = int(round(annotation.onset_ms * fs / 1000.0))
    t2 = int(round(annotation.offset_ms * fs / 1000.0))
    t2 = min(t2, recording.duration_samples)
    selection = select_channel(recording, (t1, t2))
    channel_mvc = mvc.get(selection.channel_id)
    if channel_mvc is None:
        raise CalibrationError(
            f"no MVC value for selected channel {selection.channel_id}"
        )
    trace = recording.channel(selection.channel_id).samples
    if norm_mode == "mvc":
        norm = NormContext.for_mvc(channel_mvc)
    else:
        norm = NormContext.for_minmax(trace)
    return ExpressionIndicators(
        channel_id=selection.channel_id,
        peak_amplitude=selection.peak,
        mvc_percent=mvc_percent(selection.peak, channel_mvc),
        iemg=iemg(trace, t1, t2, norm, fs),
        norm_mode=norm_mode,
        no_signal=selection.no_signal,
    )

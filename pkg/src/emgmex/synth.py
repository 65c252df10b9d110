"""Synthetic EMG-like segments with known ground truth.

Bursts are band-limited noise carriers (white noise shaped by the same
20-450 Hz band-pass the pipeline uses) modulated by a triangular or
raised-cosine amplitude profile, on top of a wideband noise floor. The
burst-peak-to-floor-RMS ratio defines the segment SNR. Everything is
deterministic given the seeds.

``planted_indicator_dataset`` draws labeled (duration, intensity) points
around the reference micro-/macro-expression centers for cluster-recovery
tests: intensity spread uses the reported sample standard deviations
(8.54 / 21.27 MVC%), duration spread uses the half-widths of the reported
interval estimates (10 / 134 ms), the only duration dispersion available;
the full CI-derived sample deviations would swamp the planted structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import DomainError, ValidationError
from .model import ChannelTrace, EmgRecording

BURST_SHAPES = ("triangular", "raised_cosine")

# (duration_ms, mvc_percent) generator parameters for the planted dataset.
PLANTED_ME_CENTER = (317.0, 8.11)
PLANTED_ME_SPREAD = (10.0, 8.54)
PLANTED_MAE_CENTER = (1161.0, 23.09)
PLANTED_MAE_SPREAD = (134.0, 21.27)


@dataclass(frozen=True)
class BurstSpec:
    onset_s: float
    offset_s: float
    peak_amplitude: float
    shape: str = "raised_cosine"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.offset_s <= self.onset_s:
            raise ValidationError("burst offset must exceed onset")
        if self.peak_amplitude <= 0:
            raise ValidationError("burst amplitude must be positive")
        if self.shape not in BURST_SHAPES:
            raise ValidationError(f"unknown burst shape {self.shape!r}")


@dataclass(frozen=True)
class SynthSegment:
    recording: EmgRecording
    truth: tuple[tuple[float, float], ...]
    snr_db: float


def _burst_profile(t: np.ndarray, spec: BurstSpec) -> np.ndarray:
    center = (spec.onset_s + spec.offset_s) / 2.0
    half = (spec.offset_s - spec.onset_s) / 2.0
    rel = (t - center) / half
    if spec.shape == "triangular":
        return np.clip(1.0 - np.abs(rel), 0.0, None)
    return np.where(np.abs(rel) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * rel)), 0.0)


def generate(
    specs: list[BurstSpec],
    duration_s: float,
    sample_rate_hz: int = 1000,
    noise_floor: float = 0.0,
    seed: int = 0,
    recording_id: str = "synth",
    n_channels: int = 1,
    burst_channel: str | None = None,
) -> SynthSegment:
    """Build a raw-domain recording with the requested bursts.

    ``noise_floor`` is the RMS of the added wideband noise; the reported
    SNR is 20*log10(max burst peak / noise_floor). With seven channels the
    bursts go on ``burst_channel`` (default c5) and every channel gets its
    own floor noise.
    """
    if sample_rate_hz < 1000:
        raise DomainError(
            f"sample rate {sample_rate_hz} is too low for the 450 Hz carrier band"
        )
    if duration_s <= 0:
        raise DomainError("duration must be positive")
    if noise_floor < 0:
        raise DomainError("noise floor must be non-negative")
    if n_channels not in (1, 7):
        raise DomainError("n_channels must be 1 or 7")

    ordered = sorted(specs, key=lambda s: s.onset_s)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.onset_s < prev.offset_s:
            raise DomainError(
                f"bursts overlap: [{prev.onset_s}, {prev.offset_s}] and "
                f"[{cur.onset_s}, {cur.offset_s}]"
            )
    for spec in ordered:
        if spec.onset_s < 0 or spec.offset_s > duration_s:
            raise DomainError(f"burst [{spec.onset_s}, {spec.offset_s}] outside segment")

    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    bp = dsp.band_pass_cascade(sample_rate_hz)

    burst_sum = np.zeros(n)
    for spec in ordered:
        rng = np.random.default_rng(spec.seed)
        carrier = dsp.apply_filter(bp, rng.standard_normal(n))
        carrier /= math.sqrt(float(np.mean(carrier**2)))
        burst_sum += spec.peak_amplitude * _burst_profile(t, spec) * carrier

    floor_rng = np.random.default_rng(seed)
    channel_ids = ["c1"] if n_channels == 1 else [f"c{i}" for i in range(1, 8)]
    target = burst_channel or ("c1" if n_channels == 1 else "c5")
    if target not in channel_ids:
        raise DomainError(f"burst channel {target!r} not among {channel_ids}")

    channels = []
    for cid in channel_ids:
        samples = floor_rng.standard_normal(n) * noise_floor if noise_floor > 0 else np.zeros(n)
        if cid == target:
            samples = samples + burst_sum
        channels.append(ChannelTrace(channel_id=cid, samples=samples))

    if not ordered:
        snr_db = -math.inf if noise_floor > 0 else math.inf
    elif noise_floor == 0:
        snr_db = math.inf
    else:
        snr_db = 20.0 * math.log10(max(s.peak_amplitude for s in ordered) / noise_floor)

    recording = EmgRecording(
        id=recording_id,
        sample_rate_hz=sample_rate_hz,
        channels=tuple(channels),
        domain="raw",
    )
    return SynthSegment(
        recording=recording,
        truth=tuple((s.onset_s, s.offset_s) for s in ordered),
        snr_db=snr_db,
    )


def single_burst_segment(
    expr_duration_s: float,
    snr_db: float,
    seed: int,
    shape: str = "raised_cosine",
    sample_rate_hz: int = 1000,
    pad_s: float = 0.5,
    peak_amplitude: float = 1.0,
    recording_id: str | None = None,
    n_channels: int = 1,
) -> SynthSegment:
    """One expression-like burst padded by ``pad_s`` of floor noise each side.

    This mirrors how validation segments are cut: the annotated expression
    extended by half a second before and after.
    """
    if expr_duration_s <= 0:
        raise DomainError("expression duration must be positive")
    noise_floor = peak_amplitude * 10.0 ** (-snr_db / 20.0)
    spec = BurstSpec(
        onset_s=pad_s,
        offset_s=pad_s + expr_duration_s,
        peak_amplitude=peak_amplitude,
        shape=shape,
        seed=seed,
    )
    return generate(
        [spec],
        duration_s=expr_duration_s + 2 * pad_s,
        sample_rate_hz=sample_rate_hz,
        noise_floor=noise_floor,
        seed=seed + 1,
        recording_id=recording_id or f"synth-{seed}",
        n_channels=n_channels,
    )


def _truncated_positive(
    rng: np.random.Generator, mean: float, sd: float, count: int
) -> np.ndarray:
    """Rejection-sample a normal restricted to positive values."""
    out = np.empty(count)
    filled = 0
    while filled < count:
        draw = rng.normal(mean, sd, count - filled)
        keep = draw[draw > 0]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def planted_indicator_dataset(
    n_me: int, n_mae: int, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Labeled (duration_ms, mvc_percent) points with planted structure.

    Returns (points, labels) with label 0 for the micro-expression cluster
    and 1 for the macro-expression cluster; rows are ME first.
    """
    if n_me < 1 or n_mae < 1:
        raise DomainError("both cluster counts must be >= 1")
    rng = np.random.default_rng(seed)
    me = np.column_stack(
        [
            _truncated_positive(rng, PLANTED_ME_CENTER[0], PLANTED_ME_SPREAD[0], n_me),
            _truncated_positive(rng, PLANTED_ME_CENTER[1], PLANTED_ME_SPREAD[1], n_me),
        ]
    )
    mae = np.column_stack(
        [
            _truncated_positive(rng, PLANTED_MAE_CENTER[0], PLANTED_MAE_SPREAD[0], n_mae),
            _truncated_positive(rng, PLANTED_MAE_CENTER[1], PLANTED_MAE_SPREAD[1], n_mae),
        ]
    )
    points = np.vstack([me, mae])
    labels = np.concatenate([np.zeros(n_me, dtype=np.int64), np.ones(n_mae, dtype=np.int64)])
    return points, labels

"""Video-frame / packet-counter / sample-index alignment.

The acquisition PC increments an on-screen counter once per two received
data packets; the camera films that counter next to the face, so a frame
showing counter value c corresponds to sample ``c * packets_per_tick *
samples_per_packet``. Anchors (frame, counter) read off the video pin the
mapping; between anchors we interpolate linearly.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DomainError, FormatError, ValidationError


@dataclass(frozen=True)
class SyncConfig:
    samples_per_packet: int = 50
    packets_per_tick: int = 2
    video_fps: float = 30.0

    def __post_init__(self) -> None:
        if self.samples_per_packet <= 0:
            raise ValidationError("samples_per_packet must be positive")
        if self.packets_per_tick <= 0:
            raise ValidationError("packets_per_tick must be positive")
        if self.video_fps <= 0:
            raise ValidationError("video_fps must be positive")

    @property
    def samples_per_tick(self) -> int:
        return self.samples_per_packet * self.packets_per_tick


@dataclass(frozen=True)
class SyncAnchor:
    frame_index: int
    counter_value: int

    def __post_init__(self) -> None:
        if self.frame_index < 0 or self.counter_value < 0:
            raise ValidationError("anchor fields must be non-negative")


def counter_to_sample(counter: int, cfg: SyncConfig) -> int:
    """Sample index at which the counter reached ``counter``."""
    if counter < 0:
        raise DomainError(f"counter must be non-negative, got {counter}")
    return counter * cfg.samples_per_tick


def frame_to_sample(
    frame: int,
    anchors: Sequence[SyncAnchor],
    cfg: SyncConfig,
    sample_rate_hz: float = 1000.0,
) -> int:
    """Map a video frame index to an EMG sample index.

    With two or more anchors the frame is interpolated piecewise-linearly
    in counter space between the bracketing anchors (the nearest segment
    extrapolates outside the anchored range) and converted through
    ``counter_to_sample``. A single anchor falls back to the nominal
    ``sample_rate_hz / video_fps`` samples-per-frame slope, which is why
    the sampling rate is a parameter here.
    """
    if not anchors:
        raise DomainError("at least one sync anchor is required")
    anchors = sorted(anchors, key=lambda a: a.frame_index)
    frames = [a.frame_index for a in anchors]
    counters = [a.counter_value for a in anchors]
    for i in range(1, len(anchors)):
        if frames[i] <= frames[i - 1] or counters[i] <= counters[i - 1]:
            raise DomainError(
                "anchors must be strictly increasing in both frame_index and counter_value"
            )

    if len(anchors) == 1:
        base = counter_to_sample(counters[0], cfg)
        sample = base + (frame - frames[0]) * sample_rate_hz / cfg.video_fps
        return int(round(sample))

    # Pick the segment whose left anchor is the last one at or before the
    # frame; clamp to the outermost segments for extrapolation.
    seg = bisect_right(frames, frame) - 1
    seg = min(max(seg, 0), len(anchors) - 2)
    f0, f1 = frames[seg], frames[seg + 1]
    c0, c1 = counters[seg], counters[seg + 1]
    counter = c0 + (frame - f0) * (c1 - c0) / (f1 - f0)
    return int(round(counter * cfg.samples_per_tick))


def load_anchors(path: str | Path) -> list[SyncAnchor]:
    """Read anchors from a JSON list of {frame_index, counter_value}."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"anchor file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed anchor JSON {path}: {exc}") from exc
    if not isinstance(data, list):
        raise FormatError(f"{path}: expected a JSON array of anchors")
    try:
        return [
            SyncAnchor(frame_index=int(o["frame_index"]), counter_value=int(o["counter_value"]))
            for o in data
        ]
    except KeyError as exc:
        raise FormatError(f"{path}: anchor object missing field {exc}") from exc

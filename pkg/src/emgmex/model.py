"""Core data model and file formats.

Recordings are stored as a CSV sample matrix (header ``t_s,c1,...,c7``)
plus a JSON sidecar carrying id, sample rate, MVC values and the signal
domain. Annotations are stored as a JSON array. All types are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, FormatError, ValidationError

CHANNEL_IDS = ("c1", "c2", "c3", "c4", "c5", "c6", "c7")

# Muscle roles of the seven acquisition channels (left hemiface).
DEFAULT_MUSCLES = {
    "c1": "frontalis",
    "c2": "corrugator supercilii",
    "c3": "orbicularis oculi",
    "c4": "levator labii superioris alaeque nasi",
    "c5": "zygomaticus major",
    "c6": "orbicularis oris",
    "c7": "depressor anguli oris",
}

# Signal domains a recording can be in. ``preprocess`` moves raw -> envelope;
# the intermediate stages are reachable through its ``stage`` argument.
DOMAINS = ("raw", "dc", "bp", "rect", "envelope")

# Expressions shorter than this are micro-expressions; the boundary value
# itself is a macro-expression (strict "<").
ME_MAX_DURATION_MS = 500.0

EXPR_TYPES = ("ME", "MaE")
ANNOTATION_SOURCES = ("manual", "detector", "adjusted")


def classify_expression(duration_ms: float) -> str:
    """Classify an expression by duration: "ME" below 500 ms, else "MaE".

    Raises DomainError for non-positive durations.
    """
    if not math.isfinite(duration_ms) or duration_ms <= 0:
        raise DomainError(f"expression duration must be positive, got {duration_ms}")
    return "ME" if duration_ms < ME_MAX_DURATION_MS else "MaE"


@dataclass(frozen=True, eq=False)
class ChannelTrace:
    """One channel's voltage samples plus its muscle role."""

    channel_id: str
    samples: np.ndarray
    muscle_name: str = ""

    def __post_init__(self) -> None:
        if self.channel_id not in CHANNEL_IDS:
            raise ValidationError(f"unknown channel id {self.channel_id!r}")
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValidationError(f"channel {self.channel_id}: samples must be 1-D")
        bad = np.flatnonzero(~np.isfinite(samples))
        if bad.size:
            raise ValidationError(
                f"channel {self.channel_id}: non-finite sample at index {bad[0]}"
            )
        if not self.muscle_name:
            object.__setattr__(
                self, "muscle_name", DEFAULT_MUSCLES[self.channel_id]
            )


@dataclass(frozen=True, eq=False)
class EmgRecording:
    """Multi-channel sampled voltage series with rate and MVC metadata."""

    id: str
    sample_rate_hz: int
    channels: tuple[ChannelTrace, ...]
    mvc: Mapping[str, float] | None = None
    domain: str = "raw"

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValidationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        if not 1 <= len(channels) <= 7:
            raise ValidationError(f"expected 1-7 channels, got {len(channels)}")
        ids = [c.channel_id for c in channels]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate channel ids: {ids}")
        lengths = {c.channel_id: len(c.samples) for c in channels}
        if len(set(lengths.values())) != 1:
            raise ValidationError(f"mismatched channel lengths: {lengths}")
        if self.domain not in DOMAINS:
            raise ValidationError(f"unknown domain {self.domain!r}")
        if self.mvc is not None:
            mvc = dict(self.mvc)
            object.__setattr__(self, "mvc", mvc)
            for cid, value in mvc.items():
                if cid not in CHANNEL_IDS:
                    raise ValidationError(f"mvc entry for unknown channel {cid!r}")
                if not (math.isfinite(value) and value > 0):
                    raise ValidationError(f"mvc[{cid}] must be positive, got {value}")

    @property
    def duration_samples(self) -> int:
        return len(self.channels[0].samples)

    @property
    def duration_ms(self) -> float:
        return self.duration_samples * 1000.0 / self.sample_rate_hz

    @property
    def channel_ids(self) -> tuple[str, ...]:
        return tuple(c.channel_id for c in self.channels)

    def channel(self, channel_id: str) -> ChannelTrace:
        for trace in self.channels:
            if trace.channel_id == channel_id:
                return trace
        raise DomainError(f"recording {self.id!r} has no channel {channel_id!r}")

    def with_samples(self, samples_by_channel: Mapping[str, np.ndarray], domain: str) -> "EmgRecording":
        """Copy of this recording with replaced samples and domain flag."""
        channels = tuple(
            replace(trace, samples=np.asarray(samples_by_channel[trace.channel_id]))
            for trace in self.channels
        )
        return replace(self, channels=channels, domain=domain)


@dataclass(frozen=True)
class ExpressionAnnotation:
    """Coded expression interval with AU/emotion labels.

    ``expr_type`` must agree with the 500 ms duration rule unless
    ``type_override`` is set, which records a deliberate deviation.
    """

    id: str
    recording_id: str
    channel_id: str
    onset_ms: float
    apex_ms: float
    offset_ms: float
    aus: tuple[str, ...] = ()
    emotion: str = ""
    expr_type: str = ""
    source: str = "manual"
    type_override: bool = False

    def __post_init__(self) -> None:
        if self.channel_id not in CHANNEL_IDS:
            raise ValidationError(f"annotation {self.id}: unknown channel {self.channel_id!r}")
        for name in ("onset_ms", "apex_ms", "offset_ms"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"annotation {self.id}: {name} must be non-negative")
        if not (self.onset_ms <= self.apex_ms <= self.offset_ms):
            raise ValidationError(
                f"annotation {self.id}: require onset <= apex <= offset, got "
                f"{self.onset_ms}/{self.apex_ms}/{self.offset_ms}"
            )
        if self.offset_ms <= self.onset_ms:
            raise ValidationError(f"annotation {self.id}: offset must exceed onset")
        object.__setattr__(self, "aus", tuple(self.aus))
        if self.source not in ANNOTATION_SOURCES:
            raise ValidationError(f"annotation {self.id}: unknown source {self.source!r}")
        implied = classify_expression(self.duration_ms)
        if not self.expr_type:
            object.__setattr__(self, "expr_type", implied)
        elif self.expr_type not in EXPR_TYPES:
            raise ValidationError(f"annotation {self.id}: unknown expr_type {self.expr_type!r}")
        elif self.expr_type != implied and not self.type_override:
            raise ValidationError(
                f"annotation {self.id}: expr_type {self.expr_type} contradicts the "
                f"500 ms rule for duration {self.duration_ms:.1f} ms "
                "(set type_override to keep it)"
            )

    @property
    def duration_ms(self) -> float:
        return self.offset_ms - self.onset_ms

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "recording_id": self.recording_id,
            "channel_id": self.channel_id,
            "onset_ms": self.onset_ms,
            "apex_ms": self.apex_ms,
            "offset_ms": self.offset_ms,
            "aus": list(self.aus),
            "emotion": self.emotion,
            "expr_type": self.expr_type,
            "source": self.source,
            "type_override": self.type_override,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExpressionAnnotation":
        try:
            return cls(
                id=str(data["id"]),
                recording_id=str(data["recording_id"]),
                channel_id=str(data["channel_id"]),
                onset_ms=float(data["onset_ms"]),
                apex_ms=float(data["apex_ms"]),
                offset_ms=float(data["offset_ms"]),
                aus=tuple(str(a) for a in data.get("aus", ())),
                emotion=str(data.get("emotion", "")),
                expr_type=str(data.get("expr_type", "")),
                source=str(data.get("source", "manual")),
                type_override=bool(data.get("type_override", False)),
            )
        except KeyError as exc:
            raise FormatError(f"annotation object missing field {exc}") from exc


@dataclass(frozen=True)
class DetectionInterval:
    """Spotted expression interval in sample indices."""

    onset_sample: int
    offset_sample: int
    peak_run: tuple[int, int]
    channel_id: str = "c1"

    def __post_init__(self) -> None:
        if self.onset_sample < 0 or self.offset_sample < 0:
            raise ValidationError("detection interval bounds must be non-negative")
        if self.onset_sample >= self.offset_sample:
            raise ValidationError(
                f"detection onset {self.onset_sample} must precede offset {self.offset_sample}"
            )
        if self.channel_id not in CHANNEL_IDS:
            raise ValidationError(f"unknown channel id {self.channel_id!r}")
        object.__setattr__(self, "peak_run", tuple(self.peak_run))

    def to_dict(self) -> dict:
        return {
            "onset_sample": self.onset_sample,
            "offset_sample": self.offset_sample,
            "peak_run": list(self.peak_run),
            "channel_id": self.channel_id,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DetectionInterval":
        return cls(
            onset_sample=int(data["onset_sample"]),
            offset_sample=int(data["offset_sample"]),
            peak_run=tuple(data.get("peak_run", (0, 0))),
            channel_id=str(data.get("channel_id", "c1")),
        )


@dataclass(frozen=True)
class SpotParams:
    """The six interval-detection parameters.

    Defaults are the best combination found by the original 900-run
    parameter search: window 60 samples, step 30, threshold scale 1,
    minimum run 5 windows, trough search 2 steps back / 6 forward.
    """

    window_len: int = 60
    step: int = 30
    threshold_scale: float = 1.0
    min_run: int = 5
    back_windows: int = 2
    fwd_windows: int = 6

    def __post_init__(self) -> None:
        for name in ("window_len", "step", "min_run", "back_windows", "fwd_windows"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"SpotParams.{name} must be positive")
        if self.threshold_scale <= 0:
            raise ValidationError("SpotParams.threshold_scale must be positive")
        if self.step > self.window_len:
            raise ValidationError(
                f"step {self.step} must not exceed window_len {self.window_len}"
            )

    def to_dict(self) -> dict:
        return {
            "window_len": self.window_len,
            "step": self.step,
            "threshold_scale": self.threshold_scale,
            "min_run": self.min_run,
            "back_windows": self.back_windows,
            "fwd_windows": self.fwd_windows,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SpotParams":
        return cls(
            window_len=int(data.get("window_len", 60)),
            step=int(data.get("step", 30)),
            threshold_scale=float(data.get("threshold_scale", 1.0)),
            min_run=int(data.get("min_run", 5)),
            back_windows=int(data.get("back_windows", 2)),
            fwd_windows=int(data.get("fwd_windows", 6)),
        )


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def save_recording(recording: EmgRecording, csv_path: str | Path) -> None:
    """Write the CSV sample matrix and its JSON sidecar.

    Values are written with full float precision so a load/save cycle
    reproduces samples exactly.
    """
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    fs = recording.sample_rate_hz
    ids = recording.channel_ids
    columns = [trace.samples for trace in recording.channels]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", *ids])
        for i in range(recording.duration_samples):
            writer.writerow([repr(i / fs), *(repr(float(col[i])) for col in columns)])
    sidecar = {
        "id": recording.id,
        "sample_rate_hz": recording.sample_rate_hz,
        "domain": recording.domain,
        "muscles": {c.channel_id: c.muscle_name for c in recording.channels},
    }
    if recording.mvc is not None:
        sidecar["mvc"] = dict(recording.mvc)
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_recording(csv_path: str | Path) -> EmgRecording:
    """Load a recording from its CSV matrix plus JSON sidecar.

    Raises FormatError for malformed files and ValidationError for
    non-finite samples or mismatched channel lengths (reported with the
    offending row and column).
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FormatError(f"recording file not found: {csv_path}")
    sidecar_path = _sidecar_path(csv_path)
    if not sidecar_path.exists():
        raise FormatError(f"missing sidecar JSON for {csv_path} (expected {sidecar_path})")
    try:
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed sidecar JSON {sidecar_path}: {exc}") from exc

    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{csv_path}: empty file") from None
        if not header or header[0] != "t_s":
            raise FormatError(f"{csv_path}: header must start with 't_s', got {header[:1]}")
        channel_ids = header[1:]
        if not channel_ids:
            raise FormatError(f"{csv_path}: no channel columns in header")
        for cid in channel_ids:
            if cid not in CHANNEL_IDS:
                raise FormatError(f"{csv_path}: unknown channel column {cid!r}")

        columns: list[list[float]] = [[] for _ in channel_ids]
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(channel_ids) + 1 or any(cell.strip() == "" for cell in row[1:]):
                short = [
                    channel_ids[j]
                    for j in range(len(channel_ids))
                    if j + 1 >= len(row) or row[j + 1].strip() == ""
                ]
                raise ValidationError(
                    f"{csv_path}: row {row_no}: mismatched channel lengths "
                    f"(column {short[0] if short else '?'} has no value)"
                )
            for j, cell in enumerate(row[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise FormatError(
                        f"{csv_path}: row {row_no}, column {channel_ids[j]}: "
                        f"not a number: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ValidationError(
                        f"{csv_path}: row {row_no}, column {channel_ids[j]}: "
                        f"non-finite sample {cell!r}"
                    )
                columns[j].append(value)

    if not columns[0]:
        raise FormatError(f"{csv_path}: no sample rows")

    try:
        rec_id = str(sidecar["id"])
        fs = int(sidecar["sample_rate_hz"])
    except KeyError as exc:
        raise FormatError(f"{sidecar_path}: missing field {exc}") from exc
    muscles = sidecar.get("muscles", {})
    channels = tuple(
        ChannelTrace(
            channel_id=cid,
            samples=np.asarray(col, dtype=np.float64),
            muscle_name=str(muscles.get(cid, "")),
        )
        for cid, col in zip(channel_ids, columns)
    )
    mvc = sidecar.get("mvc")
    return EmgRecording(
        id=rec_id,
        sample_rate_hz=fs,
        channels=channels,
        mvc={str(k): float(v) for k, v in mvc.items()} if mvc else None,
        domain=str(sidecar.get("domain", "raw")),
    )


def save_annotations(annotations: Iterable[ExpressionAnnotation], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump([a.to_dict() for a in annotations], fh, indent=2)
        fh.write("\n")


def load_annotations(path: str | Path) -> list[ExpressionAnnotation]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"annotation file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed annotation JSON {path}: {exc}") from exc
    if not isinstance(data, list):
        raise FormatError(f"{path}: expected a JSON array of annotations")
    return [ExpressionAnnotation.from_dict(obj) for obj in data]

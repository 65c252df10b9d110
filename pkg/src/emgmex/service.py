"""HTTP service backing the annotation workbench.

Serves recording metadata, decimated envelope traces, detector candidates
and persisted annotations. Reads are side-effect free; every mutation
must quote the recording's current revision and bumps it on success, so
concurrent editors get a 409 instead of silently overwriting each other.
Annotations persist as the standard JSON array next to the recording
(``<stem>.annotations.json``) via temp-file-plus-rename writes; a small
session file keeps the revision counter and rejected candidate ids.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import dsp
from .errors import EmgMexError
from .model import (
    EmgRecording,
    ExpressionAnnotation,
    SpotParams,
    classify_expression,
    load_recording,
)
from .spotting import spot


def _atomic_write_json(path: Path, payload) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def decimate_min_max(
    t_ms: np.ndarray, values: np.ndarray, buckets: int
) -> tuple[list[float], list[float]]:
    """Min/max-pair pooling per bucket, in time order.

    Emits at most two points per bucket so rendering at pixel resolution
    never loses a peak or a trough.
    """
    n = values.size
    if buckets <= 0 or n <= 2 * buckets:
        return t_ms.tolist(), values.tolist()
    edges = np.linspace(0, n, buckets + 1).astype(int)
    out_t: list[float] = []
    out_v: list[float] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        chunk = values[lo:hi]
        i_min = lo + int(np.argmin(chunk))
        i_max = lo + int(np.argmax(chunk))
        first, second = sorted((i_min, i_max))
        out_t.append(float(t_ms[first]))
        out_v.append(float(values[first]))
        if second != first:
            out_t.append(float(t_ms[second]))
            out_v.append(float(values[second]))
    return out_t, out_v


class _RecordingState:
    def __init__(self, csv_path: Path):
        self.csv_path = csv_path
        self.lock = threading.Lock()
        self._raw: EmgRecording | None = None
        self._envelope: EmgRecording | None = None

    @property
    def annotations_path(self) -> Path:
        return self.csv_path.with_name(self.csv_path.stem + ".annotations.json")

    @property
    def session_path(self) -> Path:
        return self.csv_path.with_name(self.csv_path.stem + ".session.json")

    def recording(self) -> EmgRecording:
        if self._raw is None:
            self._raw = load_recording(self.csv_path)
        return self._raw

    def envelope(self) -> EmgRecording:
        if self._envelope is None:
            recording = self.recording()
            self._envelope = (
                recording if recording.domain == "envelope" else dsp.preprocess(recording)
            )
        return self._envelope

    def session(self) -> dict:
        if self.session_path.exists():
            with open(self.session_path) as fh:
                data = json.load(fh)
            return {"revision": int(data.get("revision", 0)),
                    "rejected": list(data.get("rejected", []))}
        return {"revision": 0, "rejected": []}

    def annotations(self) -> list[dict]:
        if self.annotations_path.exists():
            with open(self.annotations_path) as fh:
                return json.load(fh)
        return []

    def persist(self, annotations: list[dict], session: dict) -> None:
        _atomic_write_json(self.annotations_path, annotations)
        _atomic_write_json(self.session_path, session)


class AnnotationPayload(BaseModel):
    id: str
    recording_id: str
    channel_id: str
    onset_ms: float
    apex_ms: float
    offset_ms: float
    aus: list[str] = Field(default_factory=list)
    emotion: str = ""
    expr_type: str = ""
    source: str = "manual"
    type_override: bool = False


class PutAnnotationsBody(BaseModel):
    revision: int
    annotations: list[AnnotationPayload]


class AcceptBody(BaseModel):
    revision: int
    onset_ms: float
    offset_ms: float
    channel_id: str
    apex_ms: float | None = None
    aus: list[str] = Field(default_factory=list)
    emotion: str = ""
    source: str = "detector"


class RejectBody(BaseModel):
    revision: int


def _stale(revision: int) -> JSONResponse:
    return JSONResponse(
        status_code=409,
        content={"error": "stale revision", "revision": revision},
    )


def _invalid(message: str) -> JSONResponse:
    return JSONResponse(status_code=422, content={"error": message})


def _not_found(recording_id: str) -> JSONResponse:
    return JSONResponse(
        status_code=404, content={"error": f"unknown recording {recording_id!r}"}
    )


def create_app(data_dir: str | Path) -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="emgmex annotation service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    states: dict[str, _RecordingState] = {}

    def rescan() -> None:
        for csv_path in sorted(data_dir.glob("*.csv")):
            sidecar = csv_path.with_suffix(".json")
            if not sidecar.exists():
                continue
            try:
                with open(sidecar) as fh:
                    meta = json.load(fh)
                rec_id = str(meta["id"])
            except (json.JSONDecodeError, KeyError):
                continue
            if rec_id not in states:
                states[rec_id] = _RecordingState(csv_path)

    rescan()

    def state_of(recording_id: str) -> _RecordingState | None:
        if recording_id not in states:
            rescan()
        return states.get(recording_id)

    @app.get("/recordings")
    def list_recordings():
        rescan()
        out = []
        for rec_id, state in sorted(states.items()):
            recording = state.recording()
            out.append(
                {
                    "id": rec_id,
                    "sample_rate_hz": recording.sample_rate_hz,
                    "duration_samples": recording.duration_samples,
                    "duration_ms": recording.duration_ms,
                    "channels": list(recording.channel_ids),
                    "domain": recording.domain,
                }
            )
        return out

    @app.get("/recordings/{recording_id}/meta")
    def meta(recording_id: str):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        recording = state.recording()
        return {
            "id": recording.id,
            "sample_rate_hz": recording.sample_rate_hz,
            "duration_samples": recording.duration_samples,
            "duration_ms": recording.duration_ms,
            "domain": recording.domain,
            "channels": [
                {"channel_id": c.channel_id, "muscle_name": c.muscle_name}
                for c in recording.channels
            ],
            "mvc": dict(recording.mvc) if recording.mvc else None,
            "revision": state.session()["revision"],
        }

    @app.get("/recordings/{recording_id}/trace")
    def trace(
        recording_id: str,
        channel: str,
        from_ms: float = 0.0,
        to_ms: float | None = None,
        decimate: int = 0,
    ):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        recording = state.envelope()
        try:
            samples = recording.channel(channel).samples
        except EmgMexError as exc:
            return _invalid(str(exc))
        fs = recording.sample_rate_hz
        end_ms = recording.duration_ms if to_ms is None else to_ms
        lo = max(0, int(round(from_ms * fs / 1000.0)))
        hi = min(samples.size, int(round(end_ms * fs / 1000.0)))
        if hi <= lo:
            return _invalid(f"empty trace window [{from_ms}, {end_ms}] ms")
        window = samples[lo:hi]
        t_ms = np.arange(lo, hi) * 1000.0 / fs
        t_out, v_out = decimate_min_max(t_ms, window, decimate)
        return {
            "channel": channel,
            "from_ms": from_ms,
            "to_ms": end_ms,
            "decimate": decimate,
            "n_points": len(t_out),
            "t_ms": t_out,
            "v": v_out,
        }

    @app.get("/recordings/{recording_id}/candidates")
    def candidates(
        recording_id: str,
        wl: int = 60,
        sl: int = 30,
        k: float = 1.0,
        sn: int = 5,
        wf: int = 2,
        wb: int = 6,
        mode: str = "tightest",
    ):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        try:
            params = SpotParams(
                window_len=wl, step=sl, threshold_scale=k,
                min_run=sn, back_windows=wf, fwd_windows=wb,
            )
            result = spot(state.envelope(), params, mode)
        except EmgMexError as exc:
            return _invalid(str(exc))
        fs = state.recording().sample_rate_hz
        rejected = set(state.session()["rejected"])
        out = []
        for index, interval in enumerate(result.intervals):
            onset_ms = interval.onset_sample * 1000.0 / fs
            offset_ms = interval.offset_sample * 1000.0 / fs
            candidate_id = f"det-{index:03d}"
            out.append(
                {
                    "id": candidate_id,
                    "channel_id": interval.channel_id,
                    "onset_sample": interval.onset_sample,
                    "offset_sample": interval.offset_sample,
                    "onset_ms": onset_ms,
                    "offset_ms": offset_ms,
                    "duration_ms": offset_ms - onset_ms,
                    "expr_type": classify_expression(offset_ms - onset_ms),
                    "peak_run": list(interval.peak_run),
                    "rejected": candidate_id in rejected,
                }
            )
        return {
            "params": params.to_dict(),
            "mode": mode,
            "channel": result.channel_id,
            "threshold": result.threshold,
            "degenerate": result.degenerate,
            "candidates": out,
        }

    @app.get("/recordings/{recording_id}/annotations")
    def get_annotations(recording_id: str):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        session = state.session()
        return {
            "revision": session["revision"],
            "rejected": session["rejected"],
            "annotations": state.annotations(),
        }

    @app.put("/recordings/{recording_id}/annotations")
    def put_annotations(recording_id: str, body: PutAnnotationsBody):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        with state.lock:
            session = state.session()
            if body.revision != session["revision"]:
                return _stale(session["revision"])
            validated = []
            for payload in body.annotations:
                try:
                    validated.append(
                        ExpressionAnnotation.from_dict(payload.model_dump()).to_dict()
                    )
                except EmgMexError as exc:
                    return _invalid(str(exc))
            session["revision"] += 1
            state.persist(validated, session)
            return {"revision": session["revision"], "count": len(validated)}

    @app.post("/recordings/{recording_id}/annotations/{candidate_id}/accept")
    def accept(recording_id: str, candidate_id: str, body: AcceptBody):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        with state.lock:
            session = state.session()
            if body.revision != session["revision"]:
                return _stale(session["revision"])
            duration_ms = body.offset_ms - body.onset_ms
            if duration_ms <= 0:
                return _invalid(
                    f"onset {body.onset_ms} ms must precede offset {body.offset_ms} ms"
                )
            apex = body.apex_ms if body.apex_ms is not None else (
                body.onset_ms + duration_ms / 2.0
            )
            try:
                annotation = ExpressionAnnotation(
                    id=candidate_id,
                    recording_id=recording_id,
                    channel_id=body.channel_id,
                    onset_ms=body.onset_ms,
                    apex_ms=apex,
                    offset_ms=body.offset_ms,
                    aus=tuple(body.aus),
                    emotion=body.emotion,
                    # the 500 ms rule is applied here, server-side
                    expr_type=classify_expression(duration_ms),
                    source=body.source if body.source in ("detector", "adjusted") else "detector",
                )
            except EmgMexError as exc:
                return _invalid(str(exc))
            annotations = state.annotations()
            if any(a["id"] == candidate_id for a in annotations):
                return _invalid(f"candidate {candidate_id!r} is already accepted")
            annotations.append(annotation.to_dict())
            session["rejected"] = [r for r in session["rejected"] if r != candidate_id]
            session["revision"] += 1
            state.persist(annotations, session)
            return {"revision": session["revision"], "annotation": annotation.to_dict()}

    @app.post("/recordings/{recording_id}/annotations/{candidate_id}/reject")
    def reject(recording_id: str, candidate_id: str, body: RejectBody):
        state = state_of(recording_id)
        if state is None:
            return _not_found(recording_id)
        with state.lock:
            session = state.session()
            if body.revision != session["revision"]:
                return _stale(session["revision"])
            if candidate_id not in session["rejected"]:
                session["rejected"].append(candidate_id)
            session["revision"] += 1
            state.persist(state.annotations(), session)
            return {"revision": session["revision"]}

    return app

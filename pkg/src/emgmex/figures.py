"""Matplotlib renderings written next to report files.

All functions write PNG files and return the written path. matplotlib is
imported lazily with the Agg backend so headless runs and fast CLI paths
that skip figures never pay for it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

PNG_METADATA = {"Software": "emgmex"}


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    _plt().close(fig)
    return path


def save_envelope_plot(
    recording,
    path: str | Path,
    detections: Sequence | None = None,
    truths: Sequence[tuple[float, float]] | None = None,
) -> Path:
    """Envelope traces with detected (and optionally true) intervals shaded."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(10, 4))
    fs = recording.sample_rate_hz
    for trace in recording.channels:
        t = np.arange(trace.samples.size) / fs
        ax.plot(t, trace.samples, linewidth=0.8, label=trace.channel_id)
    for det in detections or ():
        ax.axvspan(det.onset_sample / fs, det.offset_sample / fs, color="tab:orange", alpha=0.25)
    for onset_s, offset_s in truths or ():
        ax.axvspan(onset_s, offset_s, color="tab:green", alpha=0.15)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("envelope (V)")
    ax.set_title(f"{recording.id} ({recording.domain})")
    if len(recording.channels) > 1:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _save(fig, Path(path))


def save_eval_figures(report, out_base: str | Path) -> list[Path]:
    """IoU and moment-error histograms for an evaluation report.

    Writes ``<base>_iou_hist.png`` and ``<base>_moment_errors.png`` next to
    the report file the base is derived from.
    """
    plt = _plt()
    out_base = Path(out_base)
    written = []

    ious = [row.iou for row in report.per_sample if row.iou is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ious, bins=np.linspace(0, 1, 21), color="tab:blue", edgecolor="white")
    ax.axvline(0.5, color="tab:red", linestyle="--", linewidth=1)
    ax.set_xlabel("IoU")
    ax.set_ylabel("segments")
    ax.set_title(f"interval overlap (mean {report.mean_iou:.3f}, n_nan {report.n_nan})")
    fig.tight_layout()
    written.append(_save(fig, out_base.with_name(out_base.name + "_iou_hist.png")))

    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for ax, name, stats, values in (
        (axes[0], "onset", report.onset_err,
         [r.d_onset_s for r in report.per_sample if r.d_onset_s is not None]),
        (axes[1], "offset", report.offset_err,
         [r.d_offset_s for r in report.per_sample if r.d_offset_s is not None]),
    ):
        ax.hist(values, bins=20, color="tab:purple", edgecolor="white")
        ax.set_xlabel(f"|Δ{name}| (s)")
        ax.set_title(f"{name}: mean {stats.mean_s:.3f}s, RMSE {stats.rmse_s:.3f}s")
    axes[0].set_ylabel("segments")
    fig.tight_layout()
    written.append(_save(fig, out_base.with_name(out_base.name + "_moment_errors.png")))
    return written


def save_indicator_figures(rows: Sequence[Mapping], out_base: str | Path) -> list[Path]:
    """Duration and intensity distributions split by expression type."""
    plt = _plt()
    out_base = Path(out_base)
    written = []
    for field, unit, suffix in (
        ("duration_ms", "duration (ms)", "_duration_hist.png"),
        ("mvc_percent", "intensity (MVC%)", "_intensity_hist.png"),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        for expr_type, color in (("ME", "tab:blue"), ("MaE", "tab:orange")):
            values = [float(r[field]) for r in rows if r.get("type") == expr_type]
            if values:
                ax.hist(values, bins=20, alpha=0.6, label=expr_type, color=color)
        ax.set_xlabel(unit)
        ax.set_ylabel("expressions")
        ax.legend()
        fig.tight_layout()
        written.append(_save(fig, out_base.with_name(out_base.name + suffix)))
    return written


def save_cluster_scatter(
    points: np.ndarray,
    assignments: np.ndarray,
    centroids: np.ndarray,
    path: str | Path,
) -> Path:
    """Two-cluster scatter of (duration, intensity) with centroid crosses."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 5))
    points = np.asarray(points)
    assignments = np.asarray(assignments)
    for cluster in np.unique(assignments):
        mask = assignments == cluster
        ax.scatter(points[mask, 0], points[mask, 1], s=12, alpha=0.6, label=f"cluster {cluster}")
    centroids = np.asarray(centroids)
    ax.scatter(centroids[:, 0], centroids[:, 1], marker="x", s=120, c="black", label="centroids")
    ax.set_xlabel("duration (ms)")
    ax.set_ylabel("intensity (MVC%)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, Path(path))

import type { Draft } from "./session.js";
import type { Annotation, Candidate } from "./types.js";

/** Pixel/time mapping and rendering for the envelope timeline.
 *
 * The view window is always clamped inside the recording, and the trace is
 * drawn from the service's min/max-pair decimation, so peaks stay visible
 * at any zoom level. Rendering is split from the mapping so the mapping can
 * be tested without a canvas.
 */
export class TimelineView {
  private fromMs = 0;
  private toMs: number;

  constructor(
    public durationMs: number,
    public widthPx: number,
    initialFromMs = 0,
    initialToMs?: number,
  ) {
    this.toMs = initialToMs ?? durationMs;
    this.setView(initialFromMs, this.toMs);
  }

  get viewFromMs(): number {
    return this.fromMs;
  }

  get viewToMs(): number {
    return this.toMs;
  }

  /** Clamp the requested window into [0, duration], keeping it non-empty. */
  setView(fromMs: number, toMs: number): void {
    const span = Math.max(toMs - fromMs, 1);
    let lo = Math.max(0, fromMs);
    let hi = lo + span;
    if (hi > this.durationMs) {
      hi = this.durationMs;
      lo = Math.max(0, hi - span);
    }
    this.fromMs = lo;
    this.toMs = hi;
  }

  zoom(factor: number, centerMs: number): void {
    const span = (this.toMs - this.fromMs) * factor;
    const left = (centerMs - this.fromMs) / (this.toMs - this.fromMs);
    this.setView(centerMs - span * left, centerMs + span * (1 - left));
  }

  pan(deltaMs: number): void {
    this.setView(this.fromMs + deltaMs, this.toMs + deltaMs);
  }

  msToX(ms: number): number {
    return ((ms - this.fromMs) / (this.toMs - this.fromMs)) * this.widthPx;
  }

  xToMs(x: number): number {
    return this.fromMs + (x / this.widthPx) * (this.toMs - this.fromMs);
  }

  /** Which draft handle (if any) sits within tolerance of pixel x. */
  hitTestHandle(
    x: number,
    draft: { onsetMs: number; offsetMs: number } | null,
    tolerancePx = 6,
  ): "onset" | "offset" | null {
    if (!draft) return null;
    const onsetX = this.msToX(draft.onsetMs);
    const offsetX = this.msToX(draft.offsetMs);
    const dOnset = Math.abs(x - onsetX);
    const dOffset = Math.abs(x - offsetX);
    if (dOnset <= tolerancePx && dOnset <= dOffset) return "onset";
    if (dOffset <= tolerancePx) return "offset";
    return null;
  }
}

export interface RenderData {
  tMs: ArrayLike<number>;
  values: ArrayLike<number>;
  candidates: Candidate[];
  annotations: Annotation[];
  draft: Draft | null;
  rejectedIds: string[];
}

const COLORS = {
  trace: "#2563eb",
  candidate: "rgba(245, 158, 11, 0.25)",
  candidateEdge: "#b45309",
  rejected: "rgba(148, 163, 184, 0.25)",
  accepted: "rgba(22, 163, 74, 0.22)",
  acceptedEdge: "#15803d",
  handle: "#dc2626",
  axis: "#475569",
};

export function renderTimeline(
  ctx: CanvasRenderingContext2D,
  view: TimelineView,
  heightPx: number,
  data: RenderData,
): void {
  const width = view.widthPx;
  ctx.clearRect(0, 0, width, heightPx);

  let peak = 0;
  for (let i = 0; i < data.values.length; i++) {
    peak = Math.max(peak, data.values[i]);
  }
  const yOf = (v: number) => heightPx - 14 - (v / (peak || 1)) * (heightPx - 28);

  const spans: { fromMs: number; toMs: number; fill: string; edge?: string }[] = [];
  for (const candidate of data.candidates) {
    spans.push({
      fromMs: candidate.onset_ms,
      toMs: candidate.offset_ms,
      fill: data.rejectedIds.includes(candidate.id) ? COLORS.rejected : COLORS.candidate,
      edge: COLORS.candidateEdge,
    });
  }
  for (const annotation of data.annotations) {
    spans.push({
      fromMs: annotation.onset_ms,
      toMs: annotation.offset_ms,
      fill: COLORS.accepted,
      edge: COLORS.acceptedEdge,
    });
  }
  for (const span of spans) {
    const x0 = view.msToX(span.fromMs);
    const x1 = view.msToX(span.toMs);
    ctx.fillStyle = span.fill;
    ctx.fillRect(x0, 0, x1 - x0, heightPx - 14);
    if (span.edge) {
      ctx.strokeStyle = span.edge;
      ctx.strokeRect(x0, 0, x1 - x0, heightPx - 14);
    }
  }

  ctx.strokeStyle = COLORS.trace;
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  let started = false;
  for (let i = 0; i < data.tMs.length; i++) {
    const t = data.tMs[i];
    if (t < view.viewFromMs || t > view.viewToMs) continue;
    const x = view.msToX(t);
    const y = yOf(data.values[i]);
    if (!started) {
      ctx.moveTo(x, y);
      started = true;
    } else {
      ctx.lineTo(x, y);
    }
  }
  ctx.stroke();

  if (data.draft) {
    ctx.strokeStyle = COLORS.handle;
    ctx.lineWidth = 2;
    for (const ms of [data.draft.onsetMs, data.draft.offsetMs]) {
      const x = view.msToX(ms);
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, heightPx - 14);
      ctx.stroke();
      ctx.fillStyle = COLORS.handle;
      ctx.fillRect(x - 4, heightPx - 22, 8, 8);
    }
  }

  ctx.strokeStyle = COLORS.axis;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, heightPx - 14);
  ctx.lineTo(width, heightPx - 14);
  ctx.stroke();
  ctx.fillStyle = COLORS.axis;
  ctx.font = "10px sans-serif";
  const ticks = 8;
  for (let i = 0; i <= ticks; i++) {
    const ms = view.viewFromMs + ((view.viewToMs - view.viewFromMs) * i) / ticks;
    const x = view.msToX(ms);
    ctx.fillText(`${Math.round(ms)}`, Math.min(x + 2, width - 34), heightPx - 3);
  }
}

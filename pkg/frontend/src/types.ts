/** Wire types mirroring the annotation service JSON. */

export type ExprType = "ME" | "MaE";
export type AnnotationSource = "manual" | "detector" | "adjusted";

/** Stored annotation, field-for-field the toolkit's interchange format. */
export interface Annotation {
  id: string;
  recording_id: string;
  channel_id: string;
  onset_ms: number;
  apex_ms: number;
  offset_ms: number;
  aus: string[];
  emotion: string;
  expr_type: ExprType;
  source: AnnotationSource;
  type_override: boolean;
}

export interface RecordingSummary {
  id: string;
  sample_rate_hz: number;
  duration_samples: number;
  duration_ms: number;
  channels: string[];
  domain: string;
}

export interface RecordingMeta {
  id: string;
  sample_rate_hz: number;
  duration_samples: number;
  duration_ms: number;
  domain: string;
  channels: { channel_id: string; muscle_name: string }[];
  mvc: Record<string, number> | null;
  revision: number;
}

export interface TracePayload {
  channel: string;
  from_ms: number;
  to_ms: number;
  decimate: number;
  n_points: number;
  t_ms: number[];
  v: number[];
}

export interface Candidate {
  id: string;
  channel_id: string;
  onset_sample: number;
  offset_sample: number;
  onset_ms: number;
  offset_ms: number;
  duration_ms: number;
  expr_type: ExprType;
  peak_run: [number, number];
  rejected: boolean;
}

export interface CandidatesPayload {
  params: Record<string, number>;
  mode: string;
  channel: string;
  threshold: number;
  degenerate: boolean;
  candidates: Candidate[];
}

export interface AnnotationsPayload {
  revision: number;
  rejected: string[];
  annotations: Annotation[];
}

export interface SpotParamsQuery {
  wl?: number;
  sl?: number;
  k?: number;
  sn?: number;
  wf?: number;
  wb?: number;
  mode?: "all" | "tightest";
}

export interface AcceptRequest {
  revision: number;
  onset_ms: number;
  offset_ms: number;
  channel_id: string;
  apex_ms?: number;
  aus?: string[];
  emotion?: string;
  source?: AnnotationSource;
}

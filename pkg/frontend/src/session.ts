import { ConflictError, OfflineError, type WorkbenchApi } from "./api.js";
import { classifyExpression, MIN_DURATION_MS } from "./rules.js";
import { snapToTrough } from "./snap.js";
import type {
  Annotation,
  AnnotationSource,
  Candidate,
  ExprType,
  RecordingMeta,
  SpotParamsQuery,
  TracePayload,
} from "./types.js";

export interface Selection {
  kind: "candidate" | "annotation";
  id: string;
}

export interface Draft {
  onsetMs: number;
  offsetMs: number;
  aus: string[];
  emotion: string;
}

/** Client-side state for the review loop of one recording.
 *
 * Pure of DOM concerns so it can be driven headlessly: the canvas and the
 * key bindings sit on top of it. Bounds editing keeps onset strictly before
 * offset (the handles constrain each other), optionally snapping to envelope
 * troughs. Every write quotes the current revision; a 409 parks the session
 * in a conflict state until reload() is called, and an unreachable service
 * flips it read-only.
 */
export class ReviewSession {
  meta: RecordingMeta | null = null;
  trace: TracePayload | null = null;
  candidates: Candidate[] = [];
  annotations: Annotation[] = [];
  revision = 0;
  rejectedIds: string[] = [];

  selection: Selection | null = null;
  draft: Draft | null = null;
  snapEnabled = true;
  snapWindowMs = 50;

  offline = false;
  conflictRevision: number | null = null;

  constructor(
    private readonly api: WorkbenchApi,
    readonly recordingId: string,
    public channelId: string | null = null,
    private readonly spotParams: SpotParamsQuery = {},
  ) {}

  get readOnly(): boolean {
    return this.offline || this.conflictRevision !== null;
  }

  async load(decimate = 1600): Promise<void> {
    const meta = await this.guard(() => this.api.meta(this.recordingId));
    const detected = await this.guard(() =>
      this.api.candidates(this.recordingId, this.spotParams),
    );
    this.meta = meta;
    this.candidates = detected.candidates;
    this.channelId = this.channelId ?? detected.channel;
    this.trace = await this.guard(() =>
      this.api.trace(this.recordingId, this.channelId!, { decimate }),
    );
    const stored = await this.guard(() => this.api.annotations(this.recordingId));
    this.annotations = stored.annotations;
    this.revision = stored.revision;
    this.rejectedIds = stored.rejected;
    if (this.selection === null && this.pendingCandidates().length > 0) {
      this.select("candidate", this.pendingCandidates()[0].id);
    }
  }

  /** Candidates still awaiting a decision (not rejected, not accepted). */
  pendingCandidates(): Candidate[] {
    const acceptedIds = new Set(this.annotations.map((a) => a.id));
    return this.candidates.filter(
      (c) => !this.rejectedIds.includes(c.id) && !acceptedIds.has(c.id),
    );
  }

  select(kind: Selection["kind"], id: string): void {
    if (kind === "candidate") {
      const candidate = this.candidates.find((c) => c.id === id);
      if (!candidate) throw new RangeError(`unknown candidate ${id}`);
      this.selection = { kind, id };
      this.draft = {
        onsetMs: candidate.onset_ms,
        offsetMs: candidate.offset_ms,
        aus: [],
        emotion: "",
      };
    } else {
      const annotation = this.annotations.find((a) => a.id === id);
      if (!annotation) throw new RangeError(`unknown annotation ${id}`);
      this.selection = { kind, id };
      this.draft = {
        onsetMs: annotation.onset_ms,
        offsetMs: annotation.offset_ms,
        aus: [...annotation.aus],
        emotion: annotation.emotion,
      };
    }
  }

  /** Keyboard navigation across pending candidates, wrapping around. */
  next(step = 1): void {
    const pending = this.pendingCandidates();
    if (pending.length === 0) return;
    let index = pending.findIndex(
      (c) => this.selection?.kind === "candidate" && c.id === this.selection.id,
    );
    index = index < 0 ? 0 : (index + step + pending.length) % pending.length;
    this.select("candidate", pending[index].id);
  }

  prev(): void {
    this.next(-1);
  }

  private snap(ms: number): number {
    if (!this.snapEnabled || !this.trace) return ms;
    return snapToTrough(this.trace.t_ms, this.trace.v, ms, this.snapWindowMs);
  }

  private clampToRecording(ms: number): number {
    const duration = this.meta?.duration_ms ?? Number.POSITIVE_INFINITY;
    return Math.min(Math.max(ms, 0), duration);
  }

  /** Move the onset handle; it can never reach past the offset handle. */
  dragOnset(ms: number): void {
    if (!this.draft) return;
    const snapped = this.clampToRecording(this.snap(ms));
    this.draft.onsetMs = Math.min(snapped, this.draft.offsetMs - MIN_DURATION_MS);
    if (this.draft.onsetMs < 0) this.draft.onsetMs = 0;
  }

  /** Move the offset handle; it can never reach past the onset handle. */
  dragOffset(ms: number): void {
    if (!this.draft) return;
    const snapped = this.clampToRecording(this.snap(ms));
    this.draft.offsetMs = Math.max(snapped, this.draft.onsetMs + MIN_DURATION_MS);
  }

  setAus(aus: string[]): void {
    if (this.draft) this.draft.aus = [...aus];
  }

  setEmotion(emotion: string): void {
    if (this.draft) this.draft.emotion = emotion;
  }

  /** Live ME/MaE badge for the current draft. */
  badge(): ExprType | null {
    if (!this.draft) return null;
    return classifyExpression(this.draft.offsetMs - this.draft.onsetMs);
  }

  private async guard<T>(call: () => Promise<T>): Promise<T> {
    try {
      const result = await call();
      this.offline = false;
      return result;
    } catch (error) {
      if (error instanceof OfflineError) this.offline = true;
      else if (error instanceof ConflictError) this.conflictRevision = error.revision;
      throw error;
    }
  }

  /** Accept the selected candidate with the (possibly adjusted) draft. */
  async acceptCurrent(): Promise<Annotation> {
    if (!this.selection || this.selection.kind !== "candidate" || !this.draft) {
      throw new Error("no candidate selected");
    }
    if (this.readOnly) throw new Error("session is read-only");
    const candidate = this.candidates.find((c) => c.id === this.selection!.id)!;
    const adjusted =
      this.draft.onsetMs !== candidate.onset_ms ||
      this.draft.offsetMs !== candidate.offset_ms;
    const source: AnnotationSource = adjusted ? "adjusted" : "detector";
    const response = await this.guard(() =>
      this.api.accept(this.recordingId, candidate.id, {
        revision: this.revision,
        onset_ms: this.draft!.onsetMs,
        offset_ms: this.draft!.offsetMs,
        channel_id: candidate.channel_id,
        aus: this.draft!.aus,
        emotion: this.draft!.emotion,
        source,
      }),
    );
    this.revision = response.revision;
    this.annotations.push(response.annotation);
    this.selection = { kind: "annotation", id: response.annotation.id };
    return response.annotation;
  }

  async rejectCurrent(): Promise<void> {
    if (!this.selection || this.selection.kind !== "candidate") {
      throw new Error("no candidate selected");
    }
    if (this.readOnly) throw new Error("session is read-only");
    const id = this.selection.id;
    const response = await this.guard(() =>
      this.api.reject(this.recordingId, id, this.revision),
    );
    this.revision = response.revision;
    this.rejectedIds.push(id);
    this.selection = null;
    this.draft = null;
    this.next();
  }

  /** Fold the edited draft back into the locally held annotation. */
  applyDraftToAnnotation(): Annotation {
    if (!this.selection || this.selection.kind !== "annotation" || !this.draft) {
      throw new Error("no annotation selected");
    }
    const annotation = this.annotations.find((a) => a.id === this.selection!.id);
    if (!annotation) throw new RangeError(`unknown annotation ${this.selection.id}`);
    const boundsChanged =
      annotation.onset_ms !== this.draft.onsetMs ||
      annotation.offset_ms !== this.draft.offsetMs;
    annotation.onset_ms = this.draft.onsetMs;
    annotation.offset_ms = this.draft.offsetMs;
    annotation.apex_ms = Math.min(
      Math.max(annotation.apex_ms, annotation.onset_ms),
      annotation.offset_ms,
    );
    annotation.aus = [...this.draft.aus];
    annotation.emotion = this.draft.emotion;
    annotation.expr_type = classifyExpression(annotation.offset_ms - annotation.onset_ms);
    if (boundsChanged) annotation.source = "adjusted";
    return annotation;
  }

  /** Persist the full annotation list under optimistic concurrency. */
  async save(): Promise<number> {
    if (this.readOnly) throw new Error("session is read-only");
    const response = await this.guard(() =>
      this.api.putAnnotations(this.recordingId, this.revision, this.annotations),
    );
    this.revision = response.revision;
    return this.revision;
  }

  /** Refetch server state after a conflict (or just to resync). */
  async reload(): Promise<void> {
    const stored = await this.api.annotations(this.recordingId);
    this.annotations = stored.annotations;
    this.revision = stored.revision;
    this.rejectedIds = stored.rejected;
    this.conflictRevision = null;
    this.selection = null;
    this.draft = null;
  }

  /** Annotation list in the interchange format (what PUT persists). */
  exportAnnotations(): Annotation[] {
    return this.annotations.map((a) => ({ ...a, aus: [...a.aus] }));
  }
}
